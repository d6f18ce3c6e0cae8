/*
 * Copyright 2026 The affsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "affsim/topology.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>
#include <initializer_list>

#include "affsim/error.hpp"

namespace affsim {

MachineTopology MachineTopology::from_domain_sizes(const std::vector<std::vector<int>>& domain_sizes) {
  if (domain_sizes.empty()) throw ValidationError("topology: at least one socket is required");
  MachineTopology t;
  CoreId next_core = 0;
  for (std::size_t s = 0; s < domain_sizes.size(); ++s) {
    if (domain_sizes[s].empty())
      throw ValidationError("topology: socket " + std::to_string(s) + " has no LLC domains");
    SocketSpec socket;
    for (int size : domain_sizes[s]) {
      if (size <= 0)
        throw ValidationError("topology: LLC domain " + std::to_string(t.domains_.size()) + " on socket " +
                              std::to_string(s) + " has zero cores");
      LlcDomain d;
      d.domain_id = static_cast<int>(t.domains_.size());
      for (int i = 0; i < size; ++i) {
        d.cores.push_back(next_core++);
        t.core_domain_.push_back(d.domain_id);
        t.core_socket_.push_back(static_cast<int>(s));
      }
      t.domains_.push_back(d);
      socket.llc_domains.push_back(std::move(d));
    }
    socket.monolithic_llc = socket.llc_domains.size() == 1;
    t.sockets_.push_back(std::move(socket));
  }
  return t;
}

MachineTopology MachineTopology::uniform(int sockets, int domains_per_socket, int cores_per_domain) {
  if (sockets <= 0) throw ValidationError("topology: sockets must be >= 1");
  if (domains_per_socket <= 0) throw ValidationError("topology: llc_domains_per_socket must be >= 1");
  if (cores_per_domain <= 0) throw ValidationError("topology: cores_per_domain must be >= 1 (zero cores)");
  return from_domain_sizes(std::vector<std::vector<int>>(
      static_cast<std::size_t>(sockets), std::vector<int>(static_cast<std::size_t>(domains_per_socket), cores_per_domain)));
}

const LlcDomain& MachineTopology::domain(int domain_id) const {
  if (domain_id < 0 || domain_id >= domain_count())
    throw ValidationError("topology: domain " + std::to_string(domain_id) + " out of range");
  return domains_[static_cast<std::size_t>(domain_id)];
}

int MachineTopology::llc_domain_of(CoreId core) const {
  if (core < 0 || core >= total_cores())
    throw ValidationError("topology: core " + std::to_string(core) + " out of range [0, " +
                          std::to_string(total_cores()) + ")");
  return core_domain_[static_cast<std::size_t>(core)];
}

int MachineTopology::socket_of(CoreId core) const {
  if (core < 0 || core >= total_cores())
    throw ValidationError("topology: core " + std::to_string(core) + " out of range [0, " +
                          std::to_string(total_cores()) + ")");
  return core_socket_[static_cast<std::size_t>(core)];
}

bool MachineTopology::is_split_llc() const {
  for (const auto& s : sockets_)
    if (!s.monolithic_llc) return true;
  return false;
}

std::vector<std::vector<int>> MachineTopology::domain_sizes() const {
  std::vector<std::vector<int>> out;
  for (const auto& s : sockets_) {
    auto& row = out.emplace_back();
    for (const auto& d : s.llc_domains) row.push_back(d.capacity());
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// A count optionally followed by one of `units` ("4 chiplets").
int parse_count(std::string_view token, const char* field, std::initializer_list<std::string_view> units) {
  token = trim(token);
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  auto fail = [&] {
    return ParseError(std::string("topology: cannot parse ") + field + " from '" + std::string(token) + "'");
  };
  if (token.empty() || ec != std::errc{}) throw fail();
  const auto unit = trim(token.substr(static_cast<std::size_t>(ptr - token.data())));
  if (!unit.empty() && std::find(units.begin(), units.end(), unit) == units.end()) throw fail();
  return value;
}

int json_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ParseError(std::string("topology: field '") + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

MachineTopology build_topology(std::string_view spec) {
  // Accept 'x', 'X', '*' and the UTF-8 multiplication sign as separators.
  std::string normalized;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec.compare(i, 2, "\xC3\x97") == 0) {
      normalized += 'x';
      ++i;
    } else if (spec[i] == 'X' || spec[i] == '*') {
      normalized += 'x';
    } else {
      normalized += spec[i];
    }
  }
  std::vector<std::string_view> parts;
  std::string_view rest = normalized;
  while (true) {
    auto pos = rest.find('x');
    parts.push_back(rest.substr(0, pos));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  if (parts.size() != 3)
    throw ParseError("topology: expected 'sockets x llc_domains_per_socket x cores_per_domain', got '" +
                     std::string(spec) + "'");
  return MachineTopology::uniform(parse_count(parts[0], "sockets", {"socket", "sockets"}),
                                  parse_count(parts[1], "llc_domains_per_socket",
                                              {"chiplet", "chiplets", "domain", "domains", "llc", "llcs"}),
                                  parse_count(parts[2], "cores_per_domain", {"core", "cores"}));
}

MachineTopology topology_from_json(const nlohmann::json& j) {
  if (j.is_string()) return build_topology(j.get<std::string>());
  if (!j.is_object()) throw ParseError("topology: expected an object or a 'SxDxC' string");
  for (const auto& [key, _] : j.items()) {
    if (key != "sockets" && key != "llc_domains_per_socket" && key != "cores_per_domain" && key != "domain_sizes")
      throw ParseError("topology: unknown key '" + key + "'");
  }
  if (j.contains("domain_sizes")) {
    if (j.size() != 1) throw ParseError("topology: 'domain_sizes' cannot be combined with per-level counts");
    const auto& ds = j.at("domain_sizes");
    if (!ds.is_array()) throw ParseError("topology: field 'domain_sizes' must be an array of arrays");
    std::vector<std::vector<int>> sizes;
    for (const auto& socket : ds) {
      if (!socket.is_array()) throw ParseError("topology: field 'domain_sizes' must be an array of arrays");
      auto& row = sizes.emplace_back();
      for (const auto& n : socket) {
        if (!n.is_number_integer()) throw ParseError("topology: field 'domain_sizes' entries must be integers");
        row.push_back(n.get<int>());
      }
    }
    return MachineTopology::from_domain_sizes(sizes);
  }
  for (const char* key : {"sockets", "llc_domains_per_socket", "cores_per_domain"})
    if (!j.contains(key)) throw ParseError(std::string("topology: missing field '") + key + "'");
  return MachineTopology::uniform(json_count(j, "sockets"), json_count(j, "llc_domains_per_socket"),
                                  json_count(j, "cores_per_domain"));
}

nlohmann::json topology_to_json(const MachineTopology& topo) {
  return nlohmann::json{{"domain_sizes", topo.domain_sizes()}};
}

}  // namespace affsim
