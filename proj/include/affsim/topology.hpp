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

#pragma once

#include <string_view>
#include <vector>

#include "json.hpp"

#include "affsim/core_set.hpp"
#include "affsim/units.hpp"

namespace affsim {

/// A group of cores sharing one last-level cache slice (a chiplet).
struct LlcDomain {
  int domain_id = 0;
  std::vector<CoreId> cores;

  int capacity() const { return static_cast<int>(cores.size()); }
  bool operator==(const LlcDomain&) const = default;
};

struct SocketSpec {
  std::vector<LlcDomain> llc_domains;
  bool monolithic_llc = false;

  bool operator==(const SocketSpec&) const = default;
};

/// Sockets -> LLC domains -> cores. Core ids are canonical: socket-major,
/// then domain-major, then position within the domain. Immutable once built.
class MachineTopology {
 public:
  /// `domain_sizes[s][d]` is the core count of domain d on socket s.
  static MachineTopology from_domain_sizes(const std::vector<std::vector<int>>& domain_sizes);
  static MachineTopology uniform(int sockets, int domains_per_socket, int cores_per_domain);

  const std::vector<SocketSpec>& sockets() const { return sockets_; }
  int total_cores() const { return static_cast<int>(core_domain_.size()); }
  int domain_count() const { return static_cast<int>(domains_.size()); }
  const LlcDomain& domain(int domain_id) const;
  const std::vector<LlcDomain>& domains() const { return domains_; }

  int llc_domain_of(CoreId core) const;
  int socket_of(CoreId core) const;
  bool same_llc(CoreId a, CoreId b) const { return llc_domain_of(a) == llc_domain_of(b); }

  /// True when any socket is split into several LLC domains.
  bool is_split_llc() const;
  CoreSet all_cores() const { return CoreSet::range(0, total_cores()); }
  CoreSet cores_of_domain(int domain_id) const { return CoreSet::of(domain(domain_id).cores); }

  /// Domain sizes per socket, the inverse of from_domain_sizes.
  std::vector<std::vector<int>> domain_sizes() const;

  bool operator==(const MachineTopology&) const = default;

 private:
  std::vector<SocketSpec> sockets_;
  std::vector<LlcDomain> domains_;
  std::vector<int> core_domain_;
  std::vector<int> core_socket_;
};

/// Parses "SxDxC" with optional unit words ("1x4x8", "1 socket × 4 chiplets × 8 cores").
MachineTopology build_topology(std::string_view spec);

/// Accepts either {"sockets": S, "llc_domains_per_socket": D, "cores_per_domain": C}
/// or {"domain_sizes": [[8, 8], [8, 8]]}. Unknown keys are rejected.
MachineTopology topology_from_json(const nlohmann::json& j);
nlohmann::json topology_to_json(const MachineTopology& topo);

}  // namespace affsim
