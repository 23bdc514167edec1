// Copyright 2026 The slicerm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Builders shared by the test binaries.

#pragma once

#include <string>

#include "slicerm/model.hpp"

namespace slicerm::testing {

inline const DeviceKind kP100{DeviceType::kGpu, "P100"};
inline const DeviceKind kP40{DeviceType::kGpu, "P40"};
inline const DeviceKind kSsd{DeviceType::kNvme, "SSD750"};

inline ClusterConfig MakeCluster(int nodes, int p100, int p40 = 0, int nvme = 0,
                                 LatencyParams params = LatencyParams::Defaults()) {
  ClusterConfig c;
  for (int i = 0; i < nodes; ++i) c.nodes.push_back({"node" + std::to_string(i), 10, 128});
  int g = 0;
  for (int i = 0; i < p100; ++i) c.pool.push_back({"gpu" + std::to_string(g++), kP100});
  for (int i = 0; i < p40; ++i) c.pool.push_back({"gpu" + std::to_string(g++), kP40});
  for (int i = 0; i < nvme; ++i) c.pool.push_back({"nvme" + std::to_string(i), kSsd});
  c.link_gbps = 1.0;
  c.image_gb = 3.0;
  c.fabric_params = params;
  return c;
}

// One task per node, each running run_ms.
inline JobSpec MakeJob(const std::string& id, int nodes, int per_node, Millis run_ms,
                       const DeviceKind& kind = kP100) {
  JobSpec j;
  j.id = id;
  j.kind = nodes == 1 ? JobKind::kSingleNode : JobKind::kMultiNode;
  j.slice.node_count = nodes;
  if (per_node > 0) j.slice.devices_per_node.push_back({kind, per_node});
  for (int i = 0; i < nodes; ++i) {
    TaskSpec t;
    t.name = "rank" + std::to_string(i);
    t.node_index = i;
    t.duration = run_ms;
    j.tasks.push_back(t);
  }
  return j;
}

}  // namespace slicerm::testing
