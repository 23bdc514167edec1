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

#include "slicerm/fabric.hpp"

#include <algorithm>

#include "slicerm/errors.hpp"

namespace slicerm {

Fabric::Fabric(const ClusterConfig& cluster) : params_(cluster.fabric_params) {
  for (const auto& n : cluster.nodes) nodes_[n.id];
  for (const auto& d : cluster.pool) devices_.emplace(d.id, d.kind);
}

Fabric::NodeQueue& Fabric::QueueFor(const std::string& node_id) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw FabricError("unknown node '" + node_id + "'");
  return it->second;
}

void Fabric::RequireDevice(const std::string& device_id) const {
  if (!devices_.contains(device_id)) throw FabricError("unknown device '" + device_id + "'");
}

Millis Fabric::Enqueue(NodeQueue& q, Millis now, Millis latency) {
  while (!q.pending.empty() && q.pending.front() <= now) q.pending.pop_front();
  q.tail = std::max(now, q.tail) + latency;
  q.pending.push_back(q.tail);
  return q.tail;
}

Millis Fabric::Attach(const std::string& device_id, const std::string& node_id, Millis now) {
  RequireDevice(device_id);
  auto& q = QueueFor(node_id);
  if (auto it = owner_.find(device_id); it != owner_.end()) {
    throw FabricError("device '" + device_id + "' is already attached to '" + it->second + "'");
  }
  owner_.emplace(device_id, node_id);
  q.attached.push_back(device_id);
  return Enqueue(q, now, params_.attach);
}

Millis Fabric::Detach(const std::string& device_id, const std::string& node_id, Millis now) {
  RequireDevice(device_id);
  auto& q = QueueFor(node_id);
  auto it = owner_.find(device_id);
  if (it == owner_.end()) throw FabricError("device '" + device_id + "' is not attached");
  if (it->second != node_id) {
    throw FabricError("device '" + device_id + "' is attached to '" + it->second +
                      "', not '" + node_id + "'");
  }
  owner_.erase(it);
  std::erase(q.attached, device_id);
  return Enqueue(q, now, params_.detach);
}

std::vector<std::string> Fabric::AttachmentsOf(const std::string& node_id) const {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw FabricError("unknown node '" + node_id + "'");
  return it->second.attached;
}

std::optional<std::string> Fabric::OwnerOf(const std::string& device_id) const {
  RequireDevice(device_id);
  if (auto it = owner_.find(device_id); it != owner_.end()) return it->second;
  return std::nullopt;
}

int Fabric::QueueDepth(const std::string& node_id, Millis now) const {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw FabricError("unknown node '" + node_id + "'");
  const auto& pending = it->second.pending;
  return static_cast<int>(std::count_if(pending.begin(), pending.end(),
                                        [&](Millis t) { return t > now; }));
}

double Fabric::EffectiveBandwidth(double local_gbps) const {
  if (!(local_gbps > 0.0)) throw ValidationError("local bandwidth must be > 0");
  return local_gbps * params_.bandwidth_ratio;
}

FabricSnapshot Fabric::Snapshot() const {
  FabricSnapshot out(owner_.begin(), owner_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return NaturalLess(a.first, b.first); });
  return out;
}

}  // namespace slicerm
