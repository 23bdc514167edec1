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

#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slicerm/model.hpp"

namespace slicerm {

// Device -> node attachments, sorted by device id (natural order).
using FabricSnapshot = std::vector<std::pair<std::string, std::string>>;

// Simulated PCIe-over-Ethernet fabric. A device is attached to at most one
// node at a time. Attach and detach operations aimed at the same node are
// executed one after another; operations on different nodes overlap.
//
// An attachment is recorded when the operation is issued, and a detach
// releases the device at issue time as well; the returned completion time is
// when the hardware operation finishes.
class Fabric {
 public:
  explicit Fabric(const ClusterConfig& cluster);

  // Returns the completion time: max(now, last queued op on node) + attach.
  // Throws FabricError if the device is already attached or an id is unknown.
  Millis Attach(const std::string& device_id, const std::string& node_id, Millis now);

  // Throws FabricError unless the device is attached to exactly this node.
  Millis Detach(const std::string& device_id, const std::string& node_id, Millis now);

  // Devices attached to the node, in attach order.
  std::vector<std::string> AttachmentsOf(const std::string& node_id) const;

  std::optional<std::string> OwnerOf(const std::string& device_id) const;

  // Attach/detach operations on the node that have not completed by `now`.
  int QueueDepth(const std::string& node_id, Millis now) const;

  // local_gbps x bandwidth_ratio; throws ValidationError if local_gbps <= 0.
  double EffectiveBandwidth(double local_gbps) const;

  int PoolSize() const { return static_cast<int>(devices_.size()); }
  int AttachedCount() const { return static_cast<int>(owner_.size()); }
  int FreeCount() const { return PoolSize() - AttachedCount(); }

  FabricSnapshot Snapshot() const;

 private:
  struct NodeQueue {
    std::vector<std::string> attached;  // attach order
    Millis tail = 0;                    // completion of the last queued op
    std::deque<Millis> pending;         // completion times, nondecreasing
  };

  NodeQueue& QueueFor(const std::string& node_id);
  Millis Enqueue(NodeQueue& q, Millis now, Millis latency);
  void RequireDevice(const std::string& device_id) const;

  LatencyParams params_;
  std::map<std::string, DeviceKind> devices_;
  std::map<std::string, NodeQueue> nodes_;
  std::map<std::string, std::string> owner_;  // device -> node
};

}  // namespace slicerm
