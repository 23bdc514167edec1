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

// Domain model shared by every slicerm component: the physical cluster
// (compute nodes plus a pool of disaggregated devices), the user's slice and
// job requests, and the per-slice lifecycle timeline.

#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slicerm/time.hpp"

namespace slicerm {

enum class DeviceType { kGpu, kNvme };

std::string_view DeviceTypeName(DeviceType type);
// Accepts "GPU" / "NVME"; throws ValidationError otherwise.
DeviceType ParseDeviceType(std::string_view name);

// A device class. Requests match on (type, model) exactly, so "GPU/P100" is
// never satisfied by a P40.
struct DeviceKind {
  DeviceType type = DeviceType::kGpu;
  std::string model;

  std::string ToString() const;  // "GPU/P100"
  auto operator<=>(const DeviceKind&) const = default;
};

struct Device {
  std::string id;
  DeviceKind kind;

  bool operator==(const Device&) const = default;
};

struct NodeSpec {
  std::string id;
  int cpu_cores = 1;
  int memory_gb = 1;

  bool operator==(const NodeSpec&) const = default;
};

// Timing model of the fabric and the slice lifecycle. All latencies are
// stored in milliseconds (documents carry decimal seconds).
struct LatencyParams {
  Millis attach = 0;             // per device, serialized per node
  Millis detach = 0;             // per device, serialized per node
  Millis machine_boot = 0;       // per node, before the image download
  Millis prepare = 0;            // per node, parallel across nodes
  Millis launch_per_device = 0;  // per attached device, serialized per node
  Millis destroy = 0;            // per node, parallel across nodes
  // Host-to-device bandwidth through the fabric as a fraction of local PCIe.
  double bandwidth_ratio = 0.2;

  // The calibrated defaults shipped with the bundled scenarios.
  static LatencyParams Defaults();

  void Validate() const;
  bool operator==(const LatencyParams&) const = default;
};

struct ClusterConfig {
  std::vector<NodeSpec> nodes;
  std::vector<Device> pool;
  double link_gbps = 1.0;  // shared management network
  double image_gb = 0.0;   // container image, gigabytes
  LatencyParams fabric_params = LatencyParams::Defaults();

  const NodeSpec* FindNode(std::string_view id) const;
  const Device* FindDevice(std::string_view id) const;
  // Number of pool devices of the given class.
  int Inventory(const DeviceKind& kind) const;

  void Validate() const;
  bool operator==(const ClusterConfig&) const = default;
};

struct DeviceRequest {
  DeviceKind kind;
  int count = 0;

  bool operator==(const DeviceRequest&) const = default;
};

struct SliceSpec {
  int node_count = 1;
  // Identical device set attached to every node of the slice.
  std::vector<DeviceRequest> devices_per_node;
  // Devices requested for the slice as a whole, spread round-robin over its
  // nodes in node order (one per node while they last).
  std::vector<DeviceRequest> devices_per_slice;

  // Total devices of a class the slice needs.
  int Demand(const DeviceKind& kind) const;
  // Every class mentioned by the request, without duplicates, sorted.
  std::vector<DeviceKind> Classes() const;
  // "<n>node-<m>gpu" where m counts GPUs per node.
  std::string Name() const;

  void Validate() const;
  bool operator==(const SliceSpec&) const = default;
};

struct TaskSpec {
  std::string name;
  std::optional<Millis> duration;     // simulated mode
  std::optional<std::string> command;  // subprocess mode
  int node_index = 0;                  // placement within the slice
  std::optional<Millis> timeout;
  // Simulated mode only: the task ends after `duration` with FAILED status.
  bool fail = false;

  bool operator==(const TaskSpec&) const = default;
};

enum class JobKind { kSingleNode, kMultiNode };

std::string_view JobKindName(JobKind kind);

struct JobSpec {
  std::string id;
  SliceSpec slice;
  std::vector<TaskSpec> tasks;
  JobKind kind = JobKind::kMultiNode;

  void Validate() const;
  bool operator==(const JobSpec&) const = default;
};

// Lifecycle phases in execution order.
enum class Phase {
  kAttachDevice,
  kLaunchMachine,
  kPrepareTask,
  kLaunchTask,
  kRunTask,
  kDetachDevice,
  kDestroyMachine,
};

inline constexpr int kPhaseCount = 7;
inline constexpr std::array<Phase, kPhaseCount> kAllPhases = {
    Phase::kAttachDevice, Phase::kLaunchMachine, Phase::kPrepareTask,
    Phase::kLaunchTask,   Phase::kRunTask,       Phase::kDetachDevice,
    Phase::kDestroyMachine};

std::string_view PhaseName(Phase phase);  // "attach_device"
Phase ParsePhase(std::string_view name);

struct Interval {
  Millis start = 0;
  Millis end = 0;

  Millis Duration() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

struct Timeline {
  std::array<Interval, kPhaseCount> phases{};

  const Interval& operator[](Phase p) const {
    return phases[static_cast<int>(p)];
  }
  Interval& operator[](Phase p) { return phases[static_cast<int>(p)]; }

  Millis Start() const { return phases.front().start; }
  Millis End() const { return phases.back().end; }
  Millis Makespan() const { return End() - Start(); }

  // Throws ValidationError on an inverted interval or a gap between phases.
  void Validate() const;
  bool operator==(const Timeline&) const = default;
};

struct Breakdown {
  std::array<Millis, kPhaseCount> durations{};
  Millis makespan = 0;
  // attach_device + launch_machine + detach_device + destroy_machine.
  Millis construction_destruction = 0;
  double overhead_fraction = 0.0;
};

// Throws ValidationError for a malformed timeline or zero makespan.
Breakdown ComputeBreakdown(const Timeline& timeline);

struct Feasibility {
  bool feasible = true;
  std::string violation;  // first violated constraint, empty when feasible

  explicit operator bool() const { return feasible; }
};

// Whether the slice could ever be satisfied by the cluster's inventory.
Feasibility CheckFeasible(const SliceSpec& spec, const ClusterConfig& cluster);

// Ordering on ids that compares embedded digit runs numerically, so that
// "gpu2" < "gpu10". Used for lowest-id-first tie breaking.
bool NaturalLess(std::string_view a, std::string_view b);

}  // namespace slicerm
