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

#include "slicerm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "slicerm/errors.hpp"

namespace slicerm {

std::string FormatSeconds(Millis ms) {
  char buf[48];
  const char* sign = ms < 0 ? "-" : "";
  const Millis abs = ms < 0 ? -ms : ms;
  std::snprintf(buf, sizeof(buf), "%s%lld.%03lld", sign,
                static_cast<long long>(abs / 1000),
                static_cast<long long>(abs % 1000));
  return buf;
}

std::string_view DeviceTypeName(DeviceType type) {
  switch (type) {
    case DeviceType::kGpu:
      return "GPU";
    case DeviceType::kNvme:
      return "NVME";
  }
  return "?";
}

DeviceType ParseDeviceType(std::string_view name) {
  if (name == "GPU") return DeviceType::kGpu;
  if (name == "NVME") return DeviceType::kNvme;
  throw ValidationError("unknown device kind '" + std::string(name) + "'");
}

std::string DeviceKind::ToString() const {
  return std::string(DeviceTypeName(type)) + "/" + model;
}

LatencyParams LatencyParams::Defaults() {
  // Produced by slicerm-calibrate against the bundled MNIST scenario; see
  // scenarios/testbed-cluster.json, which carries the same values.
  LatencyParams p;
  p.attach = 500;
  p.detach = 500;
  p.machine_boot = 120000;
  p.prepare = 5000;
  p.launch_per_device = 30000;
  p.destroy = 10000;
  p.bandwidth_ratio = 0.2;
  return p;
}

void LatencyParams::Validate() const {
  for (Millis v : {attach, detach, machine_boot, prepare, launch_per_device,
                   destroy}) {
    if (v < 0) throw ValidationError("latency parameters must be >= 0");
  }
  if (!(bandwidth_ratio > 0.0 && bandwidth_ratio <= 1.0)) {
    throw ValidationError("bandwidth_ratio must be in (0, 1]");
  }
}

const NodeSpec* ClusterConfig::FindNode(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const Device* ClusterConfig::FindDevice(std::string_view id) const {
  for (const auto& d : pool) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

int ClusterConfig::Inventory(const DeviceKind& kind) const {
  return static_cast<int>(std::count_if(
      pool.begin(), pool.end(), [&](const Device& d) { return d.kind == kind; }));
}

void ClusterConfig::Validate() const {
  if (nodes.empty()) throw ValidationError("cluster has no nodes");
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (n.id.empty()) throw ValidationError("node id is empty");
    if (n.cpu_cores < 1) throw ValidationError("node " + n.id + ": cpu_cores must be >= 1");
    if (n.memory_gb < 1) throw ValidationError("node " + n.id + ": memory_gb must be >= 1");
    if (!ids.insert(n.id).second) throw ValidationError("duplicate id '" + n.id + "'");
  }
  for (const auto& d : pool) {
    if (d.id.empty()) throw ValidationError("device id is empty");
    if (d.kind.model.empty()) throw ValidationError("device " + d.id + ": model is empty");
    if (!ids.insert(d.id).second) throw ValidationError("duplicate id '" + d.id + "'");
  }
  if (!(link_gbps > 0.0)) throw ValidationError("link_gbps must be > 0");
  if (!(image_gb >= 0.0)) throw ValidationError("image_gb must be >= 0");
  fabric_params.Validate();
}

int SliceSpec::Demand(const DeviceKind& kind) const {
  int total = 0;
  for (const auto& r : devices_per_node) {
    if (r.kind == kind) total += r.count * node_count;
  }
  for (const auto& r : devices_per_slice) {
    if (r.kind == kind) total += r.count;
  }
  return total;
}

std::vector<DeviceKind> SliceSpec::Classes() const {
  std::set<DeviceKind> classes;
  for (const auto& r : devices_per_node) classes.insert(r.kind);
  for (const auto& r : devices_per_slice) classes.insert(r.kind);
  return {classes.begin(), classes.end()};
}

std::string SliceSpec::Name() const {
  int gpus = 0;
  for (const auto& r : devices_per_node) {
    if (r.kind.type == DeviceType::kGpu) gpus += r.count;
  }
  return std::to_string(node_count) + "node-" + std::to_string(gpus) + "gpu";
}

void SliceSpec::Validate() const {
  if (node_count < 1) throw ValidationError("node_count must be >= 1");
  for (const auto* list : {&devices_per_node, &devices_per_slice}) {
    std::set<DeviceKind> seen;
    for (const auto& r : *list) {
      if (r.count < 0) throw ValidationError("device count must be >= 0");
      if (r.kind.model.empty()) throw ValidationError("device model is empty");
      if (!seen.insert(r.kind).second) {
        throw ValidationError("device class " + r.kind.ToString() +
                              " requested twice");
      }
    }
  }
}

std::string_view JobKindName(JobKind kind) {
  return kind == JobKind::kSingleNode ? "SINGLE_NODE" : "MULTI_NODE";
}

void JobSpec::Validate() const {
  if (id.empty()) throw ValidationError("job id is empty");
  slice.Validate();
  if (tasks.empty()) throw ValidationError("job " + id + " has no tasks");
  std::set<std::string> names;
  for (const auto& t : tasks) {
    if (t.name.empty()) throw ValidationError("task name is empty");
    if (!names.insert(t.name).second) {
      throw ValidationError("duplicate task name '" + t.name + "'");
    }
    if (t.duration.has_value() == t.command.has_value()) {
      throw ValidationError("task " + t.name +
                            ": exactly one of duration_s / command is required");
    }
    if (t.duration && *t.duration < 0) {
      throw ValidationError("task " + t.name + ": duration_s must be >= 0");
    }
    if (t.timeout && *t.timeout <= 0) {
      throw ValidationError("task " + t.name + ": timeout_s must be > 0");
    }
    if (t.node_index < 0 || t.node_index >= slice.node_count) {
      throw ValidationError("task " + t.name + ": node index out of range");
    }
  }
  if (kind == JobKind::kSingleNode) {
    if (slice.node_count != 1) {
      throw ValidationError("SINGLE_NODE job requires node_count 1");
    }
  } else {
    if (static_cast<int>(tasks.size()) != slice.node_count) {
      throw ValidationError("MULTI_NODE job needs one task per node (" +
                            std::to_string(slice.node_count) + " nodes, " +
                            std::to_string(tasks.size()) + " tasks)");
    }
    std::vector<bool> used(slice.node_count, false);
    for (const auto& t : tasks) {
      if (used[t.node_index]) {
        throw ValidationError("MULTI_NODE job places two tasks on node index " +
                              std::to_string(t.node_index));
      }
      used[t.node_index] = true;
    }
  }
}

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kAttachDevice:
      return "attach_device";
    case Phase::kLaunchMachine:
      return "launch_machine";
    case Phase::kPrepareTask:
      return "prepare_task";
    case Phase::kLaunchTask:
      return "launch_task";
    case Phase::kRunTask:
      return "run_task";
    case Phase::kDetachDevice:
      return "detach_device";
    case Phase::kDestroyMachine:
      return "destroy_machine";
  }
  return "?";
}

Phase ParsePhase(std::string_view name) {
  for (Phase p : kAllPhases) {
    if (PhaseName(p) == name) return p;
  }
  throw ValidationError("unknown phase '" + std::string(name) + "'");
}

void Timeline::Validate() const {
  for (int i = 0; i < kPhaseCount; ++i) {
    const auto& iv = phases[i];
    const auto name = std::string(PhaseName(kAllPhases[i]));
    if (iv.end < iv.start) throw ValidationError("phase " + name + " ends before it starts");
    if (i > 0 && iv.start != phases[i - 1].end) {
      throw ValidationError("gap before phase " + name);
    }
  }
}

Breakdown ComputeBreakdown(const Timeline& timeline) {
  timeline.Validate();
  Breakdown b;
  for (int i = 0; i < kPhaseCount; ++i) b.durations[i] = timeline.phases[i].Duration();
  b.makespan = timeline.Makespan();
  if (b.makespan <= 0) throw ValidationError("zero makespan: overhead fraction undefined");
  b.construction_destruction = timeline[Phase::kAttachDevice].Duration() +
                               timeline[Phase::kLaunchMachine].Duration() +
                               timeline[Phase::kDetachDevice].Duration() +
                               timeline[Phase::kDestroyMachine].Duration();
  b.overhead_fraction = static_cast<double>(b.construction_destruction) /
                        static_cast<double>(b.makespan);
  return b;
}

Feasibility CheckFeasible(const SliceSpec& spec, const ClusterConfig& cluster) {
  const int nodes = static_cast<int>(cluster.nodes.size());
  if (spec.node_count > nodes) {
    return {false, "node_count exceeds cluster (" + std::to_string(spec.node_count) +
                       " > " + std::to_string(nodes) + ")"};
  }
  for (const auto& kind : spec.Classes()) {
    const int need = spec.Demand(kind);
    const int have = cluster.Inventory(kind);
    if (need > have) {
      return {false, kind.ToString() + " demand exceeds pool (" + std::to_string(need) +
                         " > " + std::to_string(have) + ")"};
    }
  }
  return {};
}

bool NaturalLess(std::string_view a, std::string_view b) {
  size_t i = 0, j = 0;
  auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  while (i < a.size() && j < b.size()) {
    if (digit(a[i]) && digit(b[j])) {
      size_t ie = i, je = j;
      while (ie < a.size() && digit(a[ie])) ++ie;
      while (je < b.size() && digit(b[je])) ++je;
      // Compare numerically without overflow: strip zeros, then by length.
      size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const auto na = a.substr(is, ie - is), nb = b.substr(js, je - js);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      if (ie - i != je - j) return ie - i > je - j;  // "x01" before "x1"
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace slicerm
