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

#include "slicerm/json_io.hpp"

#include <algorithm>

#include "slicerm/errors.hpp"

namespace slicerm {
namespace {

// Runs a decoder, turning nlohmann type/lookup errors into ParseError.
template <typename F>
auto Decode(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed ") + what + ": " + e.what());
  }
}

void RequireObject(const Json& doc, const char* what) {
  if (!doc.is_object()) throw ParseError(std::string(what) + " must be a JSON object");
}

Millis SecondsField(const Json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ParseError(std::string(key) + " must be a number");
  return ToMillis(v.get<double>());
}

DeviceKind KindFromJson(const Json& doc) {
  return DeviceKind{ParseDeviceType(doc.at("kind").get<std::string>()),
                    doc.at("model").get<std::string>()};
}

std::vector<DeviceRequest> RequestsFromJson(const Json& list) {
  std::vector<DeviceRequest> out;
  for (const auto& r : list) {
    RequireObject(r, "device request");
    out.push_back({KindFromJson(r), r.at("count").get<int>()});
  }
  return out;
}

Json RequestsToJson(const std::vector<DeviceRequest>& list) {
  Json out = Json::array();
  for (const auto& r : list) {
    out.push_back({{"kind", DeviceTypeName(r.kind.type)},
                   {"model", r.kind.model},
                   {"count", r.count}});
  }
  return out;
}

// "devices_per_node" is either one request list shared by every node, or a
// list of per-node lists. The second form is accepted only when all nodes ask
// for the same devices: slices are homogeneous.
std::vector<DeviceRequest> PerNodeFromJson(const Json& doc, int node_count) {
  if (!doc.is_array()) throw ParseError("devices_per_node must be an array");
  if (doc.empty() || !doc.front().is_array()) return RequestsFromJson(doc);
  if (static_cast<int>(doc.size()) != node_count) {
    throw ValidationError("devices_per_node lists " + std::to_string(doc.size()) +
                          " nodes but node_count is " + std::to_string(node_count));
  }
  auto canonical = [](std::vector<DeviceRequest> v) {
    std::erase_if(v, [](const DeviceRequest& r) { return r.count == 0; });
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.kind < b.kind; });
    return v;
  };
  auto first = RequestsFromJson(doc.front());
  for (const auto& node : doc) {
    if (!node.is_array()) throw ParseError("devices_per_node entries must be arrays");
    if (canonical(RequestsFromJson(node)) != canonical(first)) {
      throw ValidationError("heterogeneous per-node device request: every node of a "
                            "slice must request the same devices");
    }
  }
  return first;
}

}  // namespace

Json ParseJsonText(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("syntax error: ") + e.what());
  }
}

LatencyParams LatencyFromJson(const Json& doc, LatencyParams base) {
  RequireObject(doc, "fabric_params");
  return Decode("fabric_params", [&] {
    auto field = [&](const char* key, Millis& out) {
      if (doc.contains(key)) out = SecondsField(doc, key);
    };
    field("attach_s", base.attach);
    field("detach_s", base.detach);
    field("machine_boot_s", base.machine_boot);
    field("prepare_s", base.prepare);
    field("launch_per_device_s", base.launch_per_device);
    field("destroy_s", base.destroy);
    if (doc.contains("bandwidth_ratio")) base.bandwidth_ratio = doc.at("bandwidth_ratio").get<double>();
    return base;
  });
}

Json LatencyToJson(const LatencyParams& p) {
  return {{"attach_s", ToSeconds(p.attach)},
          {"detach_s", ToSeconds(p.detach)},
          {"machine_boot_s", ToSeconds(p.machine_boot)},
          {"prepare_s", ToSeconds(p.prepare)},
          {"launch_per_device_s", ToSeconds(p.launch_per_device)},
          {"destroy_s", ToSeconds(p.destroy)},
          {"bandwidth_ratio", p.bandwidth_ratio}};
}

ClusterConfig ClusterFromJson(const Json& doc) {
  RequireObject(doc, "cluster config");
  ClusterConfig c = Decode("cluster config", [&] {
    ClusterConfig out;
    for (const auto& n : doc.at("nodes")) {
      RequireObject(n, "node");
      out.nodes.push_back({n.at("id").get<std::string>(), n.value("cpu_cores", 1),
                           n.value("memory_gb", 1)});
    }
    if (doc.contains("pool")) {
      for (const auto& d : doc.at("pool")) {
        RequireObject(d, "device");
        out.pool.push_back({d.at("id").get<std::string>(), KindFromJson(d)});
      }
    }
    out.link_gbps = doc.at("link_gbps").get<double>();
    out.image_gb = doc.value("image_gb", 0.0);
    if (doc.contains("fabric_params")) {
      out.fabric_params = LatencyFromJson(doc.at("fabric_params"), LatencyParams::Defaults());
    }
    return out;
  });
  c.Validate();
  return c;
}

Json ClusterToJson(const ClusterConfig& c) {
  Json nodes = Json::array();
  for (const auto& n : c.nodes) {
    nodes.push_back({{"id", n.id}, {"cpu_cores", n.cpu_cores}, {"memory_gb", n.memory_gb}});
  }
  Json pool = Json::array();
  for (const auto& d : c.pool) {
    pool.push_back({{"id", d.id}, {"kind", DeviceTypeName(d.kind.type)}, {"model", d.kind.model}});
  }
  return {{"nodes", nodes},
          {"pool", pool},
          {"link_gbps", c.link_gbps},
          {"image_gb", c.image_gb},
          {"fabric_params", LatencyToJson(c.fabric_params)}};
}

ClusterConfig ParseClusterConfig(std::string_view text) {
  return ClusterFromJson(ParseJsonText(text));
}

JobSpec JobFromJson(const Json& doc) {
  RequireObject(doc, "job");
  JobSpec job = Decode("job", [&] {
    JobSpec out;
    out.id = doc.value("id", std::string());
    const auto& s = doc.at("slice");
    RequireObject(s, "slice");
    out.slice.node_count = s.at("node_count").get<int>();
    if (s.contains("devices_per_node")) {
      out.slice.devices_per_node = PerNodeFromJson(s.at("devices_per_node"), out.slice.node_count);
    }
    if (s.contains("devices_per_slice")) {
      out.slice.devices_per_slice = RequestsFromJson(s.at("devices_per_slice"));
    }
    if (doc.contains("kind")) {
      const auto kind = doc.at("kind").get<std::string>();
      if (kind == "SINGLE_NODE") {
        out.kind = JobKind::kSingleNode;
      } else if (kind == "MULTI_NODE") {
        out.kind = JobKind::kMultiNode;
      } else {
        throw ValidationError("unknown job kind '" + kind + "'");
      }
    } else {
      out.kind = out.slice.node_count == 1 ? JobKind::kSingleNode : JobKind::kMultiNode;
    }
    const auto& tasks = doc.at("tasks");
    if (!tasks.is_array()) throw ParseError("tasks must be an array");
    for (size_t i = 0; i < tasks.size(); ++i) {
      const auto& t = tasks[i];
      RequireObject(t, "task");
      TaskSpec task;
      task.name = t.value("name", "task" + std::to_string(i));
      if (t.contains("duration_s")) task.duration = SecondsField(t, "duration_s");
      if (t.contains("command")) task.command = t.at("command").get<std::string>();
      if (t.contains("timeout_s")) task.timeout = SecondsField(t, "timeout_s");
      task.fail = t.value("fail", false);
      const int default_index = out.kind == JobKind::kMultiNode ? static_cast<int>(i) : 0;
      task.node_index = t.value("node_index", default_index);
      out.tasks.push_back(std::move(task));
    }
    return out;
  });
  // The service assigns ids to anonymous submissions; everything else must
  // already hold.
  if (job.id.empty()) {
    job.id = "_";
    job.Validate();
    job.id.clear();
  } else {
    job.Validate();
  }
  return job;
}

Json JobToJson(const JobSpec& job) {
  Json tasks = Json::array();
  for (const auto& t : job.tasks) {
    Json o = {{"name", t.name}, {"node_index", t.node_index}};
    if (t.duration) o["duration_s"] = ToSeconds(*t.duration);
    if (t.command) o["command"] = *t.command;
    if (t.timeout) o["timeout_s"] = ToSeconds(*t.timeout);
    if (t.fail) o["fail"] = true;
    tasks.push_back(std::move(o));
  }
  Json slice = {{"node_count", job.slice.node_count},
                {"devices_per_node", RequestsToJson(job.slice.devices_per_node)}};
  if (!job.slice.devices_per_slice.empty()) {
    slice["devices_per_slice"] = RequestsToJson(job.slice.devices_per_slice);
  }
  return {{"id", job.id}, {"kind", JobKindName(job.kind)}, {"slice", slice}, {"tasks", tasks}};
}

JobSpec ParseJobSpec(std::string_view text) { return JobFromJson(ParseJsonText(text)); }

Json TimelineToJson(const Timeline& t) {
  Json phases = Json::array();
  for (Phase p : kAllPhases) {
    phases.push_back({{"phase", PhaseName(p)},
                      {"start_s", ToSeconds(t[p].start)},
                      {"end_s", ToSeconds(t[p].end)}});
  }
  return {{"phases", phases}, {"makespan_s", ToSeconds(t.Makespan())}};
}

Timeline TimelineFromJson(const Json& doc) {
  RequireObject(doc, "timeline");
  Timeline t = Decode("timeline", [&] {
    Timeline out;
    const auto& phases = doc.at("phases");
    if (!phases.is_array() || phases.size() != kPhaseCount) {
      throw ParseError("timeline must list exactly 7 phases");
    }
    for (int i = 0; i < kPhaseCount; ++i) {
      const auto& p = phases[i];
      if (ParsePhase(p.at("phase").get<std::string>()) != kAllPhases[i]) {
        throw ValidationError("timeline phases out of order");
      }
      out.phases[i] = {SecondsField(p, "start_s"), SecondsField(p, "end_s")};
    }
    return out;
  });
  t.Validate();
  return t;
}

}  // namespace slicerm
