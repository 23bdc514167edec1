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

#include "slicerm/scenario.hpp"

#include <fstream>
#include <sstream>

#include "slicerm/errors.hpp"

namespace slicerm {

namespace {

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Scenario ParseScenario(std::string_view text, const std::filesystem::path& base_dir) {
  const Json doc = ParseJsonText(text);
  if (!doc.is_object()) throw ParseError("scenario must be a JSON object");
  Scenario s;
  try {
    s.name = doc.value("name", std::string());
    const auto& cluster = doc.at("cluster");
    if (cluster.is_string()) {
      const auto path = base_dir / cluster.get<std::string>();
      s.cluster = ParseClusterConfig(ReadFile(path));
    } else {
      s.cluster = ClusterFromJson(cluster);
    }
    if (doc.contains("latency_overrides")) {
      s.cluster.fabric_params = LatencyFromJson(doc.at("latency_overrides"), s.cluster.fabric_params);
      s.cluster.Validate();
    }
    s.options.seed = doc.value("seed", EngineOptions::kDefaultSeed);
    s.options.strict_fifo = doc.value("strict_fifo", false);
    Millis last = 0;
    for (const auto& entry : doc.value("jobs", Json::array())) {
      ScenarioJob job;
      const double at = entry.value("submit_time_s", 0.0);
      if (at < 0) throw ValidationError("submit_time_s must be >= 0");
      job.submit_at = ToMillis(at);
      if (job.submit_at < last) throw ValidationError("submit times must be nondecreasing");
      last = job.submit_at;
      job.job = JobFromJson(entry.at("job"));
      if (job.job.id.empty()) throw ValidationError("scenario jobs need an id");
      s.jobs.push_back(std::move(job));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  return ParseScenario(ReadFile(path), path.parent_path());
}

std::vector<JobTimeline> CollectTimelines(const Engine& engine) {
  std::vector<JobTimeline> out;
  for (const auto& id : engine.submission_order()) {
    const auto status = engine.Status(id);
    if (status.phase != SlicePhase::kDone && status.phase != SlicePhase::kFailed) continue;
    if (static_cast<int>(status.phases.size()) != kPhaseCount) continue;  // cancelled in queue
    out.push_back({id, status.phase, status.failure_reason, engine.TimelineOf(id)});
  }
  return out;
}

RunRecord RunScenario(const Scenario& scenario) {
  Engine engine(scenario.cluster, scenario.options);
  for (const auto& entry : scenario.jobs) {
    engine.Advance(entry.submit_at);
    engine.Submit(entry.job);
  }
  engine.RunUntilIdle();
  return {engine.events(), CollectTimelines(engine)};
}

}  // namespace slicerm
