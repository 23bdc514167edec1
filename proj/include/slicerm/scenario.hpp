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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slicerm/engine.hpp"

namespace slicerm {

struct ScenarioJob {
  Millis submit_at = 0;
  JobSpec job;
};

// A cluster plus a timed list of job submissions.
struct Scenario {
  std::string name;
  ClusterConfig cluster;
  std::vector<ScenarioJob> jobs;  // submit times nondecreasing
  EngineOptions options;
};

// `cluster` may be inline or a path, resolved against base_dir.
// `latency_overrides` is applied on top of the cluster's fabric_params.
Scenario ParseScenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario LoadScenario(const std::filesystem::path& path);

// Timeline of one job, as stored in a run directory.
struct JobTimeline {
  std::string job_id;
  SlicePhase outcome = SlicePhase::kDone;
  std::optional<std::string> failure_reason;
  Timeline timeline;
};

struct RunRecord {
  std::vector<Event> events;
  std::vector<JobTimeline> timelines;  // submission order; jobs that got a slice
};

// Collects timelines of every finished job, in submission order.
std::vector<JobTimeline> CollectTimelines(const Engine& engine);

// Offline run to quiescence: each job is submitted once the clock reaches its
// submit time. Throws whatever Submit throws (infeasible job, bad task).
RunRecord RunScenario(const Scenario& scenario);

}  // namespace slicerm
