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

#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "slicerm/engine.hpp"
#include "slicerm/errors.hpp"
#include "slicerm/scenario.hpp"

using namespace slicerm;
using namespace slicerm::testing;

namespace {

// attach 6, boot 30, prepare 5, launch 4 per device, detach 5, destroy 10.
LatencyParams HandParams() {
  LatencyParams p;
  p.attach = 6000;
  p.detach = 5000;
  p.machine_boot = 30000;
  p.prepare = 5000;
  p.launch_per_device = 4000;
  p.destroy = 10000;
  return p;
}

std::vector<std::string> KindsOf(const Engine& e, const std::string& id) {
  std::vector<std::string> out;
  for (const auto& ev : e.events()) {
    if (ev.job_id == id) out.push_back(ev.KindName());
  }
  return out;
}

std::optional<Millis> TimeOf(const Engine& e, const std::string& id, const std::string& kind) {
  for (const auto& ev : e.events()) {
    if (ev.job_id == id && ev.KindName() == kind) return ev.time;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("single slice lifecycle matches the hand timeline") {
  // 0-6 attach, 6-60 boot 30 + 24 s download, 60-65 prepare, 65-69 launch,
  // 69-169 run, 169-174 detach, 174-184 destroy.
  Engine e(MakeCluster(1, 1, 0, 0, HandParams()));
  e.Submit(MakeJob("j", 1, 1, 100000));
  e.RunUntilIdle();
  const auto t = e.TimelineOf("j");
  const std::vector<Interval> want = {{0, 6000},       {6000, 60000},   {60000, 65000},
                                      {65000, 69000},  {69000, 169000}, {169000, 174000},
                                      {174000, 184000}};
  for (int i = 0; i < kPhaseCount; ++i) CHECK(t.phases[i] == want[i]);
  CHECK(t.Makespan() == 184000);
  CHECK(e.Status("j").phase == SlicePhase::kDone);
  CHECK(e.fabric().AttachedCount() == 0);

  const std::vector<std::string> kinds = {
      "SUBMITTED",         "ALLOCATED",           "ATTACH_DEVICE_START", "ATTACH_DEVICE_END",
      "LAUNCH_MACHINE_START", "LAUNCH_MACHINE_END", "PREPARE_TASK_START",  "PREPARE_TASK_END",
      "LAUNCH_TASK_START", "LAUNCH_TASK_END",     "RUN_TASK_START",      "RUN_TASK_END",
      "DETACH_DEVICE_START", "DETACH_DEVICE_END", "DESTROY_MACHINE_START", "DESTROY_MACHINE_END",
      "COMPLETED"};
  CHECK(KindsOf(e, "j") == kinds);
}

TEST_CASE("four concurrent downloads share the link") {
  auto p = HandParams();
  Engine solo(MakeCluster(4, 4, 0, 0, p));
  solo.Submit(MakeJob("one", 1, 1, 0));
  solo.RunUntilIdle();
  CHECK(solo.TimelineOf("one")[Phase::kLaunchMachine].Duration() == 30000 + 24000);

  Engine four(MakeCluster(4, 4, 0, 0, p));
  four.Submit(MakeJob("four", 4, 1, 0));
  four.RunUntilIdle();
  CHECK(four.TimelineOf("four")[Phase::kLaunchMachine].Duration() == 30000 + 96000);
}

TEST_CASE("staggered downloads follow the fair-share oracle") {
  // Two single-node slices submitted 10 s apart, so downloads start at 36 and 46 s.
  auto p = HandParams();
  Engine e(MakeCluster(2, 2, 0, 0, p));
  e.Submit(MakeJob("a", 1, 1, 0));
  e.Advance(10000);
  e.Submit(MakeJob("b", 1, 1, 0));
  e.RunUntilIdle();
  const auto want = FairShareFinishTimes({36.0, 46.0}, {24.0, 24.0}, 1.0);
  CHECK(e.TimelineOf("a")[Phase::kLaunchMachine].end == CeilMillis(want[0]));
  CHECK(e.TimelineOf("b")[Phase::kLaunchMachine].end == CeilMillis(want[1]));
}

TEST_CASE("launch_task scales with the busiest node's device count") {
  auto p = HandParams();
  Engine e(MakeCluster(1, 4, 0, 0, p));
  e.Submit(MakeJob("j", 1, 4, 0));
  e.RunUntilIdle();
  const auto t = e.TimelineOf("j");
  CHECK(t[Phase::kAttachDevice].Duration() == 4 * 6000);
  CHECK(t[Phase::kLaunchTask].Duration() == 4 * 4000);
  CHECK(t[Phase::kDetachDevice].Duration() == 4 * 5000);
}

TEST_CASE("submit") {
  Engine e(MakeCluster(4, 4, 1));
  SUBCASE("idle cluster allocates immediately") {
    e.Submit(MakeJob("j", 4, 1, 1000));
    CHECK(TimeOf(e, "j", "ALLOCATED") == 0);
    CHECK(e.Status("j").phase == SlicePhase::kAttaching);
    CHECK(e.Status("j").nodes == std::vector<std::string>{"node0", "node1", "node2", "node3"});
  }
  SUBCASE("five nodes is infeasible") {
    CHECK_THROWS_WITH_AS(e.Submit(MakeJob("j", 5, 1, 1000)),
                         doctest::Contains("node_count exceeds cluster"), InfeasibleError);
    CHECK(e.events().empty());
  }
  SUBCASE("P40 demand is matched by class") {
    CHECK_THROWS_AS(e.Submit(MakeJob("j", 2, 1, 1000, kP40)), InfeasibleError);
    e.Submit(MakeJob("k", 1, 1, 1000, kP40));
    CHECK(e.Status("k").devices == std::vector<std::vector<std::string>>{{"gpu4"}});
  }
  SUBCASE("duplicate id") {
    e.Submit(MakeJob("j", 1, 1, 1000));
    CHECK_THROWS_AS(e.Submit(MakeJob("j", 1, 1, 1000)), ConflictError);
  }
  SUBCASE("invalid job") {
    auto j = MakeJob("j", 2, 1, 1000);
    j.tasks.pop_back();
    CHECK_THROWS_AS(e.Submit(j), ValidationError);
  }
  SUBCASE("command tasks need a subprocess executor") {
    auto j = MakeJob("j", 1, 1, 1000);
    j.tasks[0].duration.reset();
    j.tasks[0].command = "true";
    CHECK_THROWS_AS(e.Submit(j), ValidationError);
  }
  SUBCASE("saturation empties the pool") {
    auto j = MakeJob("all", 4, 1, 1000);
    j.slice.devices_per_slice.push_back({kP40, 1});
    e.Submit(j);
    CHECK(e.View().free_nodes.empty());
    CHECK(e.View().free_devices.empty());
  }
}

TEST_CASE("second 1node-4gpu job waits for the first to free its P100s") {
  Engine e(MakeCluster(4, 4, 1));
  e.Submit(MakeJob("a", 1, 4, 50000));
  e.Submit(MakeJob("b", 1, 4, 50000));
  CHECK(e.Status("b").phase == SlicePhase::kQueued);
  CHECK(e.Status("b").queue_position == 0);
  e.RunUntilIdle();
  CHECK(TimeOf(e, "b", "ALLOCATED") == TimeOf(e, "a", "DESTROY_MACHINE_END"));
  CHECK(e.TimelineOf("b").Start() == e.TimelineOf("a").End());
}

TEST_CASE("sharing scenario: first pass") {
  const auto sc = LoadScenario(ScenarioPath("sharing-4slices.json"));
  Engine e(sc.cluster, sc.options);
  std::vector<PassRecord> passes;
  e.set_pass_observer([&](const PassRecord& r) { passes.push_back(r); });
  for (const auto& j : sc.jobs) e.Submit(j.job);

  CHECK(e.Status("slice1").phase == SlicePhase::kAttaching);
  CHECK(e.Status("slice1").devices ==
        std::vector<std::vector<std::string>>{{"gpu0", "gpu1"}, {"gpu2", "gpu3"}});
  CHECK(e.Status("slice2").phase == SlicePhase::kQueued);
  CHECK(e.Status("slice3").phase == SlicePhase::kAttaching);
  CHECK(e.Status("slice3").nodes == std::vector<std::string>{"node2"});
  CHECK(e.Status("slice3").devices == std::vector<std::vector<std::string>>{{"gpu4"}});
  CHECK(e.Status("slice4").phase == SlicePhase::kQueued);
  CHECK(e.Status("slice4").queue_position == 1);
  REQUIRE(passes.size() == 4);
  CHECK(passes[2].queue_before == std::vector<std::string>{"slice2", "slice3"});
  CHECK(passes[2].allocated == std::vector<std::string>{"slice3"});
}

TEST_CASE("sharing scenario matches the hand-derived schedule") {
  const auto sc = LoadScenario(ScenarioPath("sharing-4slices.json"));
  const auto run = RunScenario(sc);
  std::vector<Millis> runs;
  for (const auto& j : sc.jobs) runs.push_back(*j.job.tasks.front().duration);
  const auto oracle = SharingSchedule(sc.cluster.fabric_params, sc.cluster.image_gb,
                                      sc.cluster.link_gbps, runs[0], runs[1], runs[2], runs[3]);
  REQUIRE(oracle.waves_disjoint);

  for (const char* id : {"slice1", "slice2", "slice3", "slice4"}) {
    std::vector<OracleEvent> got, want;
    for (const auto& ev : run.events) {
      if (ev.job_id == id) got.push_back({ev.time, ev.job_id, ev.KindName()});
    }
    for (const auto& ev : oracle.events) {
      if (ev.job_id == id) want.push_back(ev);
    }
    CAPTURE(id);
    CHECK(got == want);
  }
}

TEST_CASE("strict FIFO blocks behind the head") {
  auto sc = LoadScenario(ScenarioPath("sharing-4slices.json"));
  sc.options.strict_fifo = true;
  Engine e(sc.cluster, sc.options);
  for (const auto& j : sc.jobs) e.Submit(j.job);
  CHECK(e.Status("slice3").phase == SlicePhase::kQueued);
  e.RunUntilIdle();
  CHECK(TimeOf(e, "slice3", "ALLOCATED") == TimeOf(e, "slice2", "ALLOCATED"));
}

TEST_CASE("task failure still tears the slice down") {
  Engine e(MakeCluster(2, 2));
  auto j = MakeJob("j", 2, 1, 10000);
  j.tasks[1].fail = true;
  e.Submit(j);
  e.Submit(MakeJob("next", 2, 1, 1000));
  e.RunUntilIdle();
  const auto s = e.Status("j");
  CHECK(s.phase == SlicePhase::kFailed);
  REQUIRE(s.failure_reason.has_value());
  CHECK(s.failure_reason->find("rank1") != std::string::npos);
  CHECK(e.TimelineOf("j")[Phase::kDestroyMachine].Duration() > 0);
  CHECK(KindsOf(e, "j").back() == "FAILED");
  CHECK(e.Status("next").phase == SlicePhase::kDone);
  CHECK(e.fabric().AttachedCount() == 0);
  CHECK(e.View().free_nodes.size() == 2);
}

TEST_CASE("cancel") {
  auto p = HandParams();
  Engine e(MakeCluster(1, 1, 0, 0, p));
  e.Submit(MakeJob("a", 1, 1, 100000));
  e.Submit(MakeJob("b", 1, 1, 100000));

  SUBCASE("queued job fails at once and has no timeline") {
    e.Cancel("b");
    CHECK(e.Status("b").phase == SlicePhase::kFailed);
    CHECK(e.Status("b").failure_reason == "cancelled");
    CHECK_THROWS_AS(e.TimelineOf("b"), ConflictError);
    e.RunUntilIdle();
    CHECK(e.Status("a").phase == SlicePhase::kDone);
  }
  SUBCASE("running job stops its run phase now") {
    e.Advance(100000);
    REQUIRE(e.Status("a").phase == SlicePhase::kRunning);
    e.Cancel("a");
    e.RunUntilIdle();
    const auto t = e.TimelineOf("a");
    CHECK(t[Phase::kRunTask].end == 100000);
    CHECK(t[Phase::kDetachDevice].Duration() == 5000);
    CHECK(e.Status("a").phase == SlicePhase::kFailed);
    CHECK(TimeOf(e, "b", "ALLOCATED") == t.End());
  }
  SUBCASE("attaching job skips to teardown after the current phase") {
    e.Advance(1000);
    e.Cancel("a");
    e.RunUntilIdle();
    const auto t = e.TimelineOf("a");
    CHECK(t[Phase::kAttachDevice].end == 6000);
    for (Phase ph : {Phase::kLaunchMachine, Phase::kPrepareTask, Phase::kLaunchTask,
                     Phase::kRunTask}) {
      CHECK(t[ph].Duration() == 0);
    }
    CHECK(t[Phase::kDetachDevice] == Interval{6000, 11000});
    CHECK(t.End() == 21000);
    CHECK(e.fabric().AttachedCount() == 0);
  }
  SUBCASE("tearing-down job ignores cancel") {
    e.Advance(170000);
    REQUIRE(e.Status("a").phase == SlicePhase::kDetaching);
    e.Cancel("a");
    e.RunUntilIdle();
    CHECK(e.Status("a").phase == SlicePhase::kDone);
  }
  SUBCASE("finished and unknown jobs") {
    e.RunUntilIdle();
    CHECK_THROWS_AS(e.Cancel("a"), ConflictError);
    CHECK_THROWS_AS(e.Cancel("zzz"), NotFoundError);
  }
}

TEST_CASE("advance and timeline queries") {
  Engine e(MakeCluster(1, 1));
  e.Advance(5000);
  CHECK(e.clock() == 5000);
  CHECK(e.events().empty());
  CHECK_THROWS_AS(e.Advance(4000), ConflictError);
  CHECK_THROWS_AS(e.TimelineOf("nope"), NotFoundError);
  e.Submit(MakeJob("j", 1, 1, 1000));
  CHECK_THROWS_AS(e.TimelineOf("j"), ConflictError);
  CHECK_FALSE(e.Idle());
  e.RunUntilIdle();
  CHECK(e.Idle());
  CHECK(e.TimelineOf("j").Start() == 5000);
}

TEST_CASE("identical inputs give identical logs") {
  const auto sc = LoadScenario(ScenarioPath("sharing-4slices.json"));
  CHECK(RunScenario(sc).events == RunScenario(sc).events);
}

TEST_CASE("event log export") {
  Engine e(MakeCluster(1, 1));
  e.Submit(MakeJob("j", 1, 1, 1000));
  const auto text = EventLogToJsonl(e.events());
  CHECK(text.substr(0, text.find('\n')) ==
        R"({"time_s":0.0,"job_id":"j","kind":"SUBMITTED","detail":"slice=1node-1gpu tasks=1"})");
  CHECK(ParseSlicePhase("RUNNING") == SlicePhase::kRunning);
  CHECK_THROWS_AS(ParseSlicePhase("SLEEPING"), ValidationError);
}
