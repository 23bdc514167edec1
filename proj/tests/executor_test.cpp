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

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <random>

#include "doctest.h"
#include "slicerm/errors.hpp"
#include "slicerm/executor.hpp"

using namespace slicerm;

namespace {

TaskSpec Timed(Millis ms) {
  TaskSpec t;
  t.name = "t";
  t.duration = ms;
  return t;
}

TaskSpec Command(std::string cmd) {
  TaskSpec t;
  t.name = "cmd";
  t.command = std::move(cmd);
  return t;
}

TaskResult Result(Millis end, TaskStatus status = TaskStatus::kOk) {
  TaskResult r;
  r.task_name = "t" + std::to_string(end);
  r.ended = end;
  r.status = status;
  return r;
}

}  // namespace

TEST_CASE("simulated execution") {
  const auto r = ExecuteSimulated(Timed(104570), "node0", 50000);
  CHECK(r.started == 50000);
  CHECK(r.ended == 154570);
  CHECK(r.status == TaskStatus::kOk);

  const auto zero = ExecuteSimulated(Timed(0), "node0", 7000);
  CHECK(zero.ended == 7000);

  CHECK_THROWS_AS(ExecuteSimulated(Command("true"), "node0", 0), ValidationError);

  auto failing = Timed(10);
  failing.fail = true;
  CHECK(ExecuteSimulated(failing, "node0", 0).status == TaskStatus::kFailed);
}

TEST_CASE("subprocess execution") {
  SUBCASE("true") {
    const auto r = ExecuteSubprocess(Command("true"), "job", "node0");
    CHECK(r.status == TaskStatus::kOk);
    CHECK(r.ended - r.started < 1000);
  }
  SUBCASE("false") {
    const auto r = ExecuteSubprocess(Command("false"), "job", "node0");
    CHECK(r.status == TaskStatus::kFailed);
    CHECK(r.exit_detail == "exit 1");
  }
  SUBCASE("sleep 2 measures about two seconds") {
    const auto r = ExecuteSubprocess(Command("sleep 2"), "job", "node0");
    CHECK(r.status == TaskStatus::kOk);
    CHECK(r.ended - r.started >= 1500);
    CHECK(r.ended - r.started <= 2500);
  }
  SUBCASE("environment") {
    const auto r = ExecuteSubprocess(
        Command(R"(test "$JOB_ID" = j1 && test "$NODE_ID" = node3 && test "$TASK_NAME" = cmd)"),
        "j1", "node3");
    CHECK(r.status == TaskStatus::kOk);
  }
  SUBCASE("timeout kills the process group") {
    auto t = Command("sleep 30");
    t.timeout = 200;
    const auto start = std::chrono::steady_clock::now();
    const auto r = ExecuteSubprocess(t, "job", "node0");
    CHECK(r.status == TaskStatus::kFailed);
    CHECK(r.exit_detail.find("timeout") != std::string::npos);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(5));
  }
  SUBCASE("cancel flag") {
    std::atomic<bool> cancel{true};
    const auto r = ExecuteSubprocess(Command("sleep 30"), "job", "node0", &cancel);
    CHECK(r.status == TaskStatus::kFailed);
    CHECK(r.exit_detail == "cancelled");
  }
}

TEST_CASE("gang barrier") {
  std::vector<TaskResult> four = {Result(100), Result(98), Result(102), Result(97)};
  auto out = GangBarrier(four);
  CHECK(out.end == 102);
  CHECK_FALSE(out.failed);

  CHECK(GangBarrier(std::vector<TaskResult>{Result(42)}).end == 42);

  four[1].status = TaskStatus::kFailed;
  out = GangBarrier(four);
  CHECK(out.failed);
  CHECK(out.end == 102);
  CHECK(out.detail.find("t98") != std::string::npos);
}

TEST_CASE("gang barrier ends at the longest member for any gang size") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    const int n = 1 + static_cast<int>(rng() % 16);
    std::vector<TaskResult> rs;
    Millis longest = 0;
    for (int i = 0; i < n; ++i) {
      const Millis d = rng() % 1'000'000;
      rs.push_back(ExecuteSimulated(Timed(d), "n", 5000));
      longest = std::max(longest, d);
    }
    CHECK(GangBarrier(rs).end - 5000 == longest);
  }
}

TEST_CASE("subprocess executor reports through its sink") {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::pair<int, TaskResult>> got;
  {
    SubprocessExecutor exec(
        [&](const std::string&, int index, TaskResult r) {
          std::lock_guard lock(mu);
          got.emplace_back(index, std::move(r));
          cv.notify_all();
        },
        [] { return Millis{1000}; });
    CHECK_FALSE(exec.Launch({"j", 0, Command("true"), "node0"}, 500).has_value());
    CHECK_FALSE(exec.Launch({"j", 1, Command("exit 3"), "node1"}, 500).has_value());
    std::unique_lock lock(mu);
    cv.wait_for(lock, std::chrono::seconds(10), [&] { return got.size() == 2; });
  }
  REQUIRE(got.size() == 2);
  std::sort(got.begin(), got.end(), [](auto& a, auto& b) { return a.first < b.first; });
  CHECK(got[0].second.status == TaskStatus::kOk);
  CHECK(got[1].second.status == TaskStatus::kFailed);
  CHECK(got[1].second.exit_detail == "exit 3");
  CHECK(got[0].second.started == 500);
  CHECK(got[0].second.ended == 1000);
}
