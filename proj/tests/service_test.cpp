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

#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "slicerm/report.hpp"
#include "slicerm/service.hpp"

using namespace slicerm;
using namespace slicerm::testing;

namespace {

// A service on an ephemeral localhost port, served from a background thread.
class Running {
 public:
  Running(ClusterConfig cluster, ClockMode mode = ClockMode::kSimulated,
          EngineOptions options = {})
      : service_(std::move(cluster), options, mode) {
    port_ = service_.Bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.Serve(); });
  }
  ~Running() {
    service_.Stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  Service service_;
  int port_ = 0;
  std::thread thread_;
};

Json JobDoc(const std::string& id, int nodes, int per_node, double run_s) {
  auto job = MakeJob(id, nodes, per_node, ToMillis(run_s));
  return JobToJson(job);
}

}  // namespace

TEST_CASE("job lifecycle over HTTP") {
  Running server(MakeCluster(4, 4, 1));
  ApiClient api(server.url());

  auto r = api.Post("/v1/jobs", JobDoc("a", 2, 2, 100));
  CHECK(r.status == 201);
  CHECK(r.body["job_id"] == "a");
  CHECK(r.body["status"]["phase"] == "ATTACHING");

  r = api.Post("/v1/jobs", JobDoc("b", 1, 4, 100));
  CHECK(r.status == 201);
  CHECK(r.body["status"]["phase"] == "QUEUED");
  CHECK(r.body["status"]["queue_position"] == 0);

  r = api.Get("/v1/jobs/a/timeline");
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "conflict");

  r = api.Get("/v1/cluster");
  CHECK(r.status == 200);
  CHECK(r.body["mode"] == "sim");
  CHECK(r.body["attachments"]["gpu0"] == "node0");
  CHECK(r.body["nodes"][0]["free"] == false);
  CHECK(r.body["nodes"][3]["free"] == true);

  r = api.Post("/v1/clock/advance", {{"seconds", 10000}});
  CHECK(r.status == 200);
  CHECK(r.body["clock_s"] == 10000.0);

  r = api.Get("/v1/jobs/a/timeline");
  REQUIRE(r.status == 200);
  CHECK(r.body["status"] == "DONE");
  CHECK(r.body["breakdown"]["overhead_fraction"].get<double>() > 0);
  CHECK(api.Get("/v1/jobs/b").body["phase"] == "DONE");
  CHECK(api.Get("/v1/jobs").body["jobs"].size() == 2);

  CHECK(api.Delete("/v1/jobs/a").status == 409);
  CHECK(api.Get("/v1/cluster").body["attachments"].empty());
}

TEST_CASE("error mapping") {
  Running server(MakeCluster(4, 4, 1));
  ApiClient api(server.url());

  auto r = api.Post("/v1/jobs", "not an object");
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "bad_request");

  auto bad = JobDoc("x", 2, 1, 10);
  bad["tasks"].erase(1);
  CHECK(api.Post("/v1/jobs", bad).status == 400);

  r = api.Post("/v1/jobs", JobDoc("big", 5, 1, 10));
  CHECK(r.status == 422);
  CHECK(r.body["code"] == "infeasible");
  CHECK(r.body["detail"] == "node_count exceeds cluster (5 > 4)");

  CHECK(api.Get("/v1/jobs/ghost").status == 404);
  CHECK(api.Get("/v1/jobs/ghost/timeline").status == 404);
  CHECK(api.Delete("/v1/jobs/ghost").status == 404);

  CHECK(api.Post("/v1/jobs", JobDoc("dup", 1, 1, 10)).status == 201);
  CHECK(api.Post("/v1/jobs", JobDoc("dup", 1, 1, 10)).status == 409);

  CHECK(api.Post("/v1/clock/advance", {{"seconds", -1}}).status == 400);
  CHECK(api.Post("/v1/clock/advance", {{"minutes", 1}}).status == 400);
  CHECK(api.Get("/v1/events?since=abc").status == 400);
}

TEST_CASE("anonymous jobs get ids") {
  Running server(MakeCluster(1, 1));
  ApiClient api(server.url());
  auto doc = JobDoc("", 1, 1, 1);
  doc.erase("id");
  auto r = api.Post("/v1/jobs", doc);
  CHECK(r.status == 201);
  CHECK(r.body["job_id"] == "job-1");
}

TEST_CASE("cancel over HTTP") {
  Running server(MakeCluster(1, 1));
  ApiClient api(server.url());
  api.Post("/v1/jobs", JobDoc("a", 1, 1, 100));
  api.Post("/v1/jobs", JobDoc("b", 1, 1, 100));
  auto r = api.Delete("/v1/jobs/b");
  CHECK(r.status == 202);
  CHECK(r.body["status"]["phase"] == "FAILED");
  CHECK(r.body["status"]["failure_reason"] == "cancelled");
  CHECK(api.Get("/v1/jobs/b/timeline").status == 409);
  CHECK(api.Delete("/v1/jobs/b").status == 409);
  CHECK(api.Delete("/v1/jobs/a").status == 202);
}

TEST_CASE("event pagination") {
  Running server(MakeCluster(2, 2));
  ApiClient api(server.url());
  api.Post("/v1/jobs", JobDoc("a", 2, 1, 10));
  api.Post("/v1/clock/advance", {{"seconds", 3600}});

  auto all = api.Get("/v1/events").body;
  const auto total = all["total"].get<std::size_t>();
  CHECK(total == 17);
  CHECK(all["events"].size() == total);

  std::uint64_t since = 0;
  Json collected = Json::array();
  while (true) {
    auto page = api.Get("/v1/events?since=" + std::to_string(since) + "&limit=5").body;
    if (page["events"].empty()) break;
    CHECK(page["events"].size() <= 5);
    for (auto& ev : page["events"]) collected.push_back(ev);
    since = page["next_since"].get<std::uint64_t>();
  }
  CHECK(collected == all["events"]);
  CHECK(collected[0]["kind"] == "SUBMITTED");
  CHECK(collected[16]["kind"] == "COMPLETED");
  CHECK(collected[16]["seq"] == 16);
}

TEST_CASE("replayed scenario matches the offline run") {
  const auto sc = LoadScenario(ScenarioPath("mnist-3configs.json"));
  Running server(sc.cluster, ClockMode::kSimulated, sc.options);
  ApiClient api(server.url());
  const auto replayed = ReplayScenario(api, sc);
  CHECK(BreakdownCsv(replayed) == BreakdownCsv(RunScenario(sc).timelines));
}

TEST_CASE("wall-clock mode runs commands") {
  LatencyParams fast;
  fast.attach = fast.detach = fast.machine_boot = fast.prepare = fast.launch_per_device =
      fast.destroy = 10;
  auto cluster = MakeCluster(2, 2, 0, 0, fast);
  cluster.image_gb = 0;
  Running server(cluster, ClockMode::kWallClock);
  ApiClient api(server.url());

  CHECK(api.Post("/v1/clock/advance", {{"seconds", 1}}).status == 409);
  CHECK(api.Get("/v1/cluster").body["mode"] == "wall");

  auto job = MakeJob("cmd", 2, 1, 0);
  for (auto& t : job.tasks) {
    t.duration.reset();
    t.command = "test \"$JOB_ID\" = cmd && sleep 0.2";
  }
  auto failing = MakeJob("bad", 1, 0, 0);
  failing.tasks[0].duration.reset();
  failing.tasks[0].command = "exit 7";
  REQUIRE(api.Post("/v1/jobs", JobToJson(job)).status == 201);

  std::string phase;
  for (int i = 0; i < 500 && phase != "DONE" && phase != "FAILED"; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    phase = api.Get("/v1/jobs/cmd").body["phase"];
  }
  CHECK(phase == "DONE");
  auto t = api.Get("/v1/jobs/cmd/timeline").body;
  const auto run = t["timeline"]["phases"][4];
  CHECK(run["end_s"].get<double>() - run["start_s"].get<double>() >= 0.15);

  REQUIRE(api.Post("/v1/jobs", JobToJson(failing)).status == 201);
  phase.clear();
  for (int i = 0; i < 500 && phase != "DONE" && phase != "FAILED"; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    phase = api.Get("/v1/jobs/bad").body["phase"];
  }
  CHECK(phase == "FAILED");
  CHECK(api.Get("/v1/jobs/bad").body["failure_reason"].get<std::string>().find("exit 7") !=
        std::string::npos);
}

TEST_CASE("unreachable server") {
  ApiClient api("http://127.0.0.1:1");
  CHECK_THROWS_AS(api.Get("/v1/cluster"), ConnectionError);
}
