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

// slicerm: offline scenario runner, report renderer, server and REST client.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "slicerm/errors.hpp"
#include "slicerm/report.hpp"
#include "slicerm/scenario.hpp"
#include "slicerm/service.hpp"

namespace {

using namespace slicerm;

// HTTP status -> process exit code for the client verbs.
int ExitCodeFor(int http_status) {
  switch (http_status) {
    case 404: return 4;
    case 409: return 9;
    case 422: return 22;
    default: return http_status >= 200 && http_status < 300 ? 0 : 1;
  }
}

int PrintResponse(const ApiResponse& r) {
  const int code = ExitCodeFor(r.status);
  (code == 0 ? std::cout : std::cerr) << r.body.dump(2) << "\n";
  return code;
}

std::string ReadFileOrThrow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<std::string, int> SplitListen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw ValidationError("--listen expects host:port");
  return {listen.substr(0, colon), std::stoi(listen.substr(colon + 1))};
}

Service* g_service = nullptr;

void OnSignal(int) {
  if (g_service != nullptr) g_service->Stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slicerm: slice lifecycle manager for a disaggregated device pool"};
  app.require_subcommand(1);
  std::string server = "http://127.0.0.1:8080";
  app.add_option("--server", server, "Server base URL for client commands");

  // run
  auto* run = app.add_subcommand("run", "Run a scenario offline to quiescence");
  std::string scenario_path, out_dir;
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Render a run directory");
  std::string run_dir, format = "csv";
  int width = 64;
  report->add_option("run_dir", run_dir, "Directory written by `run` or `replay`")->required();
  report->add_option("--format", format, "csv or gantt")->check(CLI::IsMember({"csv", "gantt"}));
  report->add_option("--width", width, "Gantt columns")->check(CLI::PositiveNumber);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the REST control plane");
  std::string cluster_path, listen = "127.0.0.1:8080", mode = "sim";
  bool strict_fifo = false;
  std::uint64_t seed = EngineOptions::kDefaultSeed;
  serve->add_option("--cluster", cluster_path, "Cluster JSON file")->required();
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--mode", mode, "sim or wall")->check(CLI::IsMember({"sim", "wall"}));
  serve->add_flag("--strict-fifo", strict_fifo, "Head-of-line blocking queue");
  serve->add_option("--seed", seed, "Engine seed");

  // client verbs
  auto* submit = app.add_subcommand("submit", "Submit a job document");
  std::string job_path;
  submit->add_option("job", job_path, "Job JSON file")->required();
  auto* status = app.add_subcommand("status", "Show a job's status");
  auto* timeline = app.add_subcommand("timeline", "Show a finished job's timeline");
  auto* cancel = app.add_subcommand("cancel", "Cancel a job");
  std::string job_id;
  for (auto* sub : {status, timeline, cancel}) {
    sub->add_option("job_id", job_id, "Job id")->required();
  }
  auto* advance = app.add_subcommand("advance", "Advance the simulated clock");
  double seconds = 0;
  advance->add_option("seconds", seconds, "Seconds to advance")->required();
  auto* cluster_cmd = app.add_subcommand("cluster", "Show inventory and attachments");
  auto* events = app.add_subcommand("events", "Page through the event log");
  std::uint64_t since = 0;
  events->add_option("--since", since, "First sequence number");
  auto* replay = app.add_subcommand("replay", "Drive a server through a scenario");
  replay->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  replay->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto scenario = LoadScenario(scenario_path);
      const auto record = RunScenario(scenario);
      WriteRunDir(out_dir, record);
      std::cout << "wrote " << record.events.size() << " events, " << record.timelines.size()
                << " timelines to " << out_dir << "\n";
      return 0;
    }
    if (report->parsed()) {
      const auto timelines = ReadRunTimelines(run_dir);
      std::cout << (format == "csv" ? BreakdownCsv(timelines) : GanttChart(timelines, width));
      return 0;
    }
    if (serve->parsed()) {
      const auto cluster = ParseClusterConfig(ReadFileOrThrow(cluster_path));
      const auto [host, port] = SplitListen(listen);
      EngineOptions options;
      options.strict_fifo = strict_fifo;
      options.seed = seed;
      Service service(cluster, options, mode == "wall" ? ClockMode::kWallClock : ClockMode::kSimulated);
      const int bound = service.Bind(host, port);
      g_service = &service;
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      std::cerr << "slicerm listening on " << host << ":" << bound << " (" << mode << " mode)\n";
      service.Serve();
      g_service = nullptr;
      return 0;
    }

    ApiClient client(server);
    if (submit->parsed()) {
      return PrintResponse(client.Post("/v1/jobs", ParseJsonText(ReadFileOrThrow(job_path))));
    }
    if (status->parsed()) return PrintResponse(client.Get("/v1/jobs/" + job_id));
    if (timeline->parsed()) return PrintResponse(client.Get("/v1/jobs/" + job_id + "/timeline"));
    if (cancel->parsed()) return PrintResponse(client.Delete("/v1/jobs/" + job_id));
    if (advance->parsed()) {
      return PrintResponse(client.Post("/v1/clock/advance", {{"seconds", seconds}}));
    }
    if (cluster_cmd->parsed()) return PrintResponse(client.Get("/v1/cluster"));
    if (events->parsed()) {
      return PrintResponse(client.Get("/v1/events?since=" + std::to_string(since)));
    }
    if (replay->parsed()) {
      const auto scenario = LoadScenario(scenario_path);
      RunRecord record;
      record.timelines = ReplayScenario(client, scenario);
      std::filesystem::create_directories(out_dir);
      // Full event log, page by page, in the same JSONL layout as `run`.
      std::ofstream log(std::filesystem::path(out_dir) / "events.jsonl");
      std::uint64_t seq = 0;
      for (;;) {
        auto page = client.Get("/v1/events?since=" + std::to_string(seq));
        if (page.status != 200) return PrintResponse(page);
        const auto& list = page.body.at("events");
        if (list.empty()) break;
        for (const auto& e : list) {
          nlohmann::ordered_json line = {{"time_s", e.at("time_s")},
                                         {"job_id", e.at("job_id")},
                                         {"kind", e.at("kind")},
                                         {"detail", e.at("detail")}};
          log << line.dump() << "\n";
        }
        seq = page.body.at("next_since").get<std::uint64_t>();
      }
      std::ofstream(std::filesystem::path(out_dir) / "timelines.json")
          << TimelinesToJson(record.timelines).dump(2) << "\n";
      std::ofstream(std::filesystem::path(out_dir) / "breakdown.csv")
          << BreakdownCsv(record.timelines);
      std::cout << "wrote " << record.timelines.size() << " timelines to " << out_dir << "\n";
      return 0;
    }
  } catch (const ConnectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
