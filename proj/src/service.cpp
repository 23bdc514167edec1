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

#include "slicerm/service.hpp"

#include <algorithm>

#include "httplib.h"
#include "slicerm/errors.hpp"

namespace slicerm {
namespace {

using httplib::Request;
using httplib::Response;

void Reply(Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void ReplyError(Response& res, int status, const std::string& code, const std::string& message,
                const std::string& detail = "") {
  Reply(res, status, {{"code", code}, {"message", message}, {"detail", detail}});
}

// Maps domain exceptions onto HTTP statuses.
template <typename F>
httplib::Server::Handler Guard(F fn) {
  return [fn](const Request& req, Response& res) {
    try {
      fn(req, res);
    } catch (const ParseError& e) {
      ReplyError(res, 400, "bad_request", "malformed request body", e.what());
    } catch (const ValidationError& e) {
      ReplyError(res, 400, "bad_request", "invalid request", e.what());
    } catch (const InfeasibleError& e) {
      ReplyError(res, 422, "infeasible", "job can never run on this cluster", e.what());
    } catch (const NotFoundError& e) {
      ReplyError(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      ReplyError(res, 409, "conflict", e.what());
    } catch (const std::exception& e) {
      ReplyError(res, 500, "internal", "internal error", e.what());
    }
  };
}

Json TimelineDocument(const std::string& job_id, const JobStatus& status, const Timeline& t) {
  Json doc = {{"job_id", job_id},
              {"status", SlicePhaseName(status.phase)},
              {"timeline", TimelineToJson(t)}};
  if (status.failure_reason) doc["failure_reason"] = *status.failure_reason;
  if (t.Makespan() > 0) {
    const auto b = ComputeBreakdown(t);
    doc["breakdown"] = {{"makespan_s", ToSeconds(b.makespan)},
                        {"construction_destruction_s", ToSeconds(b.construction_destruction)},
                        {"overhead_fraction", b.overhead_fraction}};
  }
  return doc;
}

Json ParseBody(const Request& req) {
  if (req.body.empty()) throw ParseError("empty request body");
  return ParseJsonText(req.body);
}

std::uint64_t QueryNumber(const Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto raw = req.get_param_value(key);
  try {
    size_t used = 0;
    const auto v = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("query parameter ") + key + " must be a nonnegative integer");
  }
}

}  // namespace

Service::Service(ClusterConfig cluster, EngineOptions options, ClockMode mode)
    : host_(std::make_unique<EngineHost>(std::move(cluster), options, mode)),
      server_(std::make_unique<httplib::Server>()) {
  Routes();
}

Service::~Service() { Stop(); }

int Service::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::Serve() { server_->listen_after_bind(); }

void Service::Stop() {
  if (server_) server_->stop();
}

void Service::Routes() {
  auto& srv = *server_;

  srv.Post("/v1/jobs", Guard([this](const Request& req, Response& res) {
    JobSpec job = JobFromJson(ParseBody(req));
    const auto status = host_->Call([&](Engine& e) {
      if (job.id.empty()) {
        do {
          job.id = "job-" + std::to_string(next_anonymous_id_++);
        } while (std::find(e.submission_order().begin(), e.submission_order().end(), job.id) !=
                 e.submission_order().end());
      }
      e.Submit(job);
      return e.Status(job.id);
    });
    Reply(res, 201, {{"job_id", status.job_id}, {"status", JobStatusToJson(status)}});
  }));

  srv.Get("/v1/jobs", Guard([this](const Request&, Response& res) {
    const auto all = host_->Call([](Engine& e) {
      std::vector<JobStatus> out;
      for (const auto& id : e.submission_order()) out.push_back(e.Status(id));
      return out;
    });
    Json jobs = Json::array();
    for (const auto& s : all) jobs.push_back(JobStatusToJson(s));
    Reply(res, 200, {{"jobs", jobs}});
  }));

  srv.Get(R"(/v1/jobs/([^/]+))", Guard([this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    const auto status = host_->Call([&](Engine& e) { return e.Status(id); });
    Reply(res, 200, JobStatusToJson(status));
  }));

  srv.Get(R"(/v1/jobs/([^/]+)/timeline)", Guard([this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    const auto [status, timeline] = host_->Call([&](Engine& e) {
      return std::pair{e.Status(id), e.TimelineOf(id)};
    });
    Reply(res, 200, TimelineDocument(id, status, timeline));
  }));

  srv.Delete(R"(/v1/jobs/([^/]+))", Guard([this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    const auto status = host_->Call([&](Engine& e) {
      e.Cancel(id);
      return e.Status(id);
    });
    Reply(res, 202, {{"job_id", id}, {"status", JobStatusToJson(status)}});
  }));

  srv.Get("/v1/cluster", Guard([this](const Request&, Response& res) {
    const auto [cluster, view, clock] = host_->Call([](Engine& e) {
      return std::tuple{e.cluster(), e.View(), e.clock()};
    });
    auto contains = [](const std::vector<std::string>& v, const std::string& id) {
      return std::find(v.begin(), v.end(), id) != v.end();
    };
    Json nodes = Json::array();
    for (const auto& n : cluster.nodes) {
      nodes.push_back({{"id", n.id},
                       {"cpu_cores", n.cpu_cores},
                       {"memory_gb", n.memory_gb},
                       {"free", contains(view.free_nodes, n.id)}});
    }
    Json attachments = Json::object();
    for (const auto& [dev, node] : view.attachments) attachments[dev] = node;
    Json pool = Json::array();
    for (const auto& d : cluster.pool) {
      pool.push_back({{"id", d.id},
                      {"kind", DeviceTypeName(d.kind.type)},
                      {"model", d.kind.model},
                      {"free", contains(view.free_devices, d.id)},
                      {"attached_to", attachments.contains(d.id) ? attachments[d.id] : Json()}});
    }
    Reply(res, 200,
          {{"mode", host_->mode() == ClockMode::kSimulated ? "sim" : "wall"},
           {"clock_s", ToSeconds(clock)},
           {"nodes", nodes},
           {"pool", pool},
           {"attachments", attachments},
           {"link_gbps", cluster.link_gbps},
           {"image_gb", cluster.image_gb},
           {"fabric_params", LatencyToJson(cluster.fabric_params)}});
  }));

  srv.Get("/v1/events", Guard([this](const Request& req, Response& res) {
    const auto since = QueryNumber(req, "since", 0);
    const auto limit = std::clamp<std::uint64_t>(QueryNumber(req, "limit", 1000), 1, 10000);
    const auto [page, total] = host_->Call([&](Engine& e) {
      const auto& log = e.events();
      std::vector<Event> out;
      for (auto i = since; i < log.size() && out.size() < limit; ++i) out.push_back(log[i]);
      return std::pair{out, log.size()};
    });
    Json events = Json::array();
    for (const auto& ev : page) {
      Json o = EventToJson(ev);
      o["seq"] = ev.seq;
      events.push_back(std::move(o));
    }
    Reply(res, 200,
          {{"events", events}, {"next_since", since + page.size()}, {"total", total}});
  }));

  srv.Post("/v1/clock/advance", Guard([this](const Request& req, Response& res) {
    if (host_->mode() != ClockMode::kSimulated) {
      throw ConflictError("clock advance is only available in simulated mode");
    }
    const Json body = ParseBody(req);
    if (!body.is_object() || !body.contains("seconds") || !body["seconds"].is_number()) {
      throw ParseError("body must be {\"seconds\": <number>}");
    }
    const Millis delta = ToMillis(body["seconds"].get<double>());
    if (delta < 0) throw ValidationError("seconds must be >= 0");
    const Millis clock = host_->Call([&](Engine& e) {
      e.Advance(e.clock() + delta);
      return e.clock();
    });
    Reply(res, 200, {{"clock_s", ToSeconds(clock)}});
  }));
}

ApiClient::ApiClient(std::string base_url) : base_url_(std::move(base_url)) {}

namespace {

ApiResponse Wrap(const httplib::Result& result, const std::string& base_url) {
  if (!result) {
    throw ConnectionError("cannot reach " + base_url + ": " + httplib::to_string(result.error()));
  }
  ApiResponse out;
  out.status = result->status;
  if (!result->body.empty()) {
    try {
      out.body = Json::parse(result->body);
    } catch (const nlohmann::json::exception&) {
      out.body = result->body;
    }
  }
  return out;
}

}  // namespace

ApiResponse ApiClient::Get(const std::string& path) {
  httplib::Client cli(base_url_);
  return Wrap(cli.Get(path), base_url_);
}

ApiResponse ApiClient::Post(const std::string& path, const Json& body) {
  httplib::Client cli(base_url_);
  return Wrap(cli.Post(path, body.dump(), "application/json"), base_url_);
}

ApiResponse ApiClient::Delete(const std::string& path) {
  httplib::Client cli(base_url_);
  return Wrap(cli.Delete(path), base_url_);
}

std::vector<JobTimeline> ReplayScenario(ApiClient& client, const Scenario& scenario) {
  auto expect = [](const ApiResponse& r, int status, const std::string& what) {
    if (r.status != status) {
      throw std::runtime_error(what + " failed with HTTP " + std::to_string(r.status) + ": " +
                               r.body.dump());
    }
  };
  auto advance = [&](Millis delta) {
    expect(client.Post("/v1/clock/advance", {{"seconds", ToSeconds(delta)}}), 200, "advance");
  };

  auto cluster = client.Get("/v1/cluster");
  expect(cluster, 200, "cluster query");
  Millis now = ToMillis(cluster.body.at("clock_s").get<double>());

  for (const auto& entry : scenario.jobs) {
    if (entry.submit_at > now) {
      advance(entry.submit_at - now);
      now = entry.submit_at;
    }
    expect(client.Post("/v1/jobs", JobToJson(entry.job)), 201, "submit " + entry.job.id);
  }

  auto all_finished = [&] {
    for (const auto& entry : scenario.jobs) {
      auto r = client.Get("/v1/jobs/" + entry.job.id);
      expect(r, 200, "status " + entry.job.id);
      const auto phase = ParseSlicePhase(r.body.at("phase").get<std::string>());
      if (phase != SlicePhase::kDone && phase != SlicePhase::kFailed) return false;
    }
    return true;
  };
  Millis step = 60'000;
  while (!all_finished()) {
    advance(step);
    step = std::min<Millis>(step * 2, 86'400'000);
  }

  std::vector<JobTimeline> out;
  for (const auto& entry : scenario.jobs) {
    auto r = client.Get("/v1/jobs/" + entry.job.id + "/timeline");
    if (r.status == 409) continue;  // cancelled before it got a slice
    expect(r, 200, "timeline " + entry.job.id);
    JobTimeline jt;
    jt.job_id = entry.job.id;
    jt.outcome = ParseSlicePhase(r.body.at("status").get<std::string>());
    if (r.body.contains("failure_reason")) {
      jt.failure_reason = r.body.at("failure_reason").get<std::string>();
    }
    jt.timeline = TimelineFromJson(r.body.at("timeline"));
    out.push_back(std::move(jt));
  }
  return out;
}

}  // namespace slicerm
