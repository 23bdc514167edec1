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

// REST control plane over an EngineHost.
//
//   POST   /v1/jobs                 submit a job document  -> 201 | 400 | 409 | 422
//   GET    /v1/jobs                 status of every job
//   GET    /v1/jobs/{id}            status snapshot        -> 200 | 404
//   GET    /v1/jobs/{id}/timeline   finished timeline      -> 200 | 404 | 409
//   DELETE /v1/jobs/{id}            cancel                 -> 202 | 404 | 409
//   GET    /v1/cluster              inventory and attachments
//   GET    /v1/events?since=&limit= event log page
//   POST   /v1/clock/advance        {"seconds": s}, simulated mode only
//
// Errors carry {"code", "message", "detail"}.

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicerm/engine_host.hpp"
#include "slicerm/scenario.hpp"

namespace httplib {
class Server;
}  // namespace httplib

namespace slicerm {

class Service {
 public:
  Service(ClusterConfig cluster, EngineOptions options, ClockMode mode);
  ~Service();

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int Bind(const std::string& host, int port);
  // Serves until Stop(). Call after Bind.
  void Serve();
  void Stop();

  EngineHost& host() { return *host_; }

 private:
  void Routes();

  std::unique_ptr<EngineHost> host_;
  std::unique_ptr<httplib::Server> server_;
  int next_anonymous_id_ = 1;
};

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ApiResponse {
  int status = 0;
  Json body;
};

// Thin JSON client for the endpoints above. Throws ConnectionError when the
// server cannot be reached; HTTP error statuses are returned, not thrown.
class ApiClient {
 public:
  // base_url like "http://127.0.0.1:8080".
  explicit ApiClient(std::string base_url);

  ApiResponse Get(const std::string& path);
  ApiResponse Post(const std::string& path, const Json& body);
  ApiResponse Delete(const std::string& path);

 private:
  std::string base_url_;
};

// Drives a server through a scenario: advance to each submit time, submit,
// advance until every job has finished, then fetch the timelines. The server
// must be in simulated mode, hold the scenario's cluster, and start idle.
std::vector<JobTimeline> ReplayScenario(ApiClient& client, const Scenario& scenario);

}  // namespace slicerm
