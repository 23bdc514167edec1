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

#include "slicerm/engine_host.hpp"

namespace slicerm {
namespace {
constexpr auto kWallTick = std::chrono::milliseconds(5);
}  // namespace

EngineHost::EngineHost(ClusterConfig cluster, EngineOptions options, ClockMode mode)
    : mode_(mode), epoch_(std::chrono::steady_clock::now()) {
  std::unique_ptr<Executor> executor;
  if (mode_ == ClockMode::kWallClock) {
    executor = std::make_unique<SubprocessExecutor>(
        [this](const std::string& job_id, int index, TaskResult result) {
          Post([job_id, index, result = std::move(result)](Engine& e) {
            e.CompleteTask(job_id, index, result);
          });
        },
        [this] { return WallNow(); });
  }
  engine_ = std::make_unique<Engine>(std::move(cluster), options, std::move(executor));
  loop_ = std::thread([this] { Loop(); });
}

EngineHost::~EngineHost() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  loop_.join();
  // Joins executor workers; their completions land in a queue nobody drains.
  engine_.reset();
}

void EngineHost::Post(std::function<void(Engine&)> command) {
  {
    std::lock_guard lock(mu_);
    commands_.push_back(std::move(command));
  }
  cv_.notify_one();
}

Millis EngineHost::WallNow() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - epoch_)
      .count();
}

void EngineHost::Loop() {
  for (;;) {
    std::function<void(Engine&)> command;
    {
      std::unique_lock lock(mu_);
      auto ready = [this] { return stopping_ || !commands_.empty(); };
      if (mode_ == ClockMode::kWallClock) {
        cv_.wait_for(lock, kWallTick, ready);
      } else {
        cv_.wait(lock, ready);
      }
      if (stopping_) return;
      if (!commands_.empty()) {
        command = std::move(commands_.front());
        commands_.pop_front();
      }
    }
    if (mode_ == ClockMode::kWallClock) {
      engine_->Advance(std::max(engine_->clock(), WallNow()));
    }
    if (command) {
      try {
        command(*engine_);
      } catch (const std::exception&) {
        // Call() forwards exceptions through its future; a failing Post()ed
        // completion (e.g. for a cancelled job) has nobody to report to.
      }
    }
  }
}

}  // namespace slicerm
