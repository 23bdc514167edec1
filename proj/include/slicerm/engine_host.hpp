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

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <thread>
#include <type_traits>

#include "slicerm/engine.hpp"

namespace slicerm {

enum class ClockMode { kSimulated, kWallClock };

// Owns an Engine and the one thread allowed to touch it. Callers hand in
// commands through an ordered channel and block on the result; whatever a
// command returns is a copy, so readers never see a half-applied update.
//
// In wall-clock mode the engine clock is milliseconds since construction,
// advanced before every command and on a short tick, and tasks run as local
// subprocesses.
class EngineHost {
 public:
  EngineHost(ClusterConfig cluster, EngineOptions options, ClockMode mode);
  ~EngineHost();

  EngineHost(const EngineHost&) = delete;
  EngineHost& operator=(const EngineHost&) = delete;

  ClockMode mode() const { return mode_; }

  // Runs fn(engine) on the engine thread and returns its result. Exceptions
  // thrown by fn propagate to the caller.
  template <typename F>
  auto Call(F&& fn) -> std::invoke_result_t<F, Engine&> {
    using R = std::invoke_result_t<F, Engine&>;
    auto task = std::make_shared<std::packaged_task<R(Engine&)>>(std::forward<F>(fn));
    auto result = task->get_future();
    Post([task](Engine& e) { (*task)(e); });
    return result.get();
  }

  // Fire-and-forget command.
  void Post(std::function<void(Engine&)> command);

 private:
  Millis WallNow() const;
  void Loop();

  ClockMode mode_;
  std::chrono::steady_clock::time_point epoch_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void(Engine&)>> commands_;
  bool stopping_ = false;

  std::unique_ptr<Engine> engine_;
  std::thread loop_;
};

}  // namespace slicerm
