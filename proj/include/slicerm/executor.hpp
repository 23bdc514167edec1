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

// Task execution backends for the run-task phase.
//
// The simulated backend derives completion from the configured duration on
// the virtual clock. The subprocess backend runs the task's command through
// /bin/sh on the local machine, whatever node the task was placed on: node
// assignment is bookkeeping only.

#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "slicerm/model.hpp"

namespace slicerm {

enum class TaskStatus { kOk, kFailed };

struct TaskResult {
  std::string task_name;
  std::string node_id;
  Millis started = 0;
  Millis ended = 0;
  TaskStatus status = TaskStatus::kOk;
  std::string exit_detail;
};

struct TaskLaunch {
  std::string job_id;
  int task_index = 0;
  TaskSpec task;
  std::string node_id;
};

// Completion at now + duration. Throws ValidationError when the task has no
// duration (command tasks need the subprocess backend).
TaskResult ExecuteSimulated(const TaskSpec& task, const std::string& node_id, Millis now);

// Runs task.command via `/bin/sh -c` with JOB_ID, NODE_ID and TASK_NAME added
// to the environment, blocking until it exits, times out, or `cancel` becomes
// true. started/ended are wall milliseconds relative to the call.
TaskResult ExecuteSubprocess(const TaskSpec& task, const std::string& job_id,
                             const std::string& node_id,
                             const std::atomic<bool>* cancel = nullptr);

struct GangOutcome {
  Millis end = 0;
  bool failed = false;
  std::string detail;  // names the failed tasks
};

// The run phase of a gang ends when its last member ends; one failed member
// fails the slice. `results` must be non-empty.
GangOutcome GangBarrier(std::span<const TaskResult> results);

class Executor {
 public:
  virtual ~Executor() = default;

  // A backend that knows the completion up front returns it; asynchronous
  // backends return nullopt and report through their completion sink.
  virtual std::optional<TaskResult> Launch(const TaskLaunch& launch, Millis now) = 0;

  // Best-effort termination of a job's running tasks.
  virtual void Cancel(const std::string& job_id) { (void)job_id; }

  // Throws ValidationError if this backend cannot run the task.
  virtual void CheckRunnable(const TaskSpec& task) const = 0;
};

class SimulatedExecutor final : public Executor {
 public:
  std::optional<TaskResult> Launch(const TaskLaunch& launch, Millis now) override;
  void CheckRunnable(const TaskSpec& task) const override;
};

// Runs each task on its own thread. Duration-only tasks sleep for their
// duration instead of spawning a process.
class SubprocessExecutor final : public Executor {
 public:
  using CompletionSink =
      std::function<void(const std::string& job_id, int task_index, TaskResult result)>;
  using Clock = std::function<Millis()>;

  SubprocessExecutor(CompletionSink sink, Clock clock);
  ~SubprocessExecutor() override;

  std::optional<TaskResult> Launch(const TaskLaunch& launch, Millis now) override;
  void Cancel(const std::string& job_id) override;
  void CheckRunnable(const TaskSpec& task) const override;

 private:
  CompletionSink sink_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<std::atomic<bool>>> cancel_flags_;
  std::vector<std::jthread> workers_;
};

}  // namespace slicerm
