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

#include "slicerm/executor.hpp"

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>

#include "slicerm/errors.hpp"

extern char** environ;

namespace slicerm {
namespace {

using SteadyClock = std::chrono::steady_clock;

Millis ElapsedMs(SteadyClock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(SteadyClock::now() - since)
      .count();
}

// Inherited environment with the task variables replaced.
std::vector<std::string> TaskEnvironment(const std::string& job_id, const std::string& node_id,
                                         const std::string& task_name) {
  std::vector<std::string> env;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view entry(*e);
    if (entry.starts_with("JOB_ID=") || entry.starts_with("NODE_ID=") ||
        entry.starts_with("TASK_NAME=")) {
      continue;
    }
    env.emplace_back(entry);
  }
  env.push_back("JOB_ID=" + job_id);
  env.push_back("NODE_ID=" + node_id);
  env.push_back("TASK_NAME=" + task_name);
  return env;
}

}  // namespace

TaskResult ExecuteSimulated(const TaskSpec& task, const std::string& node_id, Millis now) {
  if (!task.duration) {
    throw ValidationError("task " + task.name + " has no duration_s; command tasks need the "
                          "subprocess executor");
  }
  TaskResult r;
  r.task_name = task.name;
  r.node_id = node_id;
  r.started = now;
  r.ended = now + *task.duration;
  r.status = task.fail ? TaskStatus::kFailed : TaskStatus::kOk;
  r.exit_detail = task.fail ? "injected failure" : "ok";
  return r;
}

TaskResult ExecuteSubprocess(const TaskSpec& task, const std::string& job_id,
                             const std::string& node_id, const std::atomic<bool>* cancel) {
  TaskResult r;
  r.task_name = task.name;
  r.node_id = node_id;
  r.status = TaskStatus::kFailed;
  if (!task.command) {
    r.exit_detail = "task has no command";
    return r;
  }

  auto env = TaskEnvironment(job_id, node_id, task.name);
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::string shell = "/bin/sh", flag = "-c", command = *task.command;
  char* argv[] = {shell.data(), flag.data(), command.data(), nullptr};

  // Own process group so a timeout also takes down the shell's children.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  const auto start = SteadyClock::now();
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, "/bin/sh", nullptr, &attr, argv, envp.data());
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    r.exit_detail = std::string("spawn failed: ") + std::strerror(rc);
    return r;
  }

  int status = 0;
  std::string killed_for;
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) {
      r.exit_detail = std::string("waitpid failed: ") + std::strerror(errno);
      r.ended = ElapsedMs(start);
      return r;
    }
    if (killed_for.empty()) {
      if (task.timeout && ElapsedMs(start) >= *task.timeout) {
        killed_for = "timeout after " + FormatSeconds(*task.timeout) + " s";
      } else if (cancel != nullptr && cancel->load()) {
        killed_for = "cancelled";
      }
      if (!killed_for.empty()) kill(-pid, SIGKILL);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  r.ended = ElapsedMs(start);

  if (!killed_for.empty()) {
    r.exit_detail = killed_for;
  } else if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    r.status = code == 0 ? TaskStatus::kOk : TaskStatus::kFailed;
    r.exit_detail = "exit " + std::to_string(code);
  } else if (WIFSIGNALED(status)) {
    r.exit_detail = "signal " + std::to_string(WTERMSIG(status));
  } else {
    r.exit_detail = "unknown wait status";
  }
  return r;
}

GangOutcome GangBarrier(std::span<const TaskResult> results) {
  if (results.empty()) throw std::logic_error("gang barrier over zero tasks");
  GangOutcome out;
  out.end = results.front().ended;
  for (const auto& r : results) {
    out.end = std::max(out.end, r.ended);
    if (r.status == TaskStatus::kFailed) {
      out.failed = true;
      if (!out.detail.empty()) out.detail += "; ";
      out.detail += "task " + r.task_name + " failed: " + r.exit_detail;
    }
  }
  return out;
}

std::optional<TaskResult> SimulatedExecutor::Launch(const TaskLaunch& launch, Millis now) {
  return ExecuteSimulated(launch.task, launch.node_id, now);
}

void SimulatedExecutor::CheckRunnable(const TaskSpec& task) const {
  if (!task.duration) {
    throw ValidationError("task " + task.name +
                          " has a command; simulated mode needs duration_s");
  }
}

SubprocessExecutor::SubprocessExecutor(CompletionSink sink, Clock clock)
    : sink_(std::move(sink)), clock_(std::move(clock)) {}

SubprocessExecutor::~SubprocessExecutor() {
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(mu_);
    for (auto& [job, flag] : cancel_flags_) flag->store(true);
    workers.swap(workers_);
  }
  // jthread joins on destruction.
}

std::optional<TaskResult> SubprocessExecutor::Launch(const TaskLaunch& launch, Millis now) {
  std::shared_ptr<std::atomic<bool>> flag;
  {
    std::lock_guard lock(mu_);
    auto& slot = cancel_flags_[launch.job_id];
    if (!slot) slot = std::make_shared<std::atomic<bool>>(false);
    flag = slot;
  }
  auto work = [this, launch, now, flag] {
    TaskResult r;
    if (launch.task.command) {
      r = ExecuteSubprocess(launch.task, launch.job_id, launch.node_id, flag.get());
    } else {
      const auto deadline = SteadyClock::now() + std::chrono::milliseconds(*launch.task.duration);
      while (SteadyClock::now() < deadline && !flag->load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
      }
      r.task_name = launch.task.name;
      r.node_id = launch.node_id;
      const bool cancelled = flag->load();
      r.status = cancelled || launch.task.fail ? TaskStatus::kFailed : TaskStatus::kOk;
      r.exit_detail = cancelled ? "cancelled" : (launch.task.fail ? "injected failure" : "ok");
    }
    r.started = now;
    r.ended = std::max(now, clock_());
    sink_(launch.job_id, launch.task_index, std::move(r));
  };
  std::lock_guard lock(mu_);
  workers_.emplace_back(std::move(work));
  return std::nullopt;
}

void SubprocessExecutor::Cancel(const std::string& job_id) {
  std::lock_guard lock(mu_);
  if (auto it = cancel_flags_.find(job_id); it != cancel_flags_.end()) it->second->store(true);
}

void SubprocessExecutor::CheckRunnable(const TaskSpec& task) const {
  if (!task.command && !task.duration) {
    throw ValidationError("task " + task.name + " has neither command nor duration_s");
  }
}

}  // namespace slicerm
