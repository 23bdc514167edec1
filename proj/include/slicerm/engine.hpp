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

// Discrete-event slice manager.
//
// Jobs wait in a FIFO queue. A scheduling pass walks the queue in submission
// order and grants each job whose whole gang (nodes plus devices, matched by
// class) is free right now, lowest ids first; jobs that do not fit are
// skipped unless strict FIFO is configured. A granted slice then runs
// through seven phases, each globally barriered across the slice's nodes:
//
//   attach_device   per-node serialized fabric attaches
//   launch_machine  boot, then image download over the shared link
//   prepare_task    fixed per-node housekeeping
//   launch_task     per attached device, per-node serialized
//   run_task        executor; ends when the last gang member ends
//   detach_device   mirror of attach
//   destroy_machine fixed per-node shutdown
//
// after which nodes and devices return to the pool and another pass runs.
// Teardown happens on failure too, so resources are never leaked.
//
// The engine is single-threaded. Time moves only through Advance / Step /
// RunUntilIdle; all arithmetic is in integer milliseconds.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "slicerm/executor.hpp"
#include "slicerm/fabric.hpp"
#include "slicerm/json_io.hpp"
#include "slicerm/model.hpp"

namespace slicerm {

enum class SlicePhase {
  kQueued,
  kAttaching,
  kLaunchingMachines,
  kPreparing,
  kLaunchingTasks,
  kRunning,
  kDetaching,
  kDestroying,
  kDone,
  kFailed,
};

std::string_view SlicePhaseName(SlicePhase phase);  // "ATTACHING"
SlicePhase ParseSlicePhase(std::string_view name);
// The active phase in which a lifecycle phase executes.
SlicePhase ActivePhaseOf(Phase phase);

enum class EventKind { kSubmitted, kAllocated, kPhaseStart, kPhaseEnd, kCompleted, kFailed };

struct Event {
  std::uint64_t seq = 0;
  Millis time = 0;
  std::string job_id;
  EventKind kind = EventKind::kSubmitted;
  Phase phase = Phase::kAttachDevice;  // meaningful for phase start/end only
  std::string detail;

  std::string KindName() const;  // "SUBMITTED", "ATTACH_DEVICE_START", ...
  bool operator==(const Event&) const = default;
};

// {time_s, job_id, kind, detail}; the JSONL export format.
Json EventToJson(const Event& event);
std::string EventLogToJsonl(const std::vector<Event>& events);

struct PhaseRecord {
  Millis start = 0;
  std::optional<Millis> end;
};

// Read-only view of one job, as returned by Engine::Status.
struct JobStatus {
  std::string job_id;
  SlicePhase phase = SlicePhase::kQueued;
  std::optional<int> queue_position;
  std::vector<std::string> nodes;
  std::vector<std::vector<std::string>> devices;  // per node, attach order
  std::vector<PhaseRecord> phases;                // lifecycle phases so far
  std::optional<std::string> failure_reason;
  Millis submitted_at = 0;
  std::optional<Millis> allocated_at;
};

Json JobStatusToJson(const JobStatus& status);

// State of the queue and free inventory seen by one scheduling pass, and the
// jobs it granted, in grant order.
struct PassRecord {
  Millis time = 0;
  std::vector<std::string> queue_before;
  std::vector<std::string> free_nodes_before;
  std::map<DeviceKind, int> free_devices_before;
  std::vector<std::string> allocated;
};

struct EngineOptions {
  static constexpr std::uint64_t kDefaultSeed = 20190101;

  // Head-of-line blocking instead of skipping unsatisfiable jobs.
  bool strict_fifo = false;
  // Recorded for reproducibility; the lifecycle itself draws no random numbers.
  std::uint64_t seed = kDefaultSeed;
};

struct ClusterView {
  std::vector<std::string> free_nodes;
  std::vector<std::string> free_devices;
  FabricSnapshot attachments;
};

class Engine {
 public:
  Engine(ClusterConfig cluster, EngineOptions options = {},
         std::unique_ptr<Executor> executor = nullptr);

  // Queues the job at the current clock and runs a scheduling pass. Throws
  // InfeasibleError if the cluster could never host it, ValidationError if the
  // executor cannot run its tasks, ConflictError on a duplicate id.
  void Submit(JobSpec job);

  // Processes every pending event with time <= until, in (time, sequence)
  // order, then sets the clock to `until`. Throws ConflictError if until is in
  // the past.
  void Advance(Millis until);

  // Processes the next pending event; false when there is none.
  bool Step();
  std::optional<Millis> NextEventTime() const;
  void RunUntilIdle();

  // Delivers the result of an asynchronously executed task at the current
  // clock.
  void CompleteTask(const std::string& job_id, int task_index, TaskResult result);

  // Queued jobs fail immediately; active slices skip to teardown once their
  // current phase ends (a running slice stops its run phase now). Throws
  // NotFoundError, or ConflictError for a finished job.
  void Cancel(const std::string& job_id);

  JobStatus Status(const std::string& job_id) const;
  // Full timeline of a finished job. Throws NotFoundError for unknown ids and
  // ConflictError for jobs that are still active or never got a slice.
  Timeline TimelineOf(const std::string& job_id) const;

  Millis clock() const { return clock_; }
  const std::vector<Event>& events() const { return events_; }
  const std::vector<std::string>& submission_order() const { return order_; }
  const ClusterConfig& cluster() const { return cluster_; }
  const EngineOptions& options() const { return options_; }
  const Fabric& fabric() const { return fabric_; }
  ClusterView View() const;
  bool Idle() const;  // nothing queued, nothing active

  void set_pass_observer(std::function<void(const PassRecord&)> fn) {
    pass_observer_ = std::move(fn);
  }

 private:
  struct Slice {
    JobSpec job;
    SlicePhase phase = SlicePhase::kQueued;
    std::vector<std::string> nodes;
    std::vector<std::vector<std::string>> devices;
    std::vector<PhaseRecord> records;
    std::optional<std::string> failure_reason;
    Millis submitted_at = 0;
    std::optional<Millis> allocated_at;
    bool cancel_requested = false;
    bool task_failed = false;
    int pending = 0;  // outstanding per-node work in the current phase
    std::vector<std::optional<TaskResult>> results;
  };

  struct Pending {
    Millis time;
    std::uint64_t seq;
    std::function<void()> action;
  };
  struct PendingLater {
    bool operator()(const Pending& a, const Pending& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  struct Download {
    std::string job_id;
    int node_index;
    double remaining_gbit;
  };

  struct IdLess {
    bool operator()(const std::string& a, const std::string& b) const {
      return NaturalLess(a, b);
    }
  };
  using IdSet = std::set<std::string, IdLess>;

  Slice& Get(const std::string& job_id);
  const Slice& Get(const std::string& job_id) const;
  void Log(Millis time, const std::string& job_id, EventKind kind, Phase phase,
           std::string detail);
  void At(Millis time, std::function<void()> action);

  void SchedulePass();
  bool Satisfiable(const SliceSpec& spec) const;
  void Allocate(Slice& slice);

  void BeginPhase(Slice& slice, Phase phase);
  void EndPhase(Slice& slice, Phase phase);
  void RunPhase(Slice& slice, Phase phase);
  void NodeDone(const std::string& job_id, Phase phase);
  void OnTaskDone(const std::string& job_id, int task_index, TaskResult result);
  void Finish(Slice& slice);

  void StartDownload(const std::string& job_id, int node_index);
  void SettleDownloads(Millis now);
  void PlanDownloads();

  ClusterConfig cluster_;
  EngineOptions options_;
  std::unique_ptr<Executor> executor_;
  Fabric fabric_;

  Millis clock_ = 0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, PendingLater> pending_;
  std::vector<Event> events_;

  std::map<std::string, Slice> slices_;
  std::vector<std::string> order_;
  std::vector<std::string> queue_;

  IdSet free_nodes_;
  std::map<DeviceKind, IdSet> free_devices_;

  std::vector<Download> downloads_;
  Millis downloads_settled_at_ = 0;
  std::uint64_t download_generation_ = 0;

  std::function<void(const PassRecord&)> pass_observer_;
};

}  // namespace slicerm
