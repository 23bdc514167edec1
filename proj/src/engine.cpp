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

#include "slicerm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slicerm/errors.hpp"

namespace slicerm {
namespace {

// Download progress below this many gigabits counts as finished.
constexpr double kDownloadEpsilonGbit = 1e-6;

std::string Upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string JoinIds(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ",";
    out += id;
  }
  return out;
}

}  // namespace

std::string_view SlicePhaseName(SlicePhase phase) {
  switch (phase) {
    case SlicePhase::kQueued: return "QUEUED";
    case SlicePhase::kAttaching: return "ATTACHING";
    case SlicePhase::kLaunchingMachines: return "LAUNCHING_MACHINES";
    case SlicePhase::kPreparing: return "PREPARING";
    case SlicePhase::kLaunchingTasks: return "LAUNCHING_TASKS";
    case SlicePhase::kRunning: return "RUNNING";
    case SlicePhase::kDetaching: return "DETACHING";
    case SlicePhase::kDestroying: return "DESTROYING";
    case SlicePhase::kDone: return "DONE";
    case SlicePhase::kFailed: return "FAILED";
  }
  return "?";
}

SlicePhase ParseSlicePhase(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(SlicePhase::kFailed); ++i) {
    const auto p = static_cast<SlicePhase>(i);
    if (SlicePhaseName(p) == name) return p;
  }
  throw ValidationError("unknown slice phase '" + std::string(name) + "'");
}

SlicePhase ActivePhaseOf(Phase phase) {
  return static_cast<SlicePhase>(static_cast<int>(phase) + 1);
}

std::string Event::KindName() const {
  switch (kind) {
    case EventKind::kSubmitted: return "SUBMITTED";
    case EventKind::kAllocated: return "ALLOCATED";
    case EventKind::kPhaseStart: return Upper(PhaseName(phase)) + "_START";
    case EventKind::kPhaseEnd: return Upper(PhaseName(phase)) + "_END";
    case EventKind::kCompleted: return "COMPLETED";
    case EventKind::kFailed: return "FAILED";
  }
  return "?";
}

Json EventToJson(const Event& e) {
  return {{"time_s", ToSeconds(e.time)},
          {"job_id", e.job_id},
          {"kind", e.KindName()},
          {"detail", e.detail}};
}

std::string EventLogToJsonl(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    // Fixed field order, independent of the JSON library's key ordering.
    nlohmann::ordered_json line = {{"time_s", ToSeconds(e.time)},
                                   {"job_id", e.job_id},
                                   {"kind", e.KindName()},
                                   {"detail", e.detail}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

Json JobStatusToJson(const JobStatus& s) {
  Json devices = Json::object();
  for (size_t i = 0; i < s.nodes.size(); ++i) devices[s.nodes[i]] = s.devices[i];
  Json phases = Json::array();
  for (size_t i = 0; i < s.phases.size(); ++i) {
    Json p = {{"phase", PhaseName(kAllPhases[i])}, {"start_s", ToSeconds(s.phases[i].start)}};
    if (s.phases[i].end) p["end_s"] = ToSeconds(*s.phases[i].end);
    phases.push_back(std::move(p));
  }
  Json out = {{"job_id", s.job_id},
              {"phase", SlicePhaseName(s.phase)},
              {"nodes", s.nodes},
              {"devices", devices},
              {"timestamps", phases},
              {"submitted_s", ToSeconds(s.submitted_at)}};
  if (s.queue_position) out["queue_position"] = *s.queue_position;
  if (s.allocated_at) out["allocated_s"] = ToSeconds(*s.allocated_at);
  if (s.failure_reason) out["failure_reason"] = *s.failure_reason;
  return out;
}

Engine::Engine(ClusterConfig cluster, EngineOptions options, std::unique_ptr<Executor> executor)
    : cluster_(std::move(cluster)),
      options_(options),
      executor_(executor ? std::move(executor) : std::make_unique<SimulatedExecutor>()),
      fabric_((cluster_.Validate(), cluster_)) {
  for (const auto& n : cluster_.nodes) free_nodes_.insert(n.id);
  for (const auto& d : cluster_.pool) free_devices_[d.kind].insert(d.id);
}

Engine::Slice& Engine::Get(const std::string& job_id) {
  auto it = slices_.find(job_id);
  if (it == slices_.end()) throw NotFoundError("unknown job '" + job_id + "'");
  return it->second;
}

const Engine::Slice& Engine::Get(const std::string& job_id) const {
  auto it = slices_.find(job_id);
  if (it == slices_.end()) throw NotFoundError("unknown job '" + job_id + "'");
  return it->second;
}

void Engine::Log(Millis time, const std::string& job_id, EventKind kind, Phase phase,
                 std::string detail) {
  events_.push_back(Event{events_.size(), time, job_id, kind, phase, std::move(detail)});
}

void Engine::At(Millis time, std::function<void()> action) {
  pending_.push(Pending{time, next_seq_++, std::move(action)});
}

void Engine::Submit(JobSpec job) {
  job.Validate();
  if (slices_.contains(job.id)) throw ConflictError("duplicate job id '" + job.id + "'");
  if (auto verdict = CheckFeasible(job.slice, cluster_); !verdict) {
    throw InfeasibleError(verdict.violation);
  }
  for (const auto& t : job.tasks) executor_->CheckRunnable(t);

  const std::string id = job.id;
  const std::string detail =
      "slice=" + job.slice.Name() + " tasks=" + std::to_string(job.tasks.size());
  Slice slice;
  slice.job = std::move(job);
  slice.submitted_at = clock_;
  slices_.emplace(id, std::move(slice));
  order_.push_back(id);
  queue_.push_back(id);
  Log(clock_, id, EventKind::kSubmitted, Phase::kAttachDevice, detail);
  SchedulePass();
}

bool Engine::Satisfiable(const SliceSpec& spec) const {
  if (static_cast<int>(free_nodes_.size()) < spec.node_count) return false;
  for (const auto& kind : spec.Classes()) {
    auto it = free_devices_.find(kind);
    const int free = it == free_devices_.end() ? 0 : static_cast<int>(it->second.size());
    if (free < spec.Demand(kind)) return false;
  }
  return true;
}

void Engine::SchedulePass() {
  if (queue_.empty()) return;
  PassRecord record;
  if (pass_observer_) {
    record.time = clock_;
    record.queue_before = queue_;
    record.free_nodes_before.assign(free_nodes_.begin(), free_nodes_.end());
    for (const auto& [kind, ids] : free_devices_) {
      record.free_devices_before[kind] = static_cast<int>(ids.size());
    }
  }

  std::vector<std::string> granted;
  std::vector<std::string> waiting;
  bool blocked = false;
  for (const auto& id : queue_) {
    if (!blocked && Satisfiable(Get(id).job.slice)) {
      granted.push_back(id);
      Allocate(Get(id));
    } else {
      waiting.push_back(id);
      if (options_.strict_fifo) blocked = true;
    }
  }
  queue_ = std::move(waiting);

  if (pass_observer_) {
    record.allocated = granted;
    pass_observer_(record);
  }
  // Lifecycles start after the whole pass has reserved its gangs.
  for (const auto& id : granted) BeginPhase(Get(id), Phase::kAttachDevice);
}

void Engine::Allocate(Slice& slice) {
  const auto& spec = slice.job.slice;
  const int n = spec.node_count;
  auto take = [](IdSet& set) {
    auto id = *set.begin();
    set.erase(set.begin());
    return id;
  };

  slice.nodes.clear();
  for (int i = 0; i < n; ++i) slice.nodes.push_back(take(free_nodes_));
  slice.devices.assign(n, {});
  for (int i = 0; i < n; ++i) {
    for (const auto& r : spec.devices_per_node) {
      for (int c = 0; c < r.count; ++c) slice.devices[i].push_back(take(free_devices_[r.kind]));
    }
  }
  int spread = 0;
  for (const auto& r : spec.devices_per_slice) {
    for (int c = 0; c < r.count; ++c) {
      slice.devices[spread++ % n].push_back(take(free_devices_[r.kind]));
    }
  }

  slice.phase = SlicePhase::kAttaching;
  slice.allocated_at = clock_;
  slice.results.assign(slice.job.tasks.size(), std::nullopt);

  std::string detail = "nodes=" + JoinIds(slice.nodes) + " devices=";
  for (int i = 0; i < n; ++i) {
    if (i > 0) detail += ";";
    detail += slice.nodes[i] + ":[" + JoinIds(slice.devices[i]) + "]";
  }
  Log(clock_, slice.job.id, EventKind::kAllocated, Phase::kAttachDevice, std::move(detail));
}

void Engine::BeginPhase(Slice& slice, Phase phase) {
  slice.records.push_back(PhaseRecord{clock_, std::nullopt});
  slice.phase = ActivePhaseOf(phase);
  Log(clock_, slice.job.id, EventKind::kPhaseStart, phase, "");
  RunPhase(slice, phase);
}

void Engine::RunPhase(Slice& slice, Phase phase) {
  const auto& p = cluster_.fabric_params;
  const std::string id = slice.job.id;
  const int n = static_cast<int>(slice.nodes.size());
  auto end_at = [this, id, phase](Millis t) {
    At(t, [this, id, phase] { EndPhase(Get(id), phase); });
  };

  switch (phase) {
    case Phase::kAttachDevice: {
      Millis end = clock_;
      for (int i = 0; i < n; ++i) {
        for (const auto& dev : slice.devices[i]) {
          end = std::max(end, fabric_.Attach(dev, slice.nodes[i], clock_));
        }
      }
      end_at(end);
      break;
    }
    case Phase::kLaunchMachine:
      slice.pending = n;
      for (int i = 0; i < n; ++i) {
        At(clock_ + p.machine_boot, [this, id, i] { StartDownload(id, i); });
      }
      break;
    case Phase::kPrepareTask:
      end_at(clock_ + p.prepare);
      break;
    case Phase::kLaunchTask: {
      size_t most = 0;
      for (const auto& devs : slice.devices) most = std::max(most, devs.size());
      end_at(clock_ + p.launch_per_device * static_cast<Millis>(most));
      break;
    }
    case Phase::kRunTask:
      slice.pending = static_cast<int>(slice.job.tasks.size());
      for (int idx = 0; idx < static_cast<int>(slice.job.tasks.size()); ++idx) {
        const auto& task = slice.job.tasks[idx];
        TaskLaunch launch{id, idx, task, slice.nodes[task.node_index]};
        if (auto result = executor_->Launch(launch, clock_)) {
          At(result->ended, [this, id, idx, r = *result] { OnTaskDone(id, idx, r); });
        }
      }
      break;
    case Phase::kDetachDevice: {
      Millis end = clock_;
      for (int i = 0; i < n; ++i) {
        for (const auto& dev : fabric_.AttachmentsOf(slice.nodes[i])) {
          end = std::max(end, fabric_.Detach(dev, slice.nodes[i], clock_));
        }
      }
      end_at(end);
      break;
    }
    case Phase::kDestroyMachine:
      end_at(clock_ + p.destroy);
      break;
  }
}

void Engine::EndPhase(Slice& slice, Phase phase) {
  slice.records.back().end = clock_;
  Log(clock_, slice.job.id, EventKind::kPhaseEnd, phase, "");
  if (phase == Phase::kDestroyMachine) {
    Finish(slice);
    return;
  }
  auto next = static_cast<Phase>(static_cast<int>(phase) + 1);
  if (slice.cancel_requested && next < Phase::kDetachDevice) {
    // Skipped phases keep the timeline contiguous as zero-length intervals.
    while (next < Phase::kDetachDevice) {
      slice.records.push_back(PhaseRecord{clock_, clock_});
      next = static_cast<Phase>(static_cast<int>(next) + 1);
    }
  }
  BeginPhase(slice, next);
}

void Engine::NodeDone(const std::string& job_id, Phase phase) {
  auto& slice = Get(job_id);
  if (--slice.pending == 0) EndPhase(slice, phase);
}

void Engine::OnTaskDone(const std::string& job_id, int task_index, TaskResult result) {
  auto& slice = Get(job_id);
  if (slice.phase != SlicePhase::kRunning) return;  // run already cut short
  if (task_index < 0 || task_index >= static_cast<int>(slice.results.size()) ||
      slice.results[task_index]) {
    return;
  }
  slice.results[task_index] = std::move(result);
  if (--slice.pending > 0) return;

  std::vector<TaskResult> all;
  for (auto& r : slice.results) all.push_back(*r);
  const auto outcome = GangBarrier(all);
  if (outcome.failed) {
    slice.task_failed = true;
    slice.failure_reason = outcome.detail;
  }
  EndPhase(slice, Phase::kRunTask);
}

void Engine::CompleteTask(const std::string& job_id, int task_index, TaskResult result) {
  OnTaskDone(job_id, task_index, std::move(result));
}

void Engine::Finish(Slice& slice) {
  for (const auto& node : slice.nodes) free_nodes_.insert(node);
  for (const auto& devs : slice.devices) {
    for (const auto& dev : devs) free_devices_[cluster_.FindDevice(dev)->kind].insert(dev);
  }
  if (slice.failure_reason) {
    slice.phase = SlicePhase::kFailed;
    Log(clock_, slice.job.id, EventKind::kFailed, Phase::kAttachDevice, *slice.failure_reason);
  } else {
    slice.phase = SlicePhase::kDone;
    Log(clock_, slice.job.id, EventKind::kCompleted, Phase::kAttachDevice, "");
  }
  SchedulePass();
}

void Engine::Cancel(const std::string& job_id) {
  auto& slice = Get(job_id);
  switch (slice.phase) {
    case SlicePhase::kDone:
    case SlicePhase::kFailed:
      throw ConflictError("job '" + job_id + "' has already finished");
    case SlicePhase::kQueued:
      std::erase(queue_, job_id);
      slice.phase = SlicePhase::kFailed;
      slice.failure_reason = "cancelled";
      Log(clock_, job_id, EventKind::kFailed, Phase::kAttachDevice, "cancelled");
      SchedulePass();
      return;
    case SlicePhase::kDetaching:
    case SlicePhase::kDestroying:
      return;  // already tearing down
    case SlicePhase::kRunning:
      slice.cancel_requested = true;
      slice.failure_reason = "cancelled";
      executor_->Cancel(job_id);
      EndPhase(slice, Phase::kRunTask);
      return;
    default:
      slice.cancel_requested = true;
      slice.failure_reason = "cancelled";
      return;
  }
}

// Image downloads share the management link fairly: with k transfers in
// flight each progresses at link_gbps / k. Progress is integrated piecewise
// between changes in k, and only the earliest completion is kept scheduled.

void Engine::StartDownload(const std::string& job_id, int node_index) {
  SettleDownloads(clock_);
  downloads_.push_back(Download{job_id, node_index, cluster_.image_gb * 8.0});
  PlanDownloads();
}

void Engine::SettleDownloads(Millis now) {
  if (!downloads_.empty()) {
    const double rate = cluster_.link_gbps / static_cast<double>(downloads_.size());
    const double elapsed_s = ToSeconds(now - downloads_settled_at_);
    for (auto& d : downloads_) d.remaining_gbit -= rate * elapsed_s;
  }
  downloads_settled_at_ = now;
}

void Engine::PlanDownloads() {
  const auto generation = ++download_generation_;
  if (downloads_.empty()) return;
  const double rate = cluster_.link_gbps / static_cast<double>(downloads_.size());
  double least = downloads_.front().remaining_gbit;
  for (const auto& d : downloads_) least = std::min(least, d.remaining_gbit);
  const double ms = std::max(0.0, least) / rate * 1000.0;
  const auto wait = std::max<Millis>(0, static_cast<Millis>(std::ceil(ms - 1e-6)));

  At(clock_ + wait, [this, generation] {
    if (generation != download_generation_) return;  // superseded
    SettleDownloads(clock_);
    std::vector<Download> finished;
    std::erase_if(downloads_, [&](const Download& d) {
      if (d.remaining_gbit > kDownloadEpsilonGbit) return false;
      finished.push_back(d);
      return true;
    });
    PlanDownloads();
    for (const auto& d : finished) NodeDone(d.job_id, Phase::kLaunchMachine);
  });
}

bool Engine::Step() {
  if (pending_.empty()) return false;
  Pending next = pending_.top();
  pending_.pop();
  clock_ = std::max(clock_, next.time);
  next.action();
  return true;
}

std::optional<Millis> Engine::NextEventTime() const {
  if (pending_.empty()) return std::nullopt;
  return pending_.top().time;
}

void Engine::Advance(Millis until) {
  if (until < clock_) {
    throw ConflictError("time regression: clock is " + FormatSeconds(clock_) + " s");
  }
  while (!pending_.empty() && pending_.top().time <= until) Step();
  clock_ = until;
}

void Engine::RunUntilIdle() {
  while (Step()) {
  }
}

JobStatus Engine::Status(const std::string& job_id) const {
  const auto& slice = Get(job_id);
  JobStatus s;
  s.job_id = job_id;
  s.phase = slice.phase;
  if (slice.phase == SlicePhase::kQueued) {
    auto it = std::find(queue_.begin(), queue_.end(), job_id);
    s.queue_position = static_cast<int>(it - queue_.begin());
  }
  s.nodes = slice.nodes;
  s.devices = slice.devices;
  s.phases = slice.records;
  s.failure_reason = slice.failure_reason;
  s.submitted_at = slice.submitted_at;
  s.allocated_at = slice.allocated_at;
  return s;
}

Timeline Engine::TimelineOf(const std::string& job_id) const {
  const auto& slice = Get(job_id);
  const bool finished = slice.phase == SlicePhase::kDone || slice.phase == SlicePhase::kFailed;
  if (!finished) throw ConflictError("job '" + job_id + "' is still active");
  if (slice.records.size() != kPhaseCount) {
    throw ConflictError("job '" + job_id + "' was cancelled before a slice was allocated");
  }
  Timeline t;
  for (int i = 0; i < kPhaseCount; ++i) {
    t.phases[i] = Interval{slice.records[i].start, *slice.records[i].end};
  }
  return t;
}

ClusterView Engine::View() const {
  ClusterView v;
  v.free_nodes.assign(free_nodes_.begin(), free_nodes_.end());
  for (const auto& [kind, ids] : free_devices_) {
    v.free_devices.insert(v.free_devices.end(), ids.begin(), ids.end());
  }
  std::sort(v.free_devices.begin(), v.free_devices.end(),
            [](const auto& a, const auto& b) { return NaturalLess(a, b); });
  v.attachments = fabric_.Snapshot();
  return v;
}

bool Engine::Idle() const {
  if (!queue_.empty()) return false;
  return std::all_of(slices_.begin(), slices_.end(), [](const auto& kv) {
    return kv.second.phase == SlicePhase::kDone || kv.second.phase == SlicePhase::kFailed;
  });
}

}  // namespace slicerm
