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

#include "slicerm/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slicerm/errors.hpp"

namespace slicerm {
namespace {

constexpr std::array<char, kPhaseCount> kGlyphs = {'A', 'M', 'P', 'L', 'R', 'D', 'X'};

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::string CsvField(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string BreakdownCsv(const std::vector<JobTimeline>& timelines) {
  std::string out = "job_id";
  for (Phase p : kAllPhases) out += "," + std::string(PhaseName(p)) + "_s";
  out += ",makespan_s,overhead_fraction\r\n";
  for (const auto& jt : timelines) {
    out += CsvField(jt.job_id);
    for (const auto& iv : jt.timeline.phases) out += "," + FormatSeconds(iv.Duration());
    out += "," + FormatSeconds(jt.timeline.Makespan()) + ",";
    if (jt.timeline.Makespan() > 0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", ComputeBreakdown(jt.timeline).overhead_fraction);
      out += buf;
    }
    out += "\r\n";
  }
  return out;
}

std::string GanttChart(const std::vector<JobTimeline>& timelines, int width) {
  width = std::max(width, 1);
  std::ostringstream out;
  if (timelines.empty()) {
    out << "(no slices)\n";
    return out.str();
  }
  Millis t0 = timelines.front().timeline.Start();
  Millis t1 = timelines.front().timeline.End();
  size_t label = 0;
  for (const auto& jt : timelines) {
    t0 = std::min(t0, jt.timeline.Start());
    t1 = std::max(t1, jt.timeline.End());
    label = std::max(label, jt.job_id.size());
  }
  const Millis span = t1 - t0;

  out << "time " << FormatSeconds(t0) << " .. " << FormatSeconds(t1) << " s, " << width
      << " columns\n";
  out << "legend:";
  for (int i = 0; i < kPhaseCount; ++i) out << ' ' << kGlyphs[i] << '=' << PhaseName(kAllPhases[i]);
  out << " .=idle\n";

  for (const auto& jt : timelines) {
    std::string row(width, '.');
    if (span > 0) {
      for (int b = 0; b < width; ++b) {
        // Midpoint of bucket b, in doubled milliseconds to stay integral.
        const long double mid2 = 2.0L * t0 + static_cast<long double>(2 * b + 1) * span / width;
        for (int i = 0; i < kPhaseCount; ++i) {
          const auto& iv = jt.timeline.phases[i];
          if (iv.Duration() > 0 && mid2 >= 2.0L * iv.start && mid2 < 2.0L * iv.end) {
            row[b] = kGlyphs[i];
            break;
          }
        }
      }
    }
    out << jt.job_id << std::string(label - jt.job_id.size(), ' ') << " |" << row << "| "
        << SlicePhaseName(jt.outcome) << '\n';
  }
  return out.str();
}

Json TimelinesToJson(const std::vector<JobTimeline>& timelines) {
  Json jobs = Json::array();
  for (const auto& jt : timelines) {
    Json o = {{"job_id", jt.job_id},
              {"status", SlicePhaseName(jt.outcome)},
              {"timeline", TimelineToJson(jt.timeline)}};
    if (jt.failure_reason) o["failure_reason"] = *jt.failure_reason;
    jobs.push_back(std::move(o));
  }
  return {{"jobs", jobs}};
}

std::vector<JobTimeline> TimelinesFromJson(const Json& doc) {
  std::vector<JobTimeline> out;
  try {
    for (const auto& o : doc.at("jobs")) {
      JobTimeline jt;
      jt.job_id = o.at("job_id").get<std::string>();
      jt.outcome = ParseSlicePhase(o.at("status").get<std::string>());
      if (o.contains("failure_reason")) jt.failure_reason = o.at("failure_reason").get<std::string>();
      jt.timeline = TimelineFromJson(o.at("timeline"));
      out.push_back(std::move(jt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corrupt timelines: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(std::string("corrupt timelines: ") + e.what());
  }
  return out;
}

void WriteRunDir(const std::filesystem::path& dir, const RunRecord& run) {
  std::filesystem::create_directories(dir);
  WriteFile(dir / "events.jsonl", EventLogToJsonl(run.events));
  WriteFile(dir / "timelines.json", TimelinesToJson(run.timelines).dump(2) + "\n");
  WriteFile(dir / "breakdown.csv", BreakdownCsv(run.timelines));
}

std::vector<JobTimeline> ReadRunTimelines(const std::filesystem::path& dir) {
  const auto path = dir / "timelines.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("no run found at " + dir.string() + " (missing timelines.json)");
  std::ostringstream ss;
  ss << in.rdbuf();
  return TimelinesFromJson(ParseJsonText(ss.str()));
}

}  // namespace slicerm
