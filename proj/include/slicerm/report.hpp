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

#include <filesystem>
#include <string>
#include <vector>

#include "slicerm/scenario.hpp"

namespace slicerm {

// Header plus one row per job:
//   job_id,<phase>_s x7,makespan_s,overhead_fraction
// Durations have three decimals, the fraction six. A zero-makespan row leaves
// the fraction empty.
std::string BreakdownCsv(const std::vector<JobTimeline>& timelines);

// Fixed-width text chart: one row per slice, one glyph per time bucket,
// keyed by the phase active at the bucket's midpoint.
std::string GanttChart(const std::vector<JobTimeline>& timelines, int width = 64);

// RFC 4180 field quoting.
std::string CsvField(const std::string& value);

Json TimelinesToJson(const std::vector<JobTimeline>& timelines);
std::vector<JobTimeline> TimelinesFromJson(const Json& doc);

// Run directory layout: events.jsonl, timelines.json, breakdown.csv.
void WriteRunDir(const std::filesystem::path& dir, const RunRecord& run);
// Throws ParseError when the directory or timelines.json is missing or corrupt.
std::vector<JobTimeline> ReadRunTimelines(const std::filesystem::path& dir);

}  // namespace slicerm
