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

// JSON documents for clusters, jobs and timelines. The schemas are described
// in docs/formats.md. Parse functions throw ParseError for malformed input and
// ValidationError when the decoded value breaks a domain invariant.

#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "slicerm/model.hpp"

namespace slicerm {

using Json = nlohmann::json;

ClusterConfig ParseClusterConfig(std::string_view text);
JobSpec ParseJobSpec(std::string_view text);

ClusterConfig ClusterFromJson(const Json& doc);
Json ClusterToJson(const ClusterConfig& cluster);

// Reads a (possibly partial) fabric_params object on top of `base`.
LatencyParams LatencyFromJson(const Json& doc, LatencyParams base);
Json LatencyToJson(const LatencyParams& params);

JobSpec JobFromJson(const Json& doc);
Json JobToJson(const JobSpec& job);

Json TimelineToJson(const Timeline& timeline);
Timeline TimelineFromJson(const Json& doc);

// Parses text into a Json value, mapping syntax errors to ParseError.
Json ParseJsonText(std::string_view text);

inline std::string RenderClusterConfig(const ClusterConfig& c) {
  return ClusterToJson(c).dump(2);
}
inline std::string RenderJobSpec(const JobSpec& j) { return JobToJson(j).dump(2); }

}  // namespace slicerm
