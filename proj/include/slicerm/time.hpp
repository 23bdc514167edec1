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

#include <cmath>
#include <cstdint>
#include <string>

namespace slicerm {

// Simulation time and durations, in integer milliseconds.
using Millis = std::int64_t;

// Decimal seconds to milliseconds, rounding half-up.
inline Millis ToMillis(double seconds) {
  return static_cast<Millis>(std::floor(seconds * 1000.0 + 0.5));
}

inline double ToSeconds(Millis ms) { return static_cast<double>(ms) / 1000.0; }

// Fixed three-decimal rendering ("104.570"), used by CSV and text reports.
std::string FormatSeconds(Millis ms);

}  // namespace slicerm
