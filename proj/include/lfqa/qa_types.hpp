/*
 * lfqa : low-field MRI quality assessment and hippocampus atlas toolkit
 *
 * Copyright 2026 The lfqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace lfqa {

/// The seven artefact domains, in canonical (CSV column) order.
enum class ArtefactDomain {
  Noise,
  Zipper,
  Positioning,
  Banding,
  Motion,
  Contrast,
  Distortion,
};

inline constexpr std::size_t kNumDomains = 7;

inline constexpr std::array<ArtefactDomain, kNumDomains> kAllDomains = {
    ArtefactDomain::Noise,   ArtefactDomain::Zipper,
    ArtefactDomain::Positioning, ArtefactDomain::Banding,
    ArtefactDomain::Motion,  ArtefactDomain::Contrast,
    ArtefactDomain::Distortion};

/// Lower-case serialization name, e.g. "noise".
std::string_view to_string(ArtefactDomain domain);
/// Case-insensitive inverse of to_string.
std::optional<ArtefactDomain> parse_domain(std::string_view name);

inline std::size_t index_of(ArtefactDomain d) { return static_cast<std::size_t>(d); }

/// Quality score: 0 clean, 1 moderate, 2 severe.
enum class Severity { Class0 = 0, Class1 = 1, Class2 = 2 };

inline constexpr int kNumSeverities = 3;

inline int to_int(Severity s) { return static_cast<int>(s); }
/// Throws InvalidArgument outside {0, 1, 2}.
Severity severity_from_int(int value);

/// One row of a QA score table.
struct QAScoreRecord {
  std::string sample_id;
  std::array<Severity, kNumDomains> scores{};

  Severity &operator[](ArtefactDomain d) { return scores[index_of(d)]; }
  Severity operator[](ArtefactDomain d) const { return scores[index_of(d)]; }

  bool operator==(const QAScoreRecord &) const = default;
};

} // namespace lfqa
