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

#include "lfqa/qa_types.hpp"

#include <algorithm>
#include <cctype>

#include "lfqa/error.hpp"

namespace lfqa {

std::string_view to_string(ArtefactDomain domain) {
  switch (domain) {
  case ArtefactDomain::Noise: return "noise";
  case ArtefactDomain::Zipper: return "zipper";
  case ArtefactDomain::Positioning: return "positioning";
  case ArtefactDomain::Banding: return "banding";
  case ArtefactDomain::Motion: return "motion";
  case ArtefactDomain::Contrast: return "contrast";
  case ArtefactDomain::Distortion: return "distortion";
  }
  return "unknown";
}

std::optional<ArtefactDomain> parse_domain(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (auto d : kAllDomains)
    if (to_string(d) == lower)
      return d;
  return std::nullopt;
}

Severity severity_from_int(int value) {
  if (value < 0 || value > 2)
    throw InvalidArgument("severity must be 0, 1 or 2");
  return static_cast<Severity>(value);
}

} // namespace lfqa
