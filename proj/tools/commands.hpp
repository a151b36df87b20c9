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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace lfqa::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingInput = 3;
inline constexpr int kExitNumerical = 4;

/// Runs one command line (args[0] is the program name). Logs go to `log`.
int run_cli(const std::vector<std::string> &args, std::ostream &log);

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path mask;
};

/// "id<TAB>image<TAB>mask" lines; '#' comments and blank lines are skipped;
/// relative paths resolve against the manifest's directory. Sorted by id.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path &path);

} // namespace lfqa::cli
