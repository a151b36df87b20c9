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
#include <vector>

#include "lfqa/qa_types.hpp"
#include "lfqa/volume.hpp"

namespace lfqa {

// NIfTI-1 single-file (.nii, n+1) and header/image pair (.hdr/.img, ni1)
// volumes, optionally gzip-compressed. Both byte orders are accepted on read;
// writes are little-endian .nii with the sform set from the grid.

/**
 * Reads a 3D volume. The grid comes from the sform when sform_code > 0, else
 * the qform when qform_code > 0, else diag(pixdim). scl_slope/scl_inter are
 * applied when slope is non-zero.
 *
 * Errors: IoError (missing/truncated file), ParseError("not a NIfTI file"),
 * ParseError("unsupported voxel type"), ParseError("not a 3D volume").
 */
Volume read_volume(const std::filesystem::path &path);

/// float32, vox_offset 352. gzip when the name ends in ".gz".
void write_volume(const Volume &volume, const std::filesystem::path &path);

/// Reads a label image; every voxel must hold a non-negative integer.
LabelMask read_mask(const std::filesystem::path &path);
/// uint8 when all labels fit, else uint16.
void write_mask(const LabelMask &mask, const std::filesystem::path &path);

/**
 * QA score table: a header row whose first column is the sample id and whose
 * other columns are the seven domain names (any order, case-insensitive), then
 * one row per sample. Errors name the 1-based row and the column.
 */
std::vector<QAScoreRecord> read_qa_csv(const std::filesystem::path &path);
/// Writes "sample_id,noise,zipper,...,distortion" in canonical order.
void write_qa_csv(const std::vector<QAScoreRecord> &records,
                  const std::filesystem::path &path);

/// True for .nii, .nii.gz, .hdr and .hdr.gz names.
bool is_nifti_path(const std::filesystem::path &path);
/// File name without the NIfTI extension: "sub-01.nii.gz" -> "sub-01".
std::string nifti_stem(const std::filesystem::path &path);

} // namespace lfqa
