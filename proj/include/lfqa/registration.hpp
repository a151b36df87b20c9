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
#include <filesystem>
#include <string>
#include <vector>

#include "lfqa/volume.hpp"

namespace lfqa {

enum class Similarity { NormalizedCrossCorrelation, SumOfSquaredDifferences };

struct RegistrationConfig {
  Dof dof = Dof::Affine;
  Similarity similarity = Similarity::NormalizedCrossCorrelation;
  /// Strictly decreasing, ending at 1.
  std::vector<int> pyramid_factors{4, 2, 1};
  int max_iterations = 60;
  /// A level stops once every step has shrunk to this fraction of its
  /// initial size.
  double parameter_tolerance = 1e-3;
  double translation_step_mm = 2.0;
  double rotation_step_deg = 2.0;
  double scale_step = 0.02;
  double shear_step = 0.01;

  /// Throws InvalidArgument when the invariants above do not hold.
  void validate() const;
};

/// Per pyramid level: the cost after every accepted sweep (lower is better;
/// -NCC or mean SSD).
struct LevelTrace {
  int factor = 1;
  std::vector<double> costs;
};

struct RegistrationResult {
  /// Maps moving world coordinates onto fixed world coordinates.
  AffineTransform transform;
  /// NCC (higher is better) or mean SSD (lower is better) at full resolution.
  double final_similarity = 0.0;
  std::vector<LevelTrace> trace;
};

/**
 * Multi-resolution intensity-based affine registration with a derivative-free
 * coordinate-descent optimiser (per-parameter probing, step halving). The
 * transform is parameterised about the fixed image centre as
 * T = Translate(t) * C * R(rx, ry, rz) * Scale(s) * Shear(h) * C^-1.
 *
 * Errors: InvalidArgument for constant inputs, NumericalError("registration
 * diverged") when the result is worse than the identity at the finest level.
 */
RegistrationResult register_affine(const Volume &moving, const Volume &fixed,
                                   const RegistrationConfig &config = {});

/// Similarity of `moving` mapped through `transform` onto `fixed`'s grid,
/// over the overlap. NCC or mean SSD per `similarity`.
double similarity(const Volume &moving, const Volume &fixed,
                  const AffineTransform &transform, Similarity similarity);

struct LabelPropagation {
  enum class Mode { Nearest, LinearThenThreshold };
  Mode mode = Mode::Nearest;
  double threshold = 0.5;
};

/// Maps a mask onto `target_grid`. Linear mode interpolates the indicator and
/// keeps voxels >= threshold; it requires a binary mask.
LabelMask propagate_label(const LabelMask &mask, const AffineTransform &transform,
                          const Grid &target_grid,
                          LabelPropagation mode = {});

/// Voxelwise hippocampus probability on a reference subject's grid.
struct Atlas {
  Atlas(Volume probability, std::size_t n_contributors, double threshold = 0.1);

  Volume probability;
  std::size_t n_contributors;
  double threshold;
};

struct Subject {
  std::string id;
  Volume image;
  LabelMask mask;
};

/**
 * Registers every subject to subjects[reference_index], maps each indicator
 * mask with trilinear interpolation (no threshold) and averages. Errors carry
 * the failing subject id. Registrations run on up to `jobs` threads; the sum
 * is reduced in subject order.
 */
Atlas build_atlas(const std::vector<Subject> &subjects,
                  std::size_t reference_index,
                  const RegistrationConfig &config = {}, int jobs = 1);

/// voxel = 1 iff probability >= t.
LabelMask threshold_atlas(const Atlas &atlas, double t);

/// Registers atlas_space_volume onto `target`, maps the probability map and
/// thresholds it at atlas.threshold.
LabelMask segment_by_atlas(const Volume &target, const Atlas &atlas,
                           const Volume &atlas_space_volume,
                           const RegistrationConfig &config = {});

/// (background, foreground) fractions of an ROI. Components sum to 1.
struct TissueRatio {
  double background = 1.0;
  double foreground = 0.0;
};

/// ROI of roi_dims voxels centred at `center` (crop_roi convention); voxels
/// outside the mask count as background.
TissueRatio compute_tissue_ratio(const LabelMask &mask, const Index3 &center,
                                 const Index3 &roi_dims);
/// ROI centred on the mask grid centre (dims / 2).
TissueRatio compute_tissue_ratio(const LabelMask &mask, const Index3 &roi_dims);

// Persistence.

/**
 * Transform file grammar: lines starting with '#' are comments; one line
 * "dof <6|9|12>"; then four lines of four whitespace-separated numbers (the
 * row-major 4x4 matrix).
 */
void write_transform(const AffineTransform &transform,
                     const std::filesystem::path &path);
AffineTransform read_transform(const std::filesystem::path &path);

/// Writes the probability volume to `path` and a JSON sidecar
/// {threshold, n_contributors, ...extra} next to it (see atlas_sidecar_path).
void write_atlas(const Atlas &atlas, const std::filesystem::path &path,
                 const std::string &extra_json = "{}");
Atlas read_atlas(const std::filesystem::path &path);
/// "atlas.nii.gz" -> "atlas.json".
std::filesystem::path atlas_sidecar_path(const std::filesystem::path &path);

} // namespace lfqa
