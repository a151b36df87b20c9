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

#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lfqa/qa_types.hpp"
#include "lfqa/rng.hpp"
#include "lfqa/volume.hpp"

namespace lfqa {

/// Closed interval [lo, hi].
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Range &) const = default;
};

// Sampling ranges of one severity class. Offsets and displacements are in
// voxels, angles in degrees, motion offsets in mm, sigmas on the [0, 1]
// intensity scale (noise) or in voxels (blur).

struct NoiseSpec {
  Range sigma_noise;
  Range sigma_blur;
};

struct ZipperSpec {
  int n_spikes = 1;
  Range contrast;
  Range sigma_blur;
};

struct PositioningSpec {
  Range x_offset;
  Range y_offset;
  Range theta_deg;
  Range sigma_blur;
};

struct BandingSpec {
  NoiseSpec noise;
  Range width_fraction{0.1, 0.3};
};

struct MotionSpec {
  Range theta_deg;
  Range offset_mm;
  int n_transforms = 2;
  Range sigma_blur;
  int phase_encode_axis = 1;
};

struct ContrastSpec {
  Range bias_coeff;
  int polynomial_order = 3;
  Range gamma;
  Range sigma_blur;
};

enum class FieldInterpolation { BSpline };

struct DistortionSpec {
  int n_control_points = 7;
  double max_displacement = 9.0;
  FieldInterpolation interpolation = FieldInterpolation::BSpline;
  Range sigma_noise;
  Range sigma_blur;
};

struct SeverityParams {
  NoiseSpec noise;
  ZipperSpec zipper;
  PositioningSpec positioning;
  BandingSpec banding;
  MotionSpec motion;
  ContrastSpec contrast;
  DistortionSpec distortion;
};

/// Simulation ranges for severity classes 1 and 2.
struct SimParams {
  SeverityParams class1;
  SeverityParams class2;

  /// Default per-class sampling ranges of the seven simulators.
  static SimParams defaults();

  /// Throws InvalidArgument for Class0.
  const SeverityParams &at(Severity severity) const;
  /// Throws InvalidArgument if any range has lo > hi or a count is invalid.
  void validate() const;
};

// Concrete (sampled) parameters, one struct per domain.

struct NoiseParams {
  double sigma_noise = 0.0;
  double sigma_blur = 0.0;
};

struct ZipperParams {
  int n_spikes = 1;
  double contrast = 0.0;
  double sigma_blur = 0.0;
};

struct PositioningParams {
  double x_offset = 0.0;
  double y_offset = 0.0;
  double theta_deg = 0.0;
  double sigma_blur = 0.0;
};

struct BandingParams {
  double sigma_noise = 0.0;
  double sigma_blur = 0.0;
  int axis = 0;
  double width_fraction = 0.1;
  /// Band start as a fraction of the free travel (n - width), in [0, 1].
  double start_fraction = 0.0;
};

struct MotionStep {
  double theta_deg = 0.0;
  double offset_mm = 0.0;
  /// In-plane direction of the translation, degrees from the i axis.
  double direction_deg = 0.0;
};

struct MotionParams {
  int n_transforms = 0;
  std::vector<MotionStep> steps;
  double sigma_blur = 0.0;
  int phase_encode_axis = 1;
};

struct ContrastParams {
  int polynomial_order = 3;
  /// One signed coefficient per monomial, in bias_monomials() order.
  std::vector<double> coefficients;
  /// Signed exponent offset: v -> v^(1 + gamma).
  double gamma = 0.0;
  double sigma_blur = 0.0;
};

struct DistortionParams {
  int n_control_points = 7;
  double max_displacement = 0.0;
  double sigma_noise = 0.0;
  double sigma_blur = 0.0;
};

using ConcreteParams =
    std::variant<NoiseParams, ZipperParams, PositioningParams, BandingParams,
                 MotionParams, ContrastParams, DistortionParams>;

/// Domain of a concrete parameter set (variant index order = domain order).
ArtefactDomain domain_of(const ConcreteParams &params);

/// Draws every scalar uniformly from its class range; counts are copied.
/// Throws InvalidArgument("clean class has no parameters") for Class0.
ConcreteParams sample_params(ArtefactDomain domain, Severity severity,
                             const SimParams &sim_params, Rng &rng);

// Simulators. Inputs are expected on the [0, 1] scale; outputs stay in [0, 1].

Volume simulate_noise(const Volume &volume, const NoiseParams &p, Rng &rng);
Volume simulate_zipper(const Volume &volume, const ZipperParams &p, Rng &rng);
Volume simulate_positioning(const Volume &volume, const PositioningParams &p,
                            Rng &rng);
Volume simulate_banding(const Volume &volume, const BandingParams &p, Rng &rng);
Volume simulate_motion(const Volume &volume, const MotionParams &p, Rng &rng);
Volume simulate_contrast(const Volume &volume, const ContrastParams &p,
                         Rng &rng);
Volume simulate_distortion(const Volume &volume, const DistortionParams &p,
                           Rng &rng);

/// Runs the simulator matching the variant alternative.
Volume simulate(const Volume &volume, const ConcreteParams &params, Rng &rng);

/**
 * Normalises `volume` to [0, 1], samples parameters for (domain, severity)
 * and corrupts it. Returns the corrupted volume and the sampled parameters.
 */
std::pair<Volume, ConcreteParams> apply_artefact(const Volume &volume,
                                                 ArtefactDomain domain,
                                                 Severity severity,
                                                 const SimParams &sim_params,
                                                 Rng &rng);

// Building blocks exposed for testing.

/// World-space rigid transform: rotation by theta about the grid's k axis
/// through the grid centre, then translation by (dx, dy) voxels along i, j.
AffineTransform in_plane_transform(const Grid &grid, double dx_voxels,
                                   double dy_voxels, double theta_deg);

/// Exponents (a, b, c) of x^a y^b z^c, total degree 1..order.
std::vector<Index3> bias_monomials(int order);
/// exp(sum c_m x^a y^b z^c) over coordinates normalised to [-1, 1].
Volume bias_field(const Grid &grid, int order,
                  const std::vector<double> &coefficients);

/// Dense displacement field, in voxels, one vector per voxel (x fastest).
struct DisplacementField {
  Index3 dims;
  std::vector<Vec3> vectors;
  double max_norm() const;
  double max_component() const;
};

/// Uniform cubic B-spline basis is non-negative with unit sum, so a field
/// approximated from control values bounded by D is bounded by D per
/// component.
inline constexpr double kBSplineOvershootBound = 1.0;

/**
 * Control lattice of n_control_points per axis spanning the grid, each
 * control vector uniform in [-max_displacement, max_displacement]^3, evaluated
 * densely with the uniform cubic B-spline basis (end control points
 * replicated).
 */
DisplacementField bspline_displacement_field(const Index3 &dims,
                                             int n_control_points,
                                             double max_displacement,
                                             Rng &rng);

/// out(x) = volume(x + field(x)), trilinear, zero outside.
Volume warp(const Volume &volume, const DisplacementField &field);

// JSON (provenance logs, --params files).
nlohmann::json to_json(const ConcreteParams &params);
nlohmann::json to_json(const SimParams &params);
/// Overlays `patch` (same layout as to_json(SimParams)) on `base`.
SimParams sim_params_from_json(const nlohmann::json &patch,
                               const SimParams &base = SimParams::defaults());

} // namespace lfqa
