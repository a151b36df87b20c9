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

#include "lfqa/artefact_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lfqa/error.hpp"
#include "lfqa/kspace.hpp"

namespace lfqa {

// JSON layout of the range tables. Ranges serialise as [lo, hi].
void to_json(nlohmann::json &j, const Range &r) { j = {r.lo, r.hi}; }
void from_json(const nlohmann::json &j, Range &r) {
  if (!j.is_array() || j.size() != 2)
    throw InvalidArgument("range must be a [lo, hi] pair");
  r.lo = j.at(0).get<double>();
  r.hi = j.at(1).get<double>();
}

NLOHMANN_JSON_SERIALIZE_ENUM(FieldInterpolation,
                             {{FieldInterpolation::BSpline, "bspline"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NoiseSpec, sigma_noise, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ZipperSpec, n_spikes, contrast,
                                                sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PositioningSpec, x_offset,
                                                y_offset, theta_deg, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BandingSpec, noise, width_fraction)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MotionSpec, theta_deg, offset_mm,
                                                n_transforms, sigma_blur,
                                                phase_encode_axis)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ContrastSpec, bias_coeff,
                                                polynomial_order, gamma,
                                                sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DistortionSpec, n_control_points,
                                                max_displacement, interpolation,
                                                sigma_noise, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeverityParams, noise, zipper,
                                                positioning, banding, motion,
                                                contrast, distortion)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimParams, class1, class2)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(NoiseParams, sigma_noise, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ZipperParams, n_spikes, contrast, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PositioningParams, x_offset, y_offset,
                                   theta_deg, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BandingParams, sigma_noise, sigma_blur, axis,
                                   width_fraction, start_fraction)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MotionStep, theta_deg, offset_mm,
                                   direction_deg)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MotionParams, n_transforms, steps, sigma_blur,
                                   phase_encode_axis)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ContrastParams, polynomial_order,
                                   coefficients, gamma, sigma_blur)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DistortionParams, n_control_points,
                                   max_displacement, sigma_noise, sigma_blur)

namespace {

constexpr Range kBlur{0.0, 0.6};

SeverityParams class_params(int cls) {
  const bool c1 = cls == 1;
  SeverityParams p;
  p.noise = {c1 ? Range{0.0, 0.1} : Range{0.0, 0.2}, kBlur};
  p.zipper = {1, c1 ? Range{0.1, 0.3} : Range{0.3, 0.6}, kBlur};
  p.positioning = {c1 ? Range{-10, 10} : Range{-20, 20},
                   c1 ? Range{-10, 10} : Range{-20, 20},
                   c1 ? Range{0, 10} : Range{10, 30}, kBlur};
  p.banding = {p.noise, Range{0.1, 0.3}};
  p.motion = {c1 ? Range{-10, 10} : Range{-20, 20},
              c1 ? Range{0, 3} : Range{0, 7}, c1 ? 2 : 4, kBlur, 1};
  p.contrast = {c1 ? Range{0, 0.3} : Range{0, 0.6}, c1 ? 3 : 5,
                c1 ? Range{0, 0.3} : Range{0.3, 0.6}, kBlur};
  p.distortion = {c1 ? 7 : 12, c1 ? 9.0 : 12.0, FieldInterpolation::BSpline,
                  p.noise.sigma_noise, kBlur};
  return p;
}

double draw(Rng &rng, const Range &r) { return rng.uniform(r.lo, r.hi); }

void check_range(const Range &r, const char *name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw InvalidArgument(std::string("invalid range for ") + name);
}

void check_nonneg(const Range &r, const char *name) {
  check_range(r, name);
  if (r.lo < 0)
    throw InvalidArgument(std::string(name) + " must be non-negative");
}

void validate_class(const SeverityParams &p) {
  check_nonneg(p.noise.sigma_noise, "noise.sigma_noise");
  check_nonneg(p.noise.sigma_blur, "noise.sigma_blur");
  if (p.zipper.n_spikes < 1)
    throw InvalidArgument("zipper.n_spikes must be >= 1");
  check_nonneg(p.zipper.contrast, "zipper.contrast");
  if (p.zipper.contrast.lo <= 0.0 || p.zipper.contrast.hi > 1.0)
    throw InvalidArgument("zipper.contrast must lie in (0, 1]");
  check_nonneg(p.zipper.sigma_blur, "zipper.sigma_blur");
  check_range(p.positioning.x_offset, "positioning.x_offset");
  check_range(p.positioning.y_offset, "positioning.y_offset");
  check_range(p.positioning.theta_deg, "positioning.theta_deg");
  check_nonneg(p.positioning.sigma_blur, "positioning.sigma_blur");
  check_nonneg(p.banding.noise.sigma_noise, "banding.noise.sigma_noise");
  check_nonneg(p.banding.noise.sigma_blur, "banding.noise.sigma_blur");
  check_nonneg(p.banding.width_fraction, "banding.width_fraction");
  if (p.banding.width_fraction.hi > 1.0)
    throw InvalidArgument("banding.width_fraction must not exceed 1");
  check_range(p.motion.theta_deg, "motion.theta_deg");
  check_nonneg(p.motion.offset_mm, "motion.offset_mm");
  if (p.motion.n_transforms < 0)
    throw InvalidArgument("motion.n_transforms must be >= 0");
  if (p.motion.phase_encode_axis < 0 || p.motion.phase_encode_axis > 2)
    throw InvalidArgument("motion.phase_encode_axis must be 0, 1 or 2");
  check_nonneg(p.motion.sigma_blur, "motion.sigma_blur");
  check_nonneg(p.contrast.bias_coeff, "contrast.bias_coeff");
  if (p.contrast.polynomial_order < 0)
    throw InvalidArgument("contrast.polynomial_order must be >= 0");
  check_nonneg(p.contrast.gamma, "contrast.gamma");
  if (p.contrast.gamma.hi >= 1.0)
    throw InvalidArgument("contrast.gamma must be below 1");
  check_nonneg(p.contrast.sigma_blur, "contrast.sigma_blur");
  if (p.distortion.n_control_points < 2)
    throw InvalidArgument("distortion.n_control_points must be >= 2");
  if (!(p.distortion.max_displacement >= 0))
    throw InvalidArgument("distortion.max_displacement must be >= 0");
  check_nonneg(p.distortion.sigma_noise, "distortion.sigma_noise");
  check_nonneg(p.distortion.sigma_blur, "distortion.sigma_blur");
}

std::vector<double> add_noise(std::vector<double> values, double sigma, Rng &rng) {
  if (sigma > 0.0)
    for (auto &v : values)
      v = std::clamp(v + sigma * rng.normal(), 0.0, 1.0);
  return values;
}

Volume finish(const Volume &v, double sigma_blur) {
  return gaussian_blur(clamp(v, 0.0, 1.0), sigma_blur);
}

// Uniform cubic B-spline basis at fractional offset t in [0, 1).
std::array<double, 4> bspline_weights(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {(1 - t) * (1 - t) * (1 - t) / 6.0,
          (3 * t3 - 6 * t2 + 4) / 6.0,
          (-3 * t3 + 3 * t2 + 3 * t + 1) / 6.0,
          t3 / 6.0};
}

struct AxisTaps {
  std::vector<std::array<int, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

AxisTaps axis_taps(std::int64_t n, int n_cp) {
  AxisTaps taps;
  taps.index.resize(static_cast<std::size_t>(n));
  taps.weight.resize(static_cast<std::size_t>(n));
  const double h = n > 1 ? static_cast<double>(n - 1) / (n_cp - 1) : 1.0;
  for (std::int64_t x = 0; x < n; ++x) {
    const double u = static_cast<double>(x) / h;
    const int base = std::min(static_cast<int>(std::floor(u)), n_cp - 1);
    const double t = u - base;
    const auto w = bspline_weights(t);
    auto &idx = taps.index[static_cast<std::size_t>(x)];
    for (int m = 0; m < 4; ++m)
      idx[static_cast<std::size_t>(m)] = std::clamp(base - 1 + m, 0, n_cp - 1);
    taps.weight[static_cast<std::size_t>(x)] = w;
  }
  return taps;
}

} // namespace

// ---------------------------------------------------------------------------
// Parameter tables

SimParams SimParams::defaults() { return {class_params(1), class_params(2)}; }

const SeverityParams &SimParams::at(Severity severity) const {
  switch (severity) {
  case Severity::Class1: return class1;
  case Severity::Class2: return class2;
  default: throw InvalidArgument("clean class has no parameters");
  }
}

void SimParams::validate() const {
  validate_class(class1);
  validate_class(class2);
}

ArtefactDomain domain_of(const ConcreteParams &params) {
  return static_cast<ArtefactDomain>(params.index());
}

ConcreteParams sample_params(ArtefactDomain domain, Severity severity,
                             const SimParams &sim_params, Rng &rng) {
  const SeverityParams &p = sim_params.at(severity);
  switch (domain) {
  case ArtefactDomain::Noise:
    return NoiseParams{draw(rng, p.noise.sigma_noise), draw(rng, p.noise.sigma_blur)};
  case ArtefactDomain::Zipper:
    return ZipperParams{p.zipper.n_spikes, draw(rng, p.zipper.contrast),
                        draw(rng, p.zipper.sigma_blur)};
  case ArtefactDomain::Positioning: {
    PositioningParams c;
    c.x_offset = draw(rng, p.positioning.x_offset);
    c.y_offset = draw(rng, p.positioning.y_offset);
    c.theta_deg = draw(rng, p.positioning.theta_deg);
    c.sigma_blur = draw(rng, p.positioning.sigma_blur);
    return c;
  }
  case ArtefactDomain::Banding: {
    BandingParams c;
    c.sigma_noise = draw(rng, p.banding.noise.sigma_noise);
    c.sigma_blur = draw(rng, p.banding.noise.sigma_blur);
    c.axis = static_cast<int>(rng.below(3));
    c.width_fraction = draw(rng, p.banding.width_fraction);
    c.start_fraction = rng.uniform();
    return c;
  }
  case ArtefactDomain::Motion: {
    MotionParams c;
    c.n_transforms = p.motion.n_transforms;
    c.phase_encode_axis = p.motion.phase_encode_axis;
    for (int t = 0; t < c.n_transforms; ++t) {
      MotionStep s;
      s.theta_deg = draw(rng, p.motion.theta_deg);
      s.offset_mm = draw(rng, p.motion.offset_mm);
      s.direction_deg = rng.uniform(0.0, 360.0);
      c.steps.push_back(s);
    }
    c.sigma_blur = draw(rng, p.motion.sigma_blur);
    return c;
  }
  case ArtefactDomain::Contrast: {
    ContrastParams c;
    c.polynomial_order = p.contrast.polynomial_order;
    const auto n = bias_monomials(c.polynomial_order).size();
    for (std::size_t m = 0; m < n; ++m) {
      const double sign = rng.sign();
      c.coefficients.push_back(sign * draw(rng, p.contrast.bias_coeff));
    }
    const double sign = rng.sign();
    c.gamma = sign * draw(rng, p.contrast.gamma);
    c.sigma_blur = draw(rng, p.contrast.sigma_blur);
    return c;
  }
  case ArtefactDomain::Distortion: {
    DistortionParams c;
    c.n_control_points = p.distortion.n_control_points;
    c.max_displacement = p.distortion.max_displacement;
    c.sigma_noise = draw(rng, p.distortion.sigma_noise);
    c.sigma_blur = draw(rng, p.distortion.sigma_blur);
    return c;
  }
  }
  throw InvalidArgument("unknown artefact domain");
}

// ---------------------------------------------------------------------------
// Simulators

Volume simulate_noise(const Volume &volume, const NoiseParams &p, Rng &rng) {
  if (p.sigma_noise < 0)
    throw InvalidArgument("sigma_noise must be non-negative");
  Volume noisy(volume.grid(), add_noise(volume.values(), p.sigma_noise, rng));
  return finish(noisy, p.sigma_blur);
}

Volume simulate_zipper(const Volume &volume, const ZipperParams &p, Rng &rng) {
  const KSpace spiked = insert_spikes(fft3(volume), p.n_spikes, p.contrast, rng);
  return finish(ifft3(spiked), p.sigma_blur);
}

AffineTransform in_plane_transform(const Grid &grid, double dx, double dy,
                                   double theta_deg) {
  const Eigen::Matrix3d o = grid.orientation().block<3, 3>(0, 0);
  const Vec3 shift = o * Vec3(dx, dy, 0.0);
  const auto rot = AffineTransform::rotation(o.col(2), theta_deg, grid.world_center());
  return AffineTransform::translation(shift).compose(rot);
}

Volume simulate_positioning(const Volume &volume, const PositioningParams &p,
                            Rng &) {
  const auto t = in_plane_transform(volume.grid(), p.x_offset, p.y_offset, p.theta_deg);
  return finish(resample(volume, t, volume.grid(), Interp::Trilinear), p.sigma_blur);
}

Volume simulate_banding(const Volume &volume, const BandingParams &p, Rng &rng) {
  if (p.axis < 0 || p.axis > 2)
    throw InvalidArgument("banding axis must be 0, 1 or 2");
  const auto &g = volume.grid();
  const auto n = g.dims()[p.axis];
  const auto width = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::lround(p.width_fraction * static_cast<double>(n))), 1, n);
  const auto start = static_cast<std::int64_t>(
      std::lround(std::clamp(p.start_fraction, 0.0, 1.0) * static_cast<double>(n - width)));
  std::vector<double> out = volume.values();
  if (p.sigma_noise > 0.0) {
    for (std::int64_t k = 0; k < g.nz(); ++k)
      for (std::int64_t j = 0; j < g.ny(); ++j)
        for (std::int64_t i = 0; i < g.nx(); ++i) {
          const std::int64_t c = p.axis == 0 ? i : p.axis == 1 ? j : k;
          if (c < start || c >= start + width)
            continue;
          auto &v = out[g.linear(i, j, k)];
          v = std::clamp(v + p.sigma_noise * rng.normal(), 0.0, 1.0);
        }
  }
  return finish(Volume(g, std::move(out)), p.sigma_blur);
}

Volume simulate_motion(const Volume &volume, const MotionParams &p, Rng &) {
  if (static_cast<int>(p.steps.size()) != p.n_transforms)
    throw InvalidArgument("motion: step count does not match n_transforms");
  const auto &g = volume.grid();
  std::vector<Volume> segments{volume};
  const Vec3 sp = g.spacing();
  for (const auto &s : p.steps) {
    const double dir = s.direction_deg * 3.14159265358979323846 / 180.0;
    // mm -> voxels along i and j.
    const double dx = s.offset_mm * std::cos(dir) / sp.x();
    const double dy = s.offset_mm * std::sin(dir) / sp.y();
    const auto t = in_plane_transform(g, dx, dy, s.theta_deg);
    segments.push_back(resample(volume, t, g, Interp::Trilinear));
  }
  return finish(segmented_recombine(segments, p.phase_encode_axis), p.sigma_blur);
}

std::vector<Index3> bias_monomials(int order) {
  std::vector<Index3> terms;
  for (int d = 1; d <= order; ++d)
    for (int a = d; a >= 0; --a)
      for (int b = d - a; b >= 0; --b)
        terms.push_back({a, b, d - a - b});
  return terms;
}

Volume bias_field(const Grid &grid, int order, const std::vector<double> &coefficients) {
  const auto terms = bias_monomials(order);
  if (terms.size() != coefficients.size())
    throw InvalidArgument("bias field: coefficient count does not match order");
  auto norm = [](std::int64_t i, std::int64_t n) {
    return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
  };
  // Per-axis power tables.
  std::array<std::vector<std::vector<double>>, 3> powers;
  for (int a = 0; a < 3; ++a) {
    const auto n = grid.dims()[a];
    powers[a].assign(static_cast<std::size_t>(order + 1),
                     std::vector<double>(static_cast<std::size_t>(n), 1.0));
    for (int e = 1; e <= order; ++e)
      for (std::int64_t i = 0; i < n; ++i)
        powers[a][e][i] = powers[a][e - 1][i] * norm(i, n);
  }
  std::vector<double> field(grid.size());
  std::size_t n = 0;
  for (std::int64_t k = 0; k < grid.nz(); ++k)
    for (std::int64_t j = 0; j < grid.ny(); ++j)
      for (std::int64_t i = 0; i < grid.nx(); ++i, ++n) {
        double poly = 0.0;
        for (std::size_t m = 0; m < terms.size(); ++m)
          poly += coefficients[m] * powers[0][terms[m][0]][i] *
                  powers[1][terms[m][1]][j] * powers[2][terms[m][2]][k];
        field[n] = std::exp(poly);
      }
  return {grid, std::move(field)};
}

Volume simulate_contrast(const Volume &volume, const ContrastParams &p, Rng &) {
  if (p.gamma <= -1.0)
    throw InvalidArgument("contrast: gamma offset must exceed -1");
  const Volume bias = bias_field(volume.grid(), p.polynomial_order, p.coefficients);
  std::vector<double> out = volume.values();
  const double exponent = 1.0 + p.gamma;
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = std::pow(std::max(out[n], 0.0) * bias[n], exponent);
  Volume corrupted(volume.grid(), std::move(out));
  if (corrupted.max() > corrupted.min())
    corrupted = normalize_intensity(corrupted);
  return finish(corrupted, p.sigma_blur);
}

double DisplacementField::max_norm() const {
  double m = 0.0;
  for (const auto &v : vectors)
    m = std::max(m, v.norm());
  return m;
}

double DisplacementField::max_component() const {
  double m = 0.0;
  for (const auto &v : vectors)
    m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

DisplacementField bspline_displacement_field(const Index3 &dims, int n_cp,
                                             double max_displacement, Rng &rng) {
  if (n_cp < 2)
    throw InvalidArgument("distortion: at least 2 control points per axis");
  if (!(max_displacement >= 0.0))
    throw InvalidArgument("distortion: max displacement must be non-negative");
  const auto ncp = static_cast<std::size_t>(n_cp);
  std::vector<Vec3> control(ncp * ncp * ncp);
  for (auto &c : control)
    for (int a = 0; a < 3; ++a)
      c[a] = rng.uniform(-max_displacement, max_displacement);

  const AxisTaps tx = axis_taps(dims[0], n_cp), ty = axis_taps(dims[1], n_cp),
                 tz = axis_taps(dims[2], n_cp);
  DisplacementField field{dims, std::vector<Vec3>(
                                    static_cast<std::size_t>(dims[0] * dims[1] * dims[2]))};
  std::size_t n = 0;
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i, ++n) {
        Vec3 acc = Vec3::Zero();
        const auto &ix = tx.index[i], &iy = ty.index[j], &iz = tz.index[k];
        const auto &wx = tx.weight[i], &wy = ty.weight[j], &wz = tz.weight[k];
        for (int c = 0; c < 4; ++c)
          for (int b = 0; b < 4; ++b) {
            const double wzy = wz[c] * wy[b];
            const std::size_t row =
                (static_cast<std::size_t>(iz[c]) * ncp + static_cast<std::size_t>(iy[b])) * ncp;
            for (int a = 0; a < 4; ++a)
              acc += (wzy * wx[a]) * control[row + static_cast<std::size_t>(ix[a])];
          }
        field.vectors[n] = acc;
      }
  return field;
}

Volume warp(const Volume &volume, const DisplacementField &field) {
  const auto &g = volume.grid();
  if (field.dims != g.dims())
    throw InvalidArgument("warp: field dims do not match volume");
  std::vector<double> out(g.size());
  std::size_t n = 0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i, ++n) {
        const Vec3 p = Vec3(static_cast<double>(i), static_cast<double>(j),
                            static_cast<double>(k)) + field.vectors[n];
        out[n] = sample_trilinear(volume, p);
      }
  return {g, std::move(out)};
}

Volume simulate_distortion(const Volume &volume, const DistortionParams &p,
                           Rng &rng) {
  const auto field = bspline_displacement_field(
      volume.grid().dims(), p.n_control_points, p.max_displacement, rng);
  const Volume warped = warp(volume, field);
  Volume noisy(volume.grid(), add_noise(warped.values(), p.sigma_noise, rng));
  return finish(noisy, p.sigma_blur);
}

Volume simulate(const Volume &volume, const ConcreteParams &params, Rng &rng) {
  return std::visit(
      [&](const auto &p) -> Volume {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NoiseParams>)
          return simulate_noise(volume, p, rng);
        else if constexpr (std::is_same_v<T, ZipperParams>)
          return simulate_zipper(volume, p, rng);
        else if constexpr (std::is_same_v<T, PositioningParams>)
          return simulate_positioning(volume, p, rng);
        else if constexpr (std::is_same_v<T, BandingParams>)
          return simulate_banding(volume, p, rng);
        else if constexpr (std::is_same_v<T, MotionParams>)
          return simulate_motion(volume, p, rng);
        else if constexpr (std::is_same_v<T, ContrastParams>)
          return simulate_contrast(volume, p, rng);
        else
          return simulate_distortion(volume, p, rng);
      },
      params);
}

std::pair<Volume, ConcreteParams> apply_artefact(const Volume &volume,
                                                 ArtefactDomain domain,
                                                 Severity severity,
                                                 const SimParams &sim_params,
                                                 Rng &rng) {
  if (severity == Severity::Class0)
    throw InvalidArgument("clean class has no parameters");
  const Volume normalized = normalize_intensity(volume);
  ConcreteParams params = sample_params(domain, severity, sim_params, rng);
  Volume corrupted = simulate(normalized, params, rng);
  return {std::move(corrupted), std::move(params)};
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ConcreteParams &params) {
  nlohmann::json j;
  std::visit([&](const auto &p) { j = p; }, params);
  j["domain"] = std::string(to_string(domain_of(params)));
  return j;
}

nlohmann::json to_json(const SimParams &params) { return nlohmann::json(params); }

SimParams sim_params_from_json(const nlohmann::json &patch, const SimParams &base) {
  nlohmann::json merged = to_json(base);
  merged.merge_patch(patch);
  SimParams out;
  try {
    out = merged.get<SimParams>();
  } catch (const nlohmann::json::exception &e) {
    throw InvalidArgument(std::string("invalid simulation parameters: ") + e.what());
  }
  out.validate();
  return out;
}

} // namespace lfqa
