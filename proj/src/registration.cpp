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

#include "lfqa/registration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lfqa/error.hpp"
#include "lfqa/nifti_io.hpp"

namespace lfqa {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
// Fewer overlapping voxels than this fraction of the fixed grid is a failure.
constexpr double kMinOverlap = 0.25;
constexpr double kNoOverlapCost = 1e30;
constexpr double kSmoothing = 1.0;

constexpr int kNumParams = 12;
using Params = std::array<double, kNumParams>;

Params identity_params() {
  Params p{};
  p[6] = p[7] = p[8] = 1.0;
  return p;
}

int active_params(Dof dof) { return static_cast<int>(dof); }

Mat4 translate(const Vec3 &t) {
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 3) = t;
  return m;
}

AffineTransform params_to_transform(const Params &p, const Vec3 &center, Dof dof) {
  Mat4 r = Mat4::Identity();
  r.block<3, 3>(0, 0) =
      (Eigen::AngleAxisd(p[5] * kDegToRad, Vec3::UnitZ()) *
       Eigen::AngleAxisd(p[4] * kDegToRad, Vec3::UnitY()) *
       Eigen::AngleAxisd(p[3] * kDegToRad, Vec3::UnitX()))
          .toRotationMatrix();
  Mat4 s = Mat4::Identity();
  s(0, 0) = p[6];
  s(1, 1) = p[7];
  s(2, 2) = p[8];
  Mat4 h = Mat4::Identity();
  h(0, 1) = p[9];
  h(0, 2) = p[10];
  h(1, 2) = p[11];
  const Mat4 m = translate(Vec3(p[0], p[1], p[2])) * translate(center) * r * s *
                 h * translate(-center);
  return {m, dof};
}

struct Stats {
  double sum_f = 0, sum_m = 0, sum_ff = 0, sum_mm = 0, sum_fm = 0, sum_d2 = 0;
  std::size_t n = 0;
};

// Trilinear sample; false when outside the field.
inline bool sample_inside(const Volume &v, const Vec3 &p, double &out) {
  const auto &d = v.grid().dims();
  for (int a = 0; a < 3; ++a)
    if (p[a] < -1e-6 || p[a] > static_cast<double>(d[a] - 1) + 1e-6)
      return false;
  out = sample_trilinear(v, p);
  return true;
}

Stats overlap_stats(const Volume &moving, const Volume &fixed,
                    const AffineTransform &transform) {
  const Mat4 map = moving.grid().inverse_orientation() *
                   transform.inverse().matrix() * fixed.grid().orientation();
  const Eigen::Matrix3d a = map.block<3, 3>(0, 0);
  const Vec3 b = map.block<3, 1>(0, 3);
  const auto &g = fixed.grid();
  Stats s;
  std::size_t n = 0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j) {
      const Vec3 row = a.col(1) * static_cast<double>(j) +
                       a.col(2) * static_cast<double>(k) + b;
      for (std::int64_t i = 0; i < g.nx(); ++i, ++n) {
        double m = 0.0;
        if (!sample_inside(moving, a.col(0) * static_cast<double>(i) + row, m))
          continue;
        const double f = fixed[n];
        s.sum_f += f;
        s.sum_m += m;
        s.sum_ff += f * f;
        s.sum_mm += m * m;
        s.sum_fm += f * m;
        s.sum_d2 += (f - m) * (f - m);
        ++s.n;
      }
    }
  return s;
}

// Cost to minimise: -NCC or mean SSD.
double cost(const Volume &moving, const Volume &fixed,
            const AffineTransform &transform, Similarity sim) {
  const Stats s = overlap_stats(moving, fixed, transform);
  if (static_cast<double>(s.n) < kMinOverlap * static_cast<double>(fixed.size()))
    return kNoOverlapCost;
  const double n = static_cast<double>(s.n);
  if (sim == Similarity::SumOfSquaredDifferences)
    return s.sum_d2 / n;
  const double cov = s.sum_fm - s.sum_f * s.sum_m / n;
  const double vf = s.sum_ff - s.sum_f * s.sum_f / n;
  const double vm = s.sum_mm - s.sum_m * s.sum_m / n;
  if (vf <= 0 || vm <= 0)
    return kNoOverlapCost;
  return -cov / std::sqrt(vf * vm);
}

double to_similarity(double c, Similarity sim) {
  return sim == Similarity::NormalizedCrossCorrelation ? -c : c;
}

std::array<double, kNumParams> initial_steps(const RegistrationConfig &c, int factor) {
  std::array<double, kNumParams> s{};
  for (int q = 0; q < 3; ++q) {
    s[q] = c.translation_step_mm * factor;
    s[3 + q] = c.rotation_step_deg * factor;
    s[6 + q] = c.scale_step * factor;
    s[9 + q] = c.shear_step * factor;
  }
  return s;
}

void check_non_constant(const Volume &v, const char *which) {
  if (!(v.max() > v.min()))
    throw InvalidArgument(std::string("registration: ") + which +
                          " image is constant");
}

} // namespace

void RegistrationConfig::validate() const {
  if (pyramid_factors.empty() || pyramid_factors.back() != 1)
    throw InvalidArgument("pyramid factors must end at 1");
  for (std::size_t l = 1; l < pyramid_factors.size(); ++l)
    if (pyramid_factors[l] >= pyramid_factors[l - 1])
      throw InvalidArgument("pyramid factors must be strictly decreasing");
  if (max_iterations < 1)
    throw InvalidArgument("max_iterations must be positive");
  if (!(parameter_tolerance > 0) || !(translation_step_mm > 0) ||
      !(rotation_step_deg > 0) || !(scale_step > 0) || !(shear_step > 0))
    throw InvalidArgument("tolerance and step sizes must be positive");
}

double similarity(const Volume &moving, const Volume &fixed,
                  const AffineTransform &transform, Similarity sim) {
  return to_similarity(cost(moving, fixed, transform, sim), sim);
}

RegistrationResult register_affine(const Volume &moving, const Volume &fixed,
                                   const RegistrationConfig &config) {
  config.validate();
  check_non_constant(moving, "moving");
  check_non_constant(fixed, "fixed");

  const Vec3 center = fixed.grid().world_center();
  const int n_active = active_params(config.dof);
  Params params = identity_params();
  RegistrationResult result;

  std::int64_t min_dim = std::numeric_limits<std::int64_t>::max();
  for (const auto *v : {&moving, &fixed})
    for (auto d : v->grid().dims())
      if (d > 1)
        min_dim = std::min(min_dim, d);

  for (int factor : config.pyramid_factors) {
    if (factor > 1 && min_dim / factor < 4)
      continue;
    // Pre-smoothing damps the interpolation artefacts of the cost function.
    const Volume fixed_l = gaussian_blur(downsample(fixed, factor), kSmoothing);
    const Volume moving_l = gaussian_blur(downsample(moving, factor), kSmoothing);
    auto eval = [&](const Params &p) {
      return cost(moving_l, fixed_l, params_to_transform(p, center, config.dof),
                  config.similarity);
    };

    LevelTrace trace{factor, {}};
    auto steps = initial_steps(config, factor);
    const auto step0 = steps;
    double current = eval(params);
    trace.costs.push_back(current);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
      bool improved = false;
      for (int q = 0; q < n_active; ++q) {
        for (double dir : {+1.0, -1.0}) {
          Params probe = params;
          probe[q] += dir * steps[q];
          double c = eval(probe);
          if (!(c < current))
            continue;
          // Keep walking while it pays off.
          do {
            params = probe;
            current = c;
            probe[q] += dir * steps[q];
            c = eval(probe);
          } while (c < current);
          improved = true;
          break;
        }
      }
      if (!std::isfinite(current))
        throw NumericalError("registration diverged");
      trace.costs.push_back(current);
      if (!improved) {
        bool converged = true;
        for (int q = 0; q < n_active; ++q) {
          steps[q] *= 0.5;
          if (steps[q] > config.parameter_tolerance * step0[q])
            converged = false;
        }
        if (converged)
          break;
      }
    }
    result.trace.push_back(std::move(trace));
  }

  result.transform = params_to_transform(params, center, config.dof);
  const double final_cost = cost(moving, fixed, result.transform, config.similarity);
  const double identity_cost =
      cost(moving, fixed, AffineTransform::identity(), config.similarity);
  if (!std::isfinite(final_cost) || final_cost >= kNoOverlapCost ||
      final_cost > identity_cost + 1e-12)
    throw NumericalError("registration diverged");
  result.final_similarity = to_similarity(final_cost, config.similarity);
  return result;
}

// ---------------------------------------------------------------------------
// Labels and atlas

LabelMask propagate_label(const LabelMask &mask, const AffineTransform &transform,
                          const Grid &target_grid, LabelPropagation mode) {
  if (mode.mode == LabelPropagation::Mode::Nearest)
    return resample(mask, transform, target_grid);
  if (!mask.is_binary())
    throw InvalidArgument("linear label propagation requires a binary mask");
  const Volume soft =
      resample(mask.indicator(), transform, target_grid, Interp::Trilinear);
  std::vector<std::uint16_t> out(soft.size());
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = soft[n] >= mode.threshold ? 1 : 0;
  return {target_grid, std::move(out)};
}

Atlas::Atlas(Volume prob, std::size_t contributors, double t)
    : probability(std::move(prob)), n_contributors(contributors), threshold(t) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw InvalidArgument("atlas threshold must lie in (0, 1)");
  if (probability.min() < 0.0 || probability.max() > 1.0)
    throw InvalidArgument("atlas probabilities must lie in [0, 1]");
}

Atlas build_atlas(const std::vector<Subject> &subjects, std::size_t reference_index,
                  const RegistrationConfig &config, int jobs) {
  if (subjects.empty())
    throw InvalidArgument("build_atlas: no subjects");
  if (reference_index >= subjects.size())
    throw InvalidArgument("build_atlas: reference index out of range");
  config.validate();
  const Subject &ref = subjects[reference_index];
  const Grid &grid = ref.image.grid();

  std::vector<std::optional<Volume>> mapped(subjects.size());
  std::vector<std::exception_ptr> errors(subjects.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t s = next++; s < subjects.size(); s = next++) {
      try {
        const Subject &sub = subjects[s];
        if (!sub.mask.grid().same_geometry(sub.image.grid()))
          throw InvalidArgument("mask and image grids differ");
        if (s == reference_index) {
          mapped[s] = sub.mask.indicator();
          continue;
        }
        const auto reg = register_affine(sub.image, ref.image, config);
        mapped[s] = resample(sub.mask.indicator(), reg.transform, grid,
                             Interp::Trilinear);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(subjects.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();

  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (!errors[s])
      continue;
    try {
      std::rethrow_exception(errors[s]);
    } catch (const NumericalError &e) {
      throw NumericalError("subject " + subjects[s].id + ": " + e.what());
    } catch (const std::exception &e) {
      throw InvalidArgument("subject " + subjects[s].id + ": " + e.what());
    }
  }

  std::vector<double> sum(grid.size(), 0.0);
  for (const auto &m : mapped)
    for (std::size_t n = 0; n < sum.size(); ++n)
      sum[n] += (*m)[n];
  const double inv = 1.0 / static_cast<double>(subjects.size());
  for (auto &v : sum)
    v = std::clamp(v * inv, 0.0, 1.0);
  return Atlas(Volume(grid, std::move(sum)), subjects.size());
}

LabelMask threshold_atlas(const Atlas &atlas, double t) {
  const auto p = atlas.probability.data();
  std::vector<std::uint16_t> out(p.size());
  for (std::size_t n = 0; n < p.size(); ++n)
    out[n] = p[n] >= t ? 1 : 0;
  return {atlas.probability.grid(), std::move(out)};
}

LabelMask segment_by_atlas(const Volume &target, const Atlas &atlas,
                           const Volume &atlas_space_volume,
                           const RegistrationConfig &config) {
  if (!atlas_space_volume.grid().same_geometry(atlas.probability.grid()))
    throw InvalidArgument("atlas-space image and atlas grids differ");
  const auto reg = register_affine(atlas_space_volume, target, config);
  const Volume prob = resample(atlas.probability, reg.transform, target.grid(),
                               Interp::Trilinear);
  return threshold_atlas(Atlas(clamp(prob, 0.0, 1.0), atlas.n_contributors,
                               atlas.threshold),
                         atlas.threshold);
}

TissueRatio compute_tissue_ratio(const LabelMask &mask, const Index3 &center,
                                 const Index3 &roi_dims) {
  const LabelMask roi = crop_roi(mask, center, roi_dims);
  TissueRatio r;
  r.foreground = static_cast<double>(roi.count()) / static_cast<double>(roi.size());
  r.background = 1.0 - r.foreground;
  return r;
}

TissueRatio compute_tissue_ratio(const LabelMask &mask, const Index3 &roi_dims) {
  const auto &d = mask.grid().dims();
  return compute_tissue_ratio(mask, {d[0] / 2, d[1] / 2, d[2] / 2}, roi_dims);
}

// ---------------------------------------------------------------------------
// Persistence

void write_transform(const AffineTransform &transform,
                     const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "# lfqa affine transform (world mm, row-major)\n";
  out << "dof " << static_cast<int>(transform.dof()) << '\n';
  out << std::setprecision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c)
      out << (c ? " " : "") << transform.matrix()(r, c);
    out << '\n';
  }
  if (!out)
    throw IoError("cannot write " + path.string());
}

AffineTransform read_transform(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("file not found: " + path.string());
  std::string line;
  int dof = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::istringstream ss(line);
    if (dof == 0) {
      std::string key;
      if (!(ss >> key >> dof) || key != "dof" || (dof != 6 && dof != 9 && dof != 12))
        throw ParseError("transform file: expected 'dof <6|9|12>'");
      continue;
    }
    double v;
    int count = 0;
    while (ss >> v) {
      values.push_back(v);
      ++count;
    }
    if (count != 4 || !ss.eof())
      throw ParseError("transform file: each matrix row needs four numbers");
  }
  if (dof == 0 || values.size() != 16)
    throw ParseError("transform file: expected a dof line and a 4x4 matrix");
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      m(r, c) = values[static_cast<std::size_t>(4 * r + c)];
  return {m, static_cast<Dof>(dof)};
}

std::filesystem::path atlas_sidecar_path(const std::filesystem::path &path) {
  return path.parent_path() / (nifti_stem(path) + ".json");
}

void write_atlas(const Atlas &atlas, const std::filesystem::path &path,
                 const std::string &extra_json) {
  write_volume(atlas.probability, path);
  nlohmann::json j = nlohmann::json::parse(extra_json);
  j["threshold"] = atlas.threshold;
  j["n_contributors"] = atlas.n_contributors;
  std::ofstream out(atlas_sidecar_path(path));
  if (!out)
    throw IoError("cannot write " + atlas_sidecar_path(path).string());
  out << j.dump(2) << '\n';
}

Atlas read_atlas(const std::filesystem::path &path) {
  Volume prob = read_volume(path);
  const auto sidecar = atlas_sidecar_path(path);
  std::ifstream in(sidecar);
  if (!in)
    throw IoError("file not found: " + sidecar.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    return Atlas(clamp(prob, 0.0, 1.0), j.at("n_contributors").get<std::size_t>(),
                 j.at("threshold").get<double>());
  } catch (const nlohmann::json::exception &e) {
    throw ParseError("atlas sidecar " + sidecar.string() + ": " + e.what());
  }
}

} // namespace lfqa
