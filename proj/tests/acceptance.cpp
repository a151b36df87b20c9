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
// Acceptance runner: one PASS/FAIL line per criterion with its wall time and
// runtime limit. Exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "lfqa/artefact_sim.hpp"
#include "lfqa/losses.hpp"
#include "lfqa/metrics.hpp"
#include "lfqa/nifti_io.hpp"
#include "lfqa/phantom.hpp"
#include "lfqa/qa_pipeline.hpp"
#include "lfqa/registration.hpp"
#include "lfqa/rng.hpp"
#include "oracles.hpp"

using namespace lfqa;
namespace fs = std::filesystem;

namespace {

// Outcome of one criterion: pass flag plus a short human-readable detail.
struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  std::optional<double> limit_s;
  std::function<Outcome()> run;
};

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

double max_diff(const Volume &a, const Volume &b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

std::string fmt(const char *pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

const Phantom &phantom64() {
  static const Phantom p = make_phantom({64, 64, 64});
  return p;
}

// ---------------------------------------------------------------------------

Outcome micro_identity() {
  Rng rng(11);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    ConfusionMatrix cm(3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        cm.at(a, b) = static_cast<std::int64_t>(rng.below(50));
    if (cm.total() == 0)
      cm.at(0, 0) = 1;
    const double acc = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
    const auto f1 = fbeta_report(cm, 1.0), f2 = fbeta_report(cm, 2.0);
    for (double v : {f1.precision.micro, f1.recall.micro, f1.fbeta.micro, f2.fbeta.micro,
                     f1.accuracy.micro})
      worst = std::max(worst, std::abs(v - acc));
  }
  return {worst <= 1e-12, fmt("max |micro - accuracy| = %.2e", worst)};
}

Outcome metric_oracle() {
  std::size_t pairs = 0, mismatches = 0;
  for (unsigned x = 1; x < 512; ++x) {
    const auto a = oracle::mask9(x);
    for (unsigned y = 1; y < 512; ++y) {
      const auto b = oracle::mask9(y);
      const auto ref = oracle::surface_distances(a, b, Vec3::Ones());
      ++pairs;
      mismatches += dice(a, b) != oracle::dice(a, b) || hd(a, b) != ref.back() ||
                    assd(a, b) != oracle::mean(ref) || hd95(a, b) != oracle::percentile95(ref);
    }
  }
  return {pairs == 261121 && mismatches == 0,
          fmt("%zu pairs, %zu mismatches", pairs, mismatches)};
}

Outcome losses() {
  bool ok = true;
  const std::vector<double> half{0.5};
  const double f = focal_loss(half);
  ok &= std::abs(f - 0.043322) <= 1e-6;

  Rng rng(3);
  double ce_gap = 0.0, fd_worst = 0.0;
  bool lambda0 = true, kl_ok = true;
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
  };
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> p(1 + rng.below(8));
    for (auto &x : p)
      x = rng.uniform(1e-6, 1.0);
    ce_gap = std::max(ce_gap, std::abs(focal_loss(p, {1.0, 0.0}) - cross_entropy(p)));

    std::vector<double> q(6), y(6);
    for (std::size_t i = 0; i < q.size(); ++i) {
      q[i] = rng.uniform(0.05, 0.95);
      y[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    const double u = rng.uniform(), v = rng.uniform();
    const Ratio a{1.0 - u, u}, b{1.0 - v, v};
    lambda0 &= prior_total_loss(q, y, {0.0, a}) == dice_loss(q, y);
    kl_ok &= kl_ratio(a, a) == 0.0 && kl_ratio(a, b) >= 0.0;

    if (t % 10 == 0) {
      const FocalParams fp;
      const auto gf = focal_loss_grad(q, fp);
      const auto nf = finite_diff_grad([&](std::span<const double> x) { return focal_loss(x, fp); }, q);
      const auto gd = dice_loss_grad(q, y);
      const auto nd = finite_diff_grad([&](std::span<const double> x) { return dice_loss(x, y); }, q);
      const PriorParams pp{5.0, {0.7, 0.3}};
      const auto gp = prior_total_loss_grad(q, y, pp);
      const auto np = finite_diff_grad(
          [&](std::span<const double> x) { return prior_total_loss(x, y, pp); }, q);
      for (std::size_t i = 0; i < q.size(); ++i)
        fd_worst = std::max({fd_worst, rel(gf[i], nf[i]), rel(gd[i], nd[i]), rel(gp[i], np[i])});
    }
  }
  // KL gradient against central differences over the two free coordinates.
  for (int t = 0; t < 100; ++t) {
    const double u = rng.uniform(0.05, 0.95), v = rng.uniform(0.05, 0.95);
    const Ratio tau{1.0 - u, u}, hat{1.0 - v, v};
    const auto g = kl_ratio_grad(tau, hat);
    const std::vector<double> x{hat[0], hat[1]};
    const auto n = finite_diff_grad(
        [&](std::span<const double> h) {
          return tau[0] * std::log(tau[0] / h[0]) + tau[1] * std::log(tau[1] / h[1]);
        },
        x);
    fd_worst = std::max({fd_worst, rel(g[0], n[0]), rel(g[1], n[1])});
  }
  ok &= ce_gap <= 1e-12 && lambda0 && kl_ok && fd_worst <= 1e-5;
  return {ok, fmt("focal(0.5)=%.7f, |focal-CE|<=%.1e, lambda0 %s, KL %s, FD rel err %.1e", f,
                  ce_gap, lambda0 ? "bitwise" : "DIFFERS", kl_ok ? "ok" : "BAD", fd_worst)};
}

// Every field of a draw lies inside the class range of the default table.
bool in_table_range(const ConcreteParams &params, int cls) {
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  const bool c1 = cls == 1;
  return std::visit(
      [&](const auto &p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NoiseParams>) {
          return in(p.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(p.sigma_blur, 0, 0.6);
        } else if constexpr (std::is_same_v<T, ZipperParams>) {
          return p.n_spikes == 1 && in(p.contrast, c1 ? 0.1 : 0.3, c1 ? 0.3 : 0.6) &&
                 in(p.sigma_blur, 0, 0.6);
        } else if constexpr (std::is_same_v<T, PositioningParams>) {
          const double off = c1 ? 10 : 20;
          return in(p.x_offset, -off, off) && in(p.y_offset, -off, off) &&
                 in(p.theta_deg, c1 ? 0 : 10, c1 ? 10 : 30) && in(p.sigma_blur, 0, 0.6);
        } else if constexpr (std::is_same_v<T, BandingParams>) {
          return in(p.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(p.sigma_blur, 0, 0.6) &&
                 in(p.width_fraction, 0.1, 0.3) && p.axis >= 0 && p.axis <= 2 &&
                 in(p.start_fraction, 0, 1);
        } else if constexpr (std::is_same_v<T, MotionParams>) {
          bool ok = p.n_transforms == (c1 ? 2 : 4) && p.steps.size() == (c1 ? 2u : 4u) &&
                    in(p.sigma_blur, 0, 0.6);
          for (const auto &s : p.steps)
            ok &= in(s.theta_deg, c1 ? -10 : -20, c1 ? 10 : 20) && in(s.offset_mm, 0, c1 ? 3 : 7);
          return ok;
        } else if constexpr (std::is_same_v<T, ContrastParams>) {
          bool ok = p.polynomial_order == (c1 ? 3 : 5) &&
                    in(std::abs(p.gamma), c1 ? 0 : 0.3, c1 ? 0.3 : 0.6) && in(p.sigma_blur, 0, 0.6);
          for (double c : p.coefficients)
            ok &= in(std::abs(c), 0, c1 ? 0.3 : 0.6);
          return ok;
        } else {
          return p.n_control_points == (c1 ? 7 : 12) && p.max_displacement == (c1 ? 9 : 12) &&
                 in(p.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(p.sigma_blur, 0, 0.6);
        }
      },
      params);
}

Outcome simulator_limits() {
  const Volume v = normalize_intensity(phantom64().image);
  Rng rng(5);
  MotionParams still;
  still.n_transforms = 4;
  still.steps.assign(4, MotionStep{});
  ContrastParams flat;
  flat.coefficients.assign(19, 0.0);
  DistortionParams rigid;
  rigid.max_displacement = 0.0;
  // The zipper contrast must be positive; its limit is approached at 1e-12.
  const double identity = std::max({
      max_diff(simulate_noise(v, {0.0, 0.0}, rng), v),
      max_diff(simulate_zipper(v, {1, 1e-12, 0.0}, rng), v),
      max_diff(simulate_positioning(v, {}, rng), v),
      max_diff(simulate_banding(v, {0.0, 0.0, 1, 0.2, 0.5}, rng), v),
      max_diff(simulate_motion(v, still, rng), v),
      max_diff(simulate_contrast(v, flat, rng), v),
      max_diff(simulate_distortion(v, rigid, rng), v),
  });

  const auto sp = SimParams::defaults();
  std::size_t draws = 0, outside = 0;
  for (auto d : kAllDomains)
    for (int cls : {1, 2}) {
      Rng r(100 * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(cls));
      for (int s = 0; s < 1000; ++s, ++draws)
        outside += !in_table_range(sample_params(d, severity_from_int(cls), sp, r), cls);
    }

  bool reproducible = true;
  for (auto d : kAllDomains)
    for (int cls : {1, 2}) {
      Rng a(42), b(42);
      const auto va = apply_artefact(v, d, severity_from_int(cls), sp, a).first;
      const auto vb = apply_artefact(v, d, severity_from_int(cls), sp, b).first;
      reproducible &= va.values() == vb.values();
    }
  return {identity <= 1e-6 && outside == 0 && reproducible,
          fmt("identity max diff %.1e, %zu/%zu draws outside range, seeded repeat %s", identity,
              outside, draws, reproducible ? "bit-identical" : "DIFFERS")};
}

struct Residual {
  double translation = 0.0;
  double rotation_deg = 0.0;
};

// How far recovered * hidden is from the identity, measured at the grid centre.
Residual residual(const AffineTransform &recovered, const AffineTransform &hidden, const Grid &g) {
  const Mat4 e = recovered.matrix() * hidden.matrix();
  const Vec3 c = g.world_center();
  const Eigen::Matrix3d r = e.block<3, 3>(0, 0);
  return {((e * c.homogeneous()).head<3>() - c).norm(),
          std::acos(std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0)) * 180.0 / std::numbers::pi};
}

Outcome registration_recovery() {
  const Volume &img = phantom64().image;
  const Grid &g = img.grid();
  RegistrationConfig cfg;
  cfg.dof = Dof::Rigid;

  const auto self = residual(register_affine(img, img, cfg).transform, AffineTransform(), g);
  const bool self_ok = self.translation <= 0.1 && self.rotation_deg <= 0.1;

  int recovered = 0;
  Residual worst;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng(2000 + trial);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const Vec3 t = dir.normalized() * rng.uniform(0.0, 5.0);
    const double angle = rng.uniform(-10.0, 10.0);
    const auto hidden = AffineTransform::translation(t).compose(
        AffineTransform::rotation(axis.normalized(), angle, g.world_center()));
    const Volume moving = resample(img, hidden, g, Interp::Trilinear);
    const auto r = residual(register_affine(moving, img, cfg).transform, hidden, g);
    recovered += r.translation <= 0.5 && r.rotation_deg <= 1.0;
    worst.translation = std::max(worst.translation, r.translation);
    worst.rotation_deg = std::max(worst.rotation_deg, r.rotation_deg);
  }
  return {self_ok && recovered >= 19,
          fmt("%d/20 recovered (worst %.3f vox, %.3f deg); self %.1e vox, %.1e deg", recovered,
              worst.translation, worst.rotation_deg, self.translation, self.rotation_deg)};
}

Outcome atlas_pipeline() {
  const Phantom &p = phantom64();
  const Grid &g = p.image.grid();
  const Atlas single = build_atlas({{"0001", p.image, p.hippocampus}}, 0);
  const double single_diff = max_diff(single.probability, p.hippocampus.indicator());

  const Atlas t(Volume(Grid({3, 1, 1}), {0.05, 0.1, 0.5}), 3);
  const auto m = threshold_atlas(t, t.threshold);
  const bool thr_ok = t.threshold == 0.1 && m[0] == 0 && m[1] == 1 && m[2] == 1;

  // Split the label at the middle slice into two disjoint subject masks.
  std::vector<std::uint16_t> lo(g.size(), 0), hi(g.size(), 0);
  const auto dims = g.dims();
  for (std::size_t n = 0; n < g.size(); ++n)
    if (p.hippocampus[n] != 0)
      (static_cast<std::int64_t>(n) % dims[0] < dims[0] / 2 ? lo : hi)[n] = 1;
  const Atlas pair = build_atlas(
      {{"0001", p.image, LabelMask(g, lo)}, {"0002", p.image, LabelMask(g, hi)}}, 0);
  double union_diff = 0.0, outside = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (lo[n] || hi[n])
      union_diff = std::max(union_diff, std::abs(pair.probability[n] - 0.5));
    else
      outside = std::max(outside, std::abs(pair.probability[n]));
  return {single_diff <= 1e-6 && thr_ok && union_diff <= 1e-6 && outside <= 1e-6,
          fmt("single-subject diff %.1e, threshold {0.05,0.1,0.5}->{%d,%d,%d}, "
              "disjoint pair |p-0.5| %.1e on union, %.1e off union",
              single_diff, m[0], m[1], m[2], union_diff, outside)};
}

Outcome qa_end_to_end() {
  std::vector<Volume> train_clean, test_clean;
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng a(100 + s), b(900 + s);
    train_clean.push_back(make_phantom({64, 64, 64}, Vec3::Ones(), &a).image);
    test_clean.push_back(make_phantom({64, 64, 64}, Vec3::Ones(), &b).image);
  }
  const auto sp = SimParams::defaults();
  std::vector<int> truth, pred;
  std::ostringstream per_domain;
  for (auto d : kAllDomains) {
    const auto train = generate_feature_set(train_clean, d, {10, 10, 10}, sp, 1, jobs());
    const auto test = generate_feature_set(test_clean, d, {166, 167, 167}, sp, 2, jobs());
    const auto model = train_domain(d, train, TrainingLoss::Focal);
    std::vector<int> t, p;
    for (const auto &e : test) {
      t.push_back(to_int(e.y));
      p.push_back(to_int(model.predict(e.x)));
    }
    per_domain << ' ' << to_string(d) << '='
               << fmt("%.3f", fbeta_report(confusion(t, p, 3), 1.0).accuracy.weighted);
    truth.insert(truth.end(), t.begin(), t.end());
    pred.insert(pred.end(), p.begin(), p.end());
  }
  const double acc = fbeta_report(confusion(truth, pred, 3), 1.0).accuracy.weighted;
  return {acc >= 0.70, fmt("pooled weighted accuracy %.3f over %zu held-out volumes;", acc,
                           truth.size()) + per_domain.str()};
}

Outcome t_test() {
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2, 1, 4, 3, 6, 5};
  const auto sym = paired_t_test(x, y);
  const double p = student_t_two_sided_p(2.262, 9);

  // Synthetic left/right volume lists with a consistent asymmetry.
  Rng rng(8);
  std::vector<double> left, right;
  for (int i = 0; i < 10; ++i) {
    const double base = rng.uniform(3000, 4000);
    left.push_back(base);
    right.push_back(base * (1.0 + rng.uniform(0.02, 0.06)));
  }
  const auto asym = paired_t_test(right, left);
  const bool ok = sym.t == 0.0 && sym.p == 1.0 && std::abs(p - 0.050) <= 0.002 && asym.dof == 9 &&
                  asym.p < 0.05;
  return {ok, fmt("symmetric t=%g p=%g; p(2.262, dof 9)=%.4f; synthetic volumes t=%.2f p=%.2e",
                  sym.t, sym.p, p, asym.t, asym.p)};
}

Outcome nifti_round_trip() {
  const fs::path dir = fs::temp_directory_path() / "lfqa_acceptance_nifti";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng rng(9);
  int ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index3 dims{1 + static_cast<std::int64_t>(rng.below(16)),
                      1 + static_cast<std::int64_t>(rng.below(16)),
                      1 + static_cast<std::int64_t>(rng.below(16))};
    const Vec3 spacing(rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0));
    const Vec3 origin(rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100));
    const double scale = std::pow(10.0, rng.uniform(-3.0, 4.0));
    const Grid grid(dims, spacing, origin);
    std::vector<double> data(grid.size());
    for (auto &x : data)
      x = scale * rng.normal();
    const Volume v(grid, std::move(data));
    const fs::path path = dir / (t % 2 ? "v.nii.gz" : "v.nii");
    write_volume(v, path);
    const Volume r = read_volume(path);
    bool same = r.grid().dims() == dims;
    for (std::size_t n = 0; same && n < v.size(); ++n) {
      // float32 storage: the read value is the nearest float to the original.
      same &= r[n] == static_cast<double>(static_cast<float>(v[n]));
      if (v[n] != 0.0)
        worst = std::max(worst, std::abs(r[n] - v[n]) / std::abs(v[n]));
    }
    ok += same;
  }
  fs::remove_all(dir);
  return {ok == 100, fmt("%d/100 volumes exact to float32; max relative error %.1e", ok, worst)};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "micro-metric identity", 1.0, micro_identity},
      {2, "metric oracle equivalence", 60.0, metric_oracle},
      {3, "loss correctness", std::nullopt, losses},
      {4, "simulator identity limits", 120.0, simulator_limits},
      {5, "registration recovery", 300.0, registration_recovery},
      {6, "atlas pipeline", std::nullopt, atlas_pipeline},
      {7, "end-to-end QA", 600.0, qa_end_to_end},
      {8, "paired t-test", std::nullopt, t_test},
      {9, "NIfTI round trip", std::nullopt, nifti_round_trip},
  };
  int failures = 0;
  for (const auto &c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception &e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = !c.limit_s || secs < *c.limit_s;
    const bool pass = out.pass && in_time;
    failures += !pass;
    const std::string limit = c.limit_s ? fmt("limit %g s", *c.limit_s) : std::string("no limit");
    std::printf("%s %d %s: %s [%.2f s, %s]%s\n", pass ? "PASS" : "FAIL", c.number, c.name.c_str(),
                out.detail.c_str(), secs, limit.c_str(), in_time ? "" : " (over time)");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
