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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lfqa/artefact_sim.hpp"
#include "lfqa/error.hpp"
#include "lfqa/kspace.hpp"
#include "lfqa/phantom.hpp"

using namespace lfqa;

namespace {

const Volume &phantom32() {
  static const Volume v = normalize_intensity(make_phantom({32, 32, 32}).image);
  return v;
}

double rms_diff(const Volume &a, const Volume &b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    s += (a[n] - b[n]) * (a[n] - b[n]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double max_diff(const Volume &a, const Volume &b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

bool in_unit_range(const Volume &v) { return v.min() >= 0.0 && v.max() <= 1.0; }

} // namespace

TEST_CASE("defaults hold the documented class ranges") {
  const auto p = SimParams::defaults();
  CHECK_NOTHROW(p.validate());
  const auto &c1 = p.class1;
  const auto &c2 = p.class2;

  CHECK(c1.noise.sigma_noise == Range{0, 0.1});
  CHECK(c2.noise.sigma_noise == Range{0, 0.2});
  for (const auto *c : {&c1, &c2}) {
    CHECK(c->noise.sigma_blur == Range{0, 0.6});
    CHECK(c->zipper.sigma_blur == Range{0, 0.6});
    CHECK(c->positioning.sigma_blur == Range{0, 0.6});
    CHECK(c->motion.sigma_blur == Range{0, 0.6});
    CHECK(c->contrast.sigma_blur == Range{0, 0.6});
    CHECK(c->distortion.sigma_blur == Range{0, 0.6});
    CHECK(c->zipper.n_spikes == 1);
    CHECK(c->banding.noise.sigma_noise == c->noise.sigma_noise);
    CHECK(c->distortion.sigma_noise == c->noise.sigma_noise);
    CHECK(c->distortion.interpolation == FieldInterpolation::BSpline);
    CHECK(c->motion.phase_encode_axis == 1);
  }
  CHECK(c1.zipper.contrast == Range{0.1, 0.3});
  CHECK(c2.zipper.contrast == Range{0.3, 0.6});
  CHECK(c1.positioning.x_offset == Range{-10, 10});
  CHECK(c1.positioning.y_offset == Range{-10, 10});
  CHECK(c1.positioning.theta_deg == Range{0, 10});
  CHECK(c2.positioning.x_offset == Range{-20, 20});
  CHECK(c2.positioning.y_offset == Range{-20, 20});
  CHECK(c2.positioning.theta_deg == Range{10, 30});
  CHECK(c1.motion.theta_deg == Range{-10, 10});
  CHECK(c1.motion.offset_mm == Range{0, 3});
  CHECK(c1.motion.n_transforms == 2);
  CHECK(c2.motion.theta_deg == Range{-20, 20});
  CHECK(c2.motion.offset_mm == Range{0, 7});
  CHECK(c2.motion.n_transforms == 4);
  CHECK(c1.contrast.bias_coeff == Range{0, 0.3});
  CHECK(c1.contrast.polynomial_order == 3);
  CHECK(c1.contrast.gamma == Range{0, 0.3});
  CHECK(c2.contrast.bias_coeff == Range{0, 0.6});
  CHECK(c2.contrast.polynomial_order == 5);
  CHECK(c2.contrast.gamma == Range{0.3, 0.6});
  CHECK(c1.distortion.n_control_points == 7);
  CHECK(c1.distortion.max_displacement == 9.0);
  CHECK(c2.distortion.n_control_points == 12);
  CHECK(c2.distortion.max_displacement == 12.0);

  CHECK_THROWS_AS(p.at(Severity::Class0), InvalidArgument);
}

TEST_CASE("validate rejects inverted ranges and bad counts") {
  auto p = SimParams::defaults();
  p.class1.noise.sigma_noise = {0.2, 0.1};
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = SimParams::defaults();
  p.class2.motion.n_transforms = -1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = SimParams::defaults();
  p.class2.zipper.n_spikes = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("sample_params") {
  const auto sp = SimParams::defaults();
  SUBCASE("clean class") {
    Rng rng(1);
    CHECK_THROWS_WITH_AS(sample_params(ArtefactDomain::Noise, Severity::Class0, sp, rng),
                         "clean class has no parameters", InvalidArgument);
  }
  SUBCASE("collapsed range") {
    auto p = sp;
    p.class1.noise.sigma_noise = {0.1, 0.1};
    Rng rng(2);
    const auto c = std::get<NoiseParams>(sample_params(ArtefactDomain::Noise, Severity::Class1, p, rng));
    CHECK(c.sigma_noise == 0.1);
  }
  SUBCASE("uniform statistics") {
    Rng rng(3);
    double lo = 1e9, hi = -1e9, sum = 0.0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
      const auto c =
          std::get<NoiseParams>(sample_params(ArtefactDomain::Noise, Severity::Class2, sp, rng));
      lo = std::min(lo, c.sigma_noise);
      hi = std::max(hi, c.sigma_noise);
      sum += c.sigma_noise;
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 0.2);
    CHECK(std::abs(sum / n - 0.1) < 0.01);
  }
  SUBCASE("every draw stays inside its class range") {
    auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
    for (int cls : {1, 2}) {
      const bool c1 = cls == 1;
      const auto sev = severity_from_int(cls);
      Rng rng(100 + static_cast<std::uint64_t>(cls));
      bool ok = true;
      for (int s = 0; s < 1000; ++s) {
        const auto noise = std::get<NoiseParams>(sample_params(ArtefactDomain::Noise, sev, sp, rng));
        ok &= in(noise.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(noise.sigma_blur, 0, 0.6);

        const auto zip = std::get<ZipperParams>(sample_params(ArtefactDomain::Zipper, sev, sp, rng));
        ok &= zip.n_spikes == 1 && in(zip.contrast, c1 ? 0.1 : 0.3, c1 ? 0.3 : 0.6) &&
              in(zip.sigma_blur, 0, 0.6);

        const auto pos =
            std::get<PositioningParams>(sample_params(ArtefactDomain::Positioning, sev, sp, rng));
        const double off = c1 ? 10 : 20;
        ok &= in(pos.x_offset, -off, off) && in(pos.y_offset, -off, off) &&
              in(pos.theta_deg, c1 ? 0 : 10, c1 ? 10 : 30) && in(pos.sigma_blur, 0, 0.6);

        const auto band = std::get<BandingParams>(sample_params(ArtefactDomain::Banding, sev, sp, rng));
        ok &= in(band.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(band.sigma_blur, 0, 0.6) &&
              in(band.width_fraction, 0.1, 0.3) && band.axis >= 0 && band.axis <= 2 &&
              in(band.start_fraction, 0, 1);

        const auto mot = std::get<MotionParams>(sample_params(ArtefactDomain::Motion, sev, sp, rng));
        ok &= mot.n_transforms == (c1 ? 2 : 4) && mot.steps.size() == (c1 ? 2u : 4u) &&
              mot.phase_encode_axis == 1 && in(mot.sigma_blur, 0, 0.6);
        for (const auto &st : mot.steps)
          ok &= in(st.theta_deg, c1 ? -10 : -20, c1 ? 10 : 20) &&
                in(st.offset_mm, 0, c1 ? 3 : 7);

        const auto con = std::get<ContrastParams>(sample_params(ArtefactDomain::Contrast, sev, sp, rng));
        ok &= con.polynomial_order == (c1 ? 3 : 5) &&
              con.coefficients.size() == (c1 ? 19u : 55u) &&
              in(std::abs(con.gamma), c1 ? 0 : 0.3, c1 ? 0.3 : 0.6) && in(con.sigma_blur, 0, 0.6);
        for (double c : con.coefficients)
          ok &= in(std::abs(c), 0, c1 ? 0.3 : 0.6);

        const auto dis =
            std::get<DistortionParams>(sample_params(ArtefactDomain::Distortion, sev, sp, rng));
        ok &= dis.n_control_points == (c1 ? 7 : 12) && dis.max_displacement == (c1 ? 9 : 12) &&
              in(dis.sigma_noise, 0, c1 ? 0.1 : 0.2) && in(dis.sigma_blur, 0, 0.6);
      }
      CHECK(ok);
    }
  }
  SUBCASE("signs of contrast draws vary") {
    Rng rng(4);
    int neg = 0;
    for (int s = 0; s < 200; ++s)
      neg += std::get<ContrastParams>(
                 sample_params(ArtefactDomain::Contrast, Severity::Class2, sp, rng))
                 .gamma < 0;
    CHECK(neg > 50);
    CHECK(neg < 150);
  }
}

TEST_CASE("zero-parameter limits are the identity") {
  const Volume &v = phantom32();
  Rng rng(5);
  CHECK(simulate_noise(v, {0.0, 0.0}, rng).values() == v.values());
  CHECK(max_diff(simulate_zipper(v, {1, 1e-12, 0.0}, rng), v) < 1e-6);
  CHECK(max_diff(simulate_positioning(v, {}, rng), v) < 1e-9);
  CHECK(simulate_banding(v, {0.0, 0.0, 1, 0.2, 0.5}, rng).values() == v.values());
  MotionParams still;
  still.n_transforms = 4;
  still.steps.assign(4, MotionStep{});
  CHECK(max_diff(simulate_motion(v, still, rng), v) < 1e-6);
  ContrastParams flat;
  flat.coefficients.assign(19, 0.0);
  CHECK(max_diff(simulate_contrast(v, flat, rng), v) < 1e-9);
  DistortionParams rigid;
  rigid.max_displacement = 0.0;
  CHECK(max_diff(simulate_distortion(v, rigid, rng), v) < 1e-9);
}

TEST_CASE("noise statistics") {
  const Grid g({64, 64, 64});
  const Volume c(g, std::vector<double>(g.size(), 0.5));
  Rng rng(6);
  const Volume out = simulate_noise(c, {0.1, 0.0}, rng);
  double m = out.mean(), s = 0.0;
  for (double x : out.data())
    s += (x - m) * (x - m);
  const double sd = std::sqrt(s / static_cast<double>(out.size() - 1));
  CHECK(sd >= 0.09);
  CHECK(sd <= 0.11);
  CHECK(std::abs(m - 0.5) < 0.002);
  CHECK(in_unit_range(simulate_noise(c, {0.9, 0.3}, rng)));
}

TEST_CASE("zipper autocorrelation is periodic at the spike frequency") {
  const Grid g({16, 16, 16});
  const Volume c(g, std::vector<double>(g.size(), 0.5));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const Volume out = simulate_zipper(c, {1, 0.3, 0.0}, rng);
    // Locate the spike independently from the output spectrum.
    const auto k = fft3(out);
    std::size_t bin = 1;
    for (std::size_t n = 1; n < k.size(); ++n)
      if (std::abs(k.coeffs()[n]) > std::abs(k.coeffs()[bin]))
        bin = n;
    const std::int64_t f[3] = {KSpace::centered(static_cast<std::int64_t>(bin) % 16, 16),
                               KSpace::centered(static_cast<std::int64_t>(bin) / 16 % 16, 16),
                               KSpace::centered(static_cast<std::int64_t>(bin) / 256, 16)};
    const double m = out.mean();
    auto autocorr = [&](int dx, int dy, int dz) {
      double s = 0.0;
      for (std::int64_t z = 0; z < 16; ++z)
        for (std::int64_t y = 0; y < 16; ++y)
          for (std::int64_t x = 0; x < 16; ++x)
            s += (out.at(x, y, z) - m) *
                 (out.at((x + dx) % 16, (y + dy) % 16, (z + dz) % 16) - m);
      return s / 4096.0;
    };
    const double r0 = autocorr(0, 0, 0);
    CHECK(r0 > 0.0);
    for (int d = 0; d < 16; ++d) {
      const double expect =
          r0 * std::cos(2.0 * std::numbers::pi * (f[0] * d + f[1] * d + f[2] * d) / 16.0);
      CHECK(autocorr(d, d, d) == doctest::Approx(expect).epsilon(1e-6).scale(r0));
    }
    // Amplitude of the stripe is contrast * 0.5 (DC) on each side.
    CHECK(r0 == doctest::Approx(0.3 * 0.3 * 0.5 * 0.5 * 2.0).epsilon(1e-6));
  }
}

TEST_CASE("positioning matches a pure-translation oracle") {
  const Grid g({32, 16, 8});
  std::vector<double> d(g.size());
  for (std::int64_t k = 0; k < 8; ++k)
    for (std::int64_t j = 0; j < 16; ++j)
      for (std::int64_t i = 0; i < 32; ++i)
        d[g.linear(i, j, k)] = i / 31.0;
  const Volume ramp(g, d);
  Rng rng(7);
  const Volume out = simulate_positioning(ramp, {10.0, 0.0, 0.0, 0.0}, rng);
  for (std::int64_t k = 0; k < 8; ++k)
    for (std::int64_t j = 0; j < 16; ++j)
      for (std::int64_t i = 0; i < 32; ++i)
        CHECK(out.at(i, j, k) == doctest::Approx(i >= 10 ? (i - 10) / 31.0 : 0.0).epsilon(1e-9));

  // Rotation keeps the in-plane centre and the k axis.
  const auto t = in_plane_transform(g, 0.0, 0.0, 90.0);
  CHECK(t.apply(g.world_center()).isApprox(g.world_center()));
  CHECK(t.apply(g.world_center() + Vec3(1, 0, 0)).isApprox(g.world_center() + Vec3(0, 1, 0)));
  CHECK(t.apply(g.world_center() + Vec3(0, 0, 1)).isApprox(g.world_center() + Vec3(0, 0, 1)));
}

TEST_CASE("banding touches only the band") {
  const Volume &v = phantom32();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng draw(seed);
    auto p = std::get<BandingParams>(
        sample_params(ArtefactDomain::Banding, Severity::Class2, SimParams::defaults(), draw));
    p.sigma_blur = 0.0;
    p.sigma_noise = 0.15;
    Rng rng(seed);
    const Volume out = simulate_banding(v, p, rng);
    const std::int64_t n = 32;
    const auto width = std::max<std::int64_t>(1, std::lround(p.width_fraction * n));
    const auto start = std::lround(p.start_fraction * static_cast<double>(n - width));
    std::int64_t changed_lo = n, changed_hi = -1;
    for (std::int64_t k = 0; k < n; ++k)
      for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) {
          const std::int64_t c = p.axis == 0 ? i : p.axis == 1 ? j : k;
          if (out.at(i, j, k) != v.at(i, j, k)) {
            changed_lo = std::min(changed_lo, c);
            changed_hi = std::max(changed_hi, c);
          }
        }
    CHECK(changed_lo == start);
    CHECK(changed_hi == start + width - 1);
    CHECK(width >= 3);
    CHECK(width <= 10);
    CHECK(in_unit_range(out));
  }
}

TEST_CASE("motion") {
  const Volume &v = phantom32();
  Rng rng(8);
  MotionParams p;
  p.n_transforms = 2;
  p.steps = {{0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}};
  const Volume out = simulate_motion(v, p, rng);
  CHECK(rms_diff(out, v) > 1e-3);
  CHECK(in_unit_range(out));
  p.steps.pop_back();
  CHECK_THROWS_AS(simulate_motion(v, p, rng), InvalidArgument);
}

TEST_CASE("contrast") {
  SUBCASE("gamma on a hand value") {
    const Grid g({3, 1, 1});
    const Volume v(g, {0.0, 0.25, 1.0});
    ContrastParams p;
    p.coefficients.assign(19, 0.0);
    p.gamma = 0.3;
    Rng rng(9);
    const Volume out = simulate_contrast(v, p, rng);
    CHECK(out[1] == doctest::Approx(0.1649).epsilon(1e-3));
    CHECK(out[1] == doctest::Approx(std::exp(1.3 * std::log(0.25))).epsilon(1e-12));
  }
  SUBCASE("monomial counts") {
    CHECK(bias_monomials(3).size() == 19);
    CHECK(bias_monomials(5).size() == 55);
    for (const auto &m : bias_monomials(5)) {
      const auto deg = m[0] + m[1] + m[2];
      CHECK(deg >= 1);
      CHECK(deg <= 5);
    }
  }
  SUBCASE("bias field of a single linear term") {
    const Grid g({5, 3, 2});
    std::vector<double> c(3, 0.0);
    const auto terms = bias_monomials(1);
    for (std::size_t m = 0; m < terms.size(); ++m)
      if (terms[m] == Index3{1, 0, 0})
        c[m] = 0.5;
    const Volume b = bias_field(g, 1, c);
    CHECK(b.at(0, 1, 1) == doctest::Approx(std::exp(-0.5)));
    CHECK(b.at(2, 0, 0) == doctest::Approx(1.0));
    CHECK(b.at(4, 2, 0) == doctest::Approx(std::exp(0.5)));
    CHECK_THROWS_AS(bias_field(g, 2, c), InvalidArgument);
  }
  SUBCASE("output range") {
    Rng rng(10);
    for (int s = 0; s < 5; ++s) {
      auto [out, params] = apply_artefact(phantom32(), ArtefactDomain::Contrast, Severity::Class2,
                                          SimParams::defaults(), rng);
      CHECK(in_unit_range(out));
    }
  }
}

TEST_CASE("distortion field bound") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    for (auto [ncp, dmax] : {std::pair{7, 9.0}, std::pair{12, 12.0}}) {
      const auto f = bspline_displacement_field({24, 20, 16}, ncp, dmax, rng);
      CHECK(f.vectors.size() == 24u * 20u * 16u);
      CHECK(f.max_component() <= dmax * kBSplineOvershootBound);
      CHECK(f.max_component() > 0.0);
      CHECK(f.max_norm() <= std::sqrt(3.0) * dmax * kBSplineOvershootBound);
    }
  }
  Rng rng(1);
  CHECK_THROWS_AS(bspline_displacement_field({8, 8, 8}, 1, 1.0, rng), InvalidArgument);

  // A constant field is a pure shift.
  const Grid g({8, 8, 8});
  std::vector<double> d(g.size());
  for (std::size_t n = 0; n < d.size(); ++n)
    d[n] = static_cast<double>(n % 8);
  const Volume ramp(g, d);
  DisplacementField shift{g.dims(), std::vector<Vec3>(g.size(), Vec3(1.0, 0.0, 0.0))};
  const Volume w = warp(ramp, shift);
  CHECK(w.at(3, 2, 2) == doctest::Approx(4.0));
  CHECK(w.at(7, 2, 2) == 0.0);
}

TEST_CASE("apply_artefact") {
  const auto sp = SimParams::defaults();
  for (auto domain : kAllDomains)
    for (int cls : {1, 2}) {
      Rng a(42), b(42);
      auto [va, pa] = apply_artefact(phantom32(), domain, severity_from_int(cls), sp, a);
      auto [vb, pb] = apply_artefact(phantom32(), domain, severity_from_int(cls), sp, b);
      CHECK(domain_of(pa) == domain);
      CHECK(va.values() == vb.values());
      CHECK(to_json(pa) == to_json(pb));
      CHECK(in_unit_range(va));
      CHECK(va.grid().same_geometry(phantom32().grid()));
      CHECK(to_json(pa)["domain"] == std::string(to_string(domain)));
    }
  Rng rng(1);
  CHECK_THROWS_AS(apply_artefact(phantom32(), ArtefactDomain::Noise, Severity::Class0, sp, rng),
                  InvalidArgument);
}

TEST_CASE("simulation parameter JSON") {
  const auto sp = SimParams::defaults();
  const auto j = to_json(sp);
  CHECK(j["class2"]["motion"]["n_transforms"] == 4);
  CHECK(j["class1"]["distortion"]["interpolation"] == "bspline");
  const auto back = sim_params_from_json(j);
  CHECK(to_json(back) == j);

  const auto patched = sim_params_from_json(
      nlohmann::json::parse(R"({"class1": {"noise": {"sigma_noise": [0.05, 0.07]}}})"));
  CHECK(patched.class1.noise.sigma_noise == Range{0.05, 0.07});
  CHECK(patched.class2.noise.sigma_noise == Range{0, 0.2});
  CHECK_THROWS_AS(sim_params_from_json(nlohmann::json::parse(
                      R"({"class1": {"noise": {"sigma_noise": [0.3, 0.1]}}})")),
                  InvalidArgument);
  CHECK_THROWS_AS(sim_params_from_json(nlohmann::json::parse(
                      R"({"class1": {"noise": {"sigma_noise": 3}}})")),
                  InvalidArgument);
}
