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

#include "lfqa/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

struct Ellipsoid {
  Vec3 center;    // normalised coordinates, [-1, 1]
  Vec3 semi_axes; // normalised
  double value;
  bool hippocampus = false;
};

bool inside(const Ellipsoid &e, const Vec3 &u) {
  return ((u - e.center).array() / e.semi_axes.array()).square().sum() <= 1.0;
}

} // namespace

Phantom make_phantom(const Index3 &dims, const Vec3 &spacing, Rng *variation) {
  for (auto d : dims)
    if (d < 4)
      throw InvalidArgument("phantom needs at least 4 voxels per axis");
  auto jitter = [&](double x, double rel) {
    return variation ? x * (1.0 + variation->uniform(-rel, rel)) : x;
  };
  auto shift = [&](double x, double abs) {
    return variation ? x + variation->uniform(-abs, abs) : x;
  };

  const Vec3 c0(shift(0.0, 0.03), shift(0.0, 0.03), shift(0.0, 0.03));
  // Painted in order; later shapes overwrite earlier ones.
  std::vector<Ellipsoid> shapes = {
      {c0, Vec3(jitter(0.84, 0.03), jitter(0.92, 0.03), jitter(0.80, 0.03)),
       jitter(0.30, 0.1)},
      {c0, Vec3(jitter(0.74, 0.03), jitter(0.82, 0.03), jitter(0.70, 0.03)),
       jitter(0.55, 0.05)},
      {c0 + Vec3(-0.12, -0.05, 0.12), Vec3(0.08, 0.28, 0.12), jitter(0.95, 0.03)},
      {c0 + Vec3(0.12, -0.05, 0.12), Vec3(0.08, 0.28, 0.12), jitter(0.95, 0.03)},
      {c0 + Vec3(shift(0.30, 0.02), shift(0.35, 0.02), -0.20),
       Vec3(0.12, 0.10, 0.10), jitter(0.85, 0.05)},
      {c0 + Vec3(shift(-0.34, 0.02), shift(-0.05, 0.02), shift(-0.22, 0.02)),
       Vec3(jitter(0.08, 0.05), jitter(0.22, 0.05), jitter(0.09, 0.05)),
       jitter(0.75, 0.03), true},
      {c0 + Vec3(shift(0.34, 0.02), shift(-0.05, 0.02), shift(-0.22, 0.02)),
       Vec3(jitter(0.08, 0.05), jitter(0.22, 0.05), jitter(0.09, 0.05)),
       jitter(0.75, 0.03), true},
  };
  // Small grey-matter nodules; an irregular layout pins down rotations.
  const double nodules[][4] = {{-0.45, 0.45, 0.30, 0.40}, {0.05, 0.55, -0.35, 0.80},
                               {0.50, -0.40, 0.25, 0.35}, {-0.20, -0.55, 0.40, 0.85},
                               {0.25, 0.15, 0.45, 0.40}, {-0.50, -0.30, -0.40, 0.80}};
  for (const auto &q : nodules)
    shapes.insert(shapes.end() - 2,
                  {c0 + Vec3(shift(q[0], 0.02), shift(q[1], 0.02), shift(q[2], 0.02)),
                   Vec3::Constant(jitter(0.09, 0.1)), jitter(q[3], 0.05)});

  const Grid grid(dims, spacing);
  std::vector<double> img(grid.size(), 0.0);
  std::vector<std::uint16_t> lab(grid.size(), 0);
  const Vec3 half(static_cast<double>(dims[0]) / 2.0, static_cast<double>(dims[1]) / 2.0,
                  static_cast<double>(dims[2]) / 2.0);
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i) {
        const Vec3 u = (Vec3(static_cast<double>(i), static_cast<double>(j),
                             static_cast<double>(k)) + Vec3::Constant(0.5) - half)
                           .array() / half.array();
        const auto n = grid.linear(i, j, k);
        for (const auto &e : shapes)
          if (inside(e, u)) {
            img[n] = e.value;
            lab[n] = e.hippocampus ? 1 : 0;
          }
        // Gentle in-brain texture so the intensity field is not piecewise flat.
        if (img[n] > 0.0)
          img[n] += 0.06 * std::sin(5.1 * u[0] + 1.3) * std::cos(4.3 * u[1] - 0.4) *
                    std::cos(3.7 * u[2] + 0.2);
      }
  Volume smooth = clamp(gaussian_blur(Volume(grid, std::move(img)), 0.7), 0.0, 1.0);
  return {std::move(smooth), LabelMask(grid, std::move(lab))};
}

} // namespace lfqa
