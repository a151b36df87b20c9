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

#include "lfqa/kspace.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <set>

#include <fftw3.h>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void *p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

void check_dims(const Grid &g) {
  for (auto d : g.dims())
    if (d < 2)
      throw InvalidArgument("FFT requires at least 2 voxels per axis");
}

// In-place transform of a buffer laid out x-fastest.
void transform(const Grid &g, fftw_complex *buf, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_3d(static_cast<int>(g.nz()), static_cast<int>(g.ny()),
                            static_cast<int>(g.nx()), buf, buf, sign,
                            FFTW_ESTIMATE);
  }
  if (plan == nullptr)
    throw NumericalError("FFT planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

FftwBuffer allocate(std::size_t n) {
  FftwBuffer buf(fftw_alloc_complex(n));
  if (!buf)
    throw std::bad_alloc();
  return buf;
}

} // namespace

KSpace::KSpace(Grid grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_.size())
    throw InvalidArgument("k-space length does not match grid");
}

std::size_t KSpace::mirror(std::size_t n) const {
  const auto nx = grid_.nx(), ny = grid_.ny(), nz = grid_.nz();
  const auto i = static_cast<std::int64_t>(n) % nx;
  const auto j = (static_cast<std::int64_t>(n) / nx) % ny;
  const auto k = static_cast<std::int64_t>(n) / (nx * ny);
  return grid_.linear((nx - i) % nx, (ny - j) % ny, (nz - k) % nz);
}

KSpace fft3(const Volume &volume) {
  const auto &g = volume.grid();
  check_dims(g);
  auto buf = allocate(g.size());
  const auto data = volume.data();
  for (std::size_t n = 0; n < g.size(); ++n) {
    buf[n][0] = data[n];
    buf[n][1] = 0.0;
  }
  transform(g, buf.get(), FFTW_FORWARD);
  std::vector<Complex> coeffs(g.size());
  for (std::size_t n = 0; n < g.size(); ++n)
    coeffs[n] = {buf[n][0], buf[n][1]};
  return {g, std::move(coeffs)};
}

std::vector<Complex> ifft3_complex(const KSpace &kspace) {
  const auto &g = kspace.grid();
  check_dims(g);
  auto buf = allocate(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) {
    buf[n][0] = kspace.coeffs()[n].real();
    buf[n][1] = kspace.coeffs()[n].imag();
  }
  transform(g, buf.get(), FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(g.size());
  std::vector<Complex> out(g.size());
  for (std::size_t n = 0; n < g.size(); ++n)
    out[n] = {buf[n][0] * scale, buf[n][1] * scale};
  return out;
}

Volume ifft3(const KSpace &kspace) {
  const auto c = ifft3_complex(kspace);
  std::vector<double> re(c.size());
  std::transform(c.begin(), c.end(), re.begin(),
                 [](const Complex &z) { return z.real(); });
  return {kspace.grid(), std::move(re)};
}

double nyquist_radius(const Grid &g, std::size_t bin) {
  const auto nx = g.nx(), ny = g.ny();
  const auto n = static_cast<std::int64_t>(bin);
  const std::int64_t idx[3] = {n % nx, (n / nx) % ny, n / (nx * ny)};
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double f = static_cast<double>(KSpace::centered(idx[a], g.dims()[a]));
    const double nyq = static_cast<double>(g.dims()[a]) / 2.0;
    r2 += (f / nyq) * (f / nyq);
  }
  return std::sqrt(r2);
}

KSpace insert_spikes(const KSpace &kspace, int n_spikes, double contrast,
                     Rng &rng) {
  if (n_spikes < 1)
    throw InvalidArgument("insert_spikes: n_spikes must be >= 1");
  if (!(contrast > 0.0) || contrast > 1.0)
    throw InvalidArgument("insert_spikes: contrast must be in (0, 1]");

  std::vector<std::size_t> candidates;
  for (std::size_t n = 1; n < kspace.size(); ++n) {
    const double r = nyquist_radius(kspace.grid(), n);
    if (r >= kSpikeAnnulusMin && r <= kSpikeAnnulusMax && kspace.mirror(n) != n)
      candidates.push_back(n);
  }
  if (candidates.size() < 2 * static_cast<std::size_t>(n_spikes))
    throw InvalidArgument("insert_spikes: grid too small for the spike annulus");

  double peak = 0.0;
  for (const auto &c : kspace.coeffs())
    peak = std::max(peak, std::abs(c));
  const double boost = contrast * peak;

  KSpace out = kspace;
  std::set<std::size_t> used;
  for (int s = 0; s < n_spikes;) {
    const std::size_t bin = candidates[rng.below(candidates.size())];
    const std::size_t mir = kspace.mirror(bin);
    if (used.count(bin) || used.count(mir))
      continue;
    used.insert(bin);
    used.insert(mir);
    const Complex c = kspace.coeffs()[bin];
    const double mag = std::abs(c);
    const double phase = mag > 0.0 ? std::arg(c) : kTwoPi * rng.uniform();
    const Complex spiked = std::polar(mag + boost, phase);
    out.coeffs()[bin] = spiked;
    out.coeffs()[mir] = std::conj(spiked);
    ++s;
  }
  return out;
}

int dc_slab(std::int64_t n, int m) {
  return static_cast<int>((n / 2) * m / n);
}

Volume segmented_recombine(const std::vector<Volume> &volumes, int axis) {
  if (volumes.empty())
    throw InvalidArgument("segmented_recombine: no volumes");
  if (axis < 0 || axis > 2)
    throw InvalidArgument("segmented_recombine: axis must be 0, 1 or 2");
  const Grid &g = volumes.front().grid();
  for (const auto &v : volumes)
    if (!v.grid().same_geometry(g))
      throw InvalidArgument("segmented_recombine: grid mismatch");
  if (volumes.size() == 1)
    return volumes.front();

  const auto m = static_cast<std::int64_t>(volumes.size());
  const auto n = g.dims()[axis];
  std::vector<KSpace> spectra;
  spectra.reserve(volumes.size());
  for (const auto &v : volumes)
    spectra.push_back(fft3(v));

  std::vector<Complex> merged(g.size());
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const std::int64_t u = axis == 0 ? i : axis == 1 ? j : k;
        const std::int64_t line = (u + n / 2) % n;
        const auto owner = static_cast<std::size_t>(line * m / n);
        const auto idx = g.linear(i, j, k);
        merged[idx] = spectra[owner].coeffs()[idx];
      }
  return ifft3(KSpace(g, std::move(merged)));
}

} // namespace lfqa
