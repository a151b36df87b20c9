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

#include <complex>
#include <vector>

#include "lfqa/rng.hpp"
#include "lfqa/volume.hpp"

namespace lfqa {

using Complex = std::complex<double>;

/**
 * Spectrum of a volume. Bin (u, v, w) is stored at the same linear index as
 * voxel (u, v, w) of the grid, so DC sits at index 0. Signed frequencies are
 * obtained with centered(): bins above n/2 wrap to negative values.
 */
class KSpace {
public:
  KSpace(Grid grid, std::vector<Complex> coeffs);

  const Grid &grid() const { return grid_; }
  const std::vector<Complex> &coeffs() const { return coeffs_; }
  std::vector<Complex> &coeffs() { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }

  Complex at(std::int64_t u, std::int64_t v, std::int64_t w) const {
    return coeffs_[grid_.linear(u, v, w)];
  }

  /// Signed frequency of storage index `u` along an axis of length n.
  static std::int64_t centered(std::int64_t u, std::int64_t n) {
    return u <= n / 2 ? u : u - n;
  }
  /// Storage index of signed frequency `f`.
  static std::int64_t wrapped(std::int64_t f, std::int64_t n) {
    return ((f % n) + n) % n;
  }
  /// Storage index of the conjugate-symmetric partner of `n`.
  std::size_t mirror(std::size_t n) const;

private:
  Grid grid_;
  std::vector<Complex> coeffs_;
};

/// Unnormalised forward DFT. Requires at least 2 voxels per axis.
KSpace fft3(const Volume &volume);
/// Inverse DFT scaled by 1/N; returns the real part.
Volume ifft3(const KSpace &kspace);
/// Inverse DFT scaled by 1/N, complex result.
std::vector<Complex> ifft3_complex(const KSpace &kspace);

/// Inclusive bounds of the spike annulus, as fractions of Nyquist.
inline constexpr double kSpikeAnnulusMin = 0.10;
inline constexpr double kSpikeAnnulusMax = 0.45;

/// Normalised radius of a bin: sqrt(sum (f_a / (n_a/2))^2).
double nyquist_radius(const Grid &grid, std::size_t bin);

/**
 * Adds `n_spikes` herringbone spikes. Each spike picks a bin uniformly from
 * the annulus [kSpikeAnnulusMin, kSpikeAnnulusMax] of Nyquist (DC and
 * self-conjugate bins excluded, no bin or mirror picked twice), and raises its
 * magnitude by contrast * max|coeff| keeping its phase (a random phase is used
 * when the bin is empty). The mirror bin receives the conjugate value so the
 * image stays real.
 */
KSpace insert_spikes(const KSpace &kspace, int n_spikes, double contrast,
                     Rng &rng);

/**
 * Segmented acquisition along `axis`. Storage index u is acquired as line
 * L = (u + floor(n/2)) mod n, i.e. lines run from the most negative frequency
 * to the most positive. The m = volumes.size() volumes own contiguous slabs:
 * line L comes from fft3(volumes[floor(L * m / n)]). The real part of the
 * inverse transform is returned. All volumes must share one grid.
 */
Volume segmented_recombine(const std::vector<Volume> &volumes, int axis);

/// Index of the slab that owns the DC line for m slabs over n lines.
int dc_slab(std::int64_t n, int m);

} // namespace lfqa
