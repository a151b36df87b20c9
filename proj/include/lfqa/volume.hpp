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
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace lfqa {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = Eigen::Vector3d;
using Mat4 = Eigen::Matrix4d;

/**
 * Voxel grid geometry.
 *
 * Voxel (i, j, k) lives at world position orientation * (i, j, k, 1)^T. The
 * spacing is not stored independently: it is the column norms of the upper
 * 3x3 block of the orientation. Voxel data of every image type on this grid
 * is stored with x fastest: linear index = i + nx * (j + ny * k).
 */
class Grid {
public:
  /// Axis-aligned grid with the given spacing; voxel (0,0,0) at `origin`.
  Grid(Index3 dims, Vec3 spacing = Vec3::Ones(), Vec3 origin = Vec3::Zero());
  /// General grid. Throws InvalidArgument if dims are not positive, the last
  /// row is not (0,0,0,1) or the 3x3 block is singular.
  Grid(Index3 dims, const Mat4 &orientation);

  const Index3 &dims() const { return dims_; }
  std::int64_t nx() const { return dims_[0]; }
  std::int64_t ny() const { return dims_[1]; }
  std::int64_t nz() const { return dims_[2]; }
  std::size_t size() const {
    return static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
  }
  const Vec3 &spacing() const { return spacing_; }
  const Mat4 &orientation() const { return orientation_; }
  const Mat4 &inverse_orientation() const { return inverse_; }

  std::size_t linear(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k));
  }
  bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] &&
           k < dims_[2];
  }

  Vec3 voxel_to_world(const Vec3 &voxel) const;
  Vec3 world_to_voxel(const Vec3 &world) const;
  /// World position of the geometric centre, voxel ((n-1)/2, ...).
  Vec3 world_center() const;
  /// Product of the spacings, in mm^3.
  double voxel_volume() const { return spacing_.prod(); }

  /// Same dims and orientation within `tol` (absolute, per matrix entry).
  bool same_geometry(const Grid &other, double tol = 1e-6) const;

private:
  Index3 dims_;
  Mat4 orientation_;
  Mat4 inverse_;
  Vec3 spacing_;
};

/// Real-valued 3D image. All values are finite.
class Volume {
public:
  /// Zero-filled volume.
  explicit Volume(Grid grid);
  /// Throws InvalidArgument when the length does not match or a value is not
  /// finite.
  Volume(Grid grid, std::vector<double> data);

  const Grid &grid() const { return grid_; }
  std::span<const double> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t n) const { return data_[n]; }
  double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[grid_.linear(i, j, k)];
  }

  double min() const;
  double max() const;
  double sum() const;
  double mean() const { return sum() / static_cast<double>(data_.size()); }

  /// Copy of the voxel values, for building a modified volume.
  std::vector<double> values() const { return data_; }

private:
  Grid grid_;
  std::vector<double> data_;
};

/// Integer label image. Label 0 is background.
class LabelMask {
public:
  explicit LabelMask(Grid grid);
  LabelMask(Grid grid, std::vector<std::uint16_t> labels);

  const Grid &grid() const { return grid_; }
  std::span<const std::uint16_t> labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  std::uint16_t operator[](std::size_t n) const { return labels_[n]; }
  std::uint16_t at(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return labels_[grid_.linear(i, j, k)];
  }

  /// Number of non-zero voxels.
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool is_binary() const;
  /// 1 for every non-zero voxel.
  LabelMask binarized() const;
  /// Indicator image (1.0 inside, 0.0 outside).
  Volume indicator() const;

private:
  Grid grid_;
  std::vector<std::uint16_t> labels_;
};

enum class Dof { Rigid = 6, RigidScale = 9, Affine = 12 };

/**
 * Homogeneous world-space map. For Dof::Rigid the linear block must be a
 * proper rotation (orthogonal, det +1) within 1e-6.
 */
class AffineTransform {
public:
  AffineTransform() : matrix_(Mat4::Identity()), dof_(Dof::Rigid) {}
  AffineTransform(const Mat4 &matrix, Dof dof);

  static AffineTransform identity() { return {}; }
  static AffineTransform translation(const Vec3 &t);
  /// Rotation by `degrees` about `axis` through `center`.
  static AffineTransform rotation(const Vec3 &axis, double degrees,
                                  const Vec3 &center = Vec3::Zero());

  const Mat4 &matrix() const { return matrix_; }
  Dof dof() const { return dof_; }
  bool invertible() const;
  /// Throws NumericalError("non-invertible transform") when singular.
  AffineTransform inverse() const;
  Vec3 apply(const Vec3 &p) const;

  /// this o other (other applied first). The DOF is the larger of the two.
  AffineTransform compose(const AffineTransform &other) const;

private:
  Mat4 matrix_;
  Dof dof_;
};

enum class Interp { Nearest, Trilinear };

/**
 * Pulls `source` onto `target_grid` through `transform` (source world ->
 * target world). Each output voxel takes the interpolated source value at
 * transform^-1(world position). Points outside the source field are 0.
 */
Volume resample(const Volume &source, const AffineTransform &transform,
                const Grid &target_grid, Interp interp);
/// Label variant; always nearest-neighbour.
LabelMask resample(const LabelMask &source, const AffineTransform &transform,
                   const Grid &target_grid);

/// Trilinear sample at a continuous voxel coordinate, 0 outside the field.
double sample_trilinear(const Volume &volume, const Vec3 &voxel);

/**
 * Box of `size` voxels whose voxel (size/2) sits on `center`. Voxels outside
 * the source are zero. The output orientation keeps world positions.
 */
Volume crop_roi(const Volume &source, const Index3 &center, const Index3 &size);
LabelMask crop_roi(const LabelMask &source, const Index3 &center,
                   const Index3 &size);

/// Linear min->0, max->1. Throws InvalidArgument("degenerate intensity
/// range") for constant input.
Volume normalize_intensity(const Volume &source);

/// Separable Gaussian (truncated at 4 sigma) with half-sample reflective
/// boundary. sigma == 0 returns an exact copy.
Volume gaussian_blur(const Volume &source, double sigma_voxels);

/// Normalised 1D kernel used by gaussian_blur, radius ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma_voxels);

/// Half-sample symmetric boundary index: -1 -> 0, n -> n-1, ...
std::int64_t reflect_index(std::int64_t i, std::int64_t n);

/// Block-average downsampling by an integer factor; world positions of the
/// block centres are preserved.
Volume downsample(const Volume &source, int factor);

/// Elementwise clamp.
Volume clamp(const Volume &source, double lo, double hi);

} // namespace lfqa
