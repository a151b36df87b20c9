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

#include "lfqa/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Tolerance for treating a mapped coordinate as on the field boundary.
constexpr double kEdgeEps = 1e-6;

Mat4 axis_aligned(const Vec3 &spacing, const Vec3 &origin) {
  Mat4 m = Mat4::Identity();
  m(0, 0) = spacing.x();
  m(1, 1) = spacing.y();
  m(2, 2) = spacing.z();
  m.block<3, 1>(0, 3) = origin;
  return m;
}

Mat4 translation_matrix(const Vec3 &t) {
  Mat4 m = Mat4::Identity();
  m.block<3, 1>(0, 3) = t;
  return m;
}

// Combined target-voxel -> source-voxel map.
Mat4 voxel_map(const Grid &source, const AffineTransform &transform,
               const Grid &target) {
  if (!transform.invertible())
    throw NumericalError("non-invertible transform");
  return source.inverse_orientation() * transform.inverse().matrix() *
         target.orientation();
}

template <typename T>
std::vector<T> crop_impl(const Grid &src, std::span<const T> data,
                         const Index3 &start, const Index3 &size) {
  std::vector<T> out(static_cast<std::size_t>(size[0] * size[1] * size[2]),
                     T{0});
  std::size_t n = 0;
  for (std::int64_t k = 0; k < size[2]; ++k)
    for (std::int64_t j = 0; j < size[1]; ++j)
      for (std::int64_t i = 0; i < size[0]; ++i, ++n) {
        const auto si = start[0] + i, sj = start[1] + j, sk = start[2] + k;
        if (src.contains(si, sj, sk))
          out[n] = data[src.linear(si, sj, sk)];
      }
  return out;
}

Grid crop_grid(const Grid &src, const Index3 &center, const Index3 &size,
               Index3 &start) {
  for (int a = 0; a < 3; ++a) {
    if (size[a] <= 0)
      throw InvalidArgument("crop_roi: size components must be positive");
    start[a] = center[a] - size[a] / 2;
  }
  const Vec3 shift(static_cast<double>(start[0]), static_cast<double>(start[1]),
                   static_cast<double>(start[2]));
  return Grid(size, Mat4(src.orientation() * translation_matrix(shift)));
}

} // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(Index3 dims, Vec3 spacing, Vec3 origin)
    : Grid(dims, axis_aligned(spacing, origin)) {}

Grid::Grid(Index3 dims, const Mat4 &orientation)
    : dims_(dims), orientation_(orientation) {
  for (auto d : dims_)
    if (d <= 0)
      throw InvalidArgument("grid dimensions must be positive");
  if (orientation_.row(3) != Eigen::RowVector4d(0, 0, 0, 1))
    throw InvalidArgument("grid orientation last row must be (0,0,0,1)");
  const Eigen::Matrix3d linear = orientation_.block<3, 3>(0, 0);
  if (!orientation_.allFinite() || std::abs(linear.determinant()) < 1e-12)
    throw InvalidArgument("grid orientation is singular");
  spacing_ = linear.colwise().norm().transpose();
  inverse_ = orientation_.inverse();
}

Vec3 Grid::voxel_to_world(const Vec3 &voxel) const {
  return orientation_.block<3, 3>(0, 0) * voxel +
         orientation_.block<3, 1>(0, 3);
}

Vec3 Grid::world_to_voxel(const Vec3 &world) const {
  return inverse_.block<3, 3>(0, 0) * world + inverse_.block<3, 1>(0, 3);
}

Vec3 Grid::world_center() const {
  return voxel_to_world(Vec3((nx() - 1) / 2.0, (ny() - 1) / 2.0,
                             (nz() - 1) / 2.0));
}

bool Grid::same_geometry(const Grid &other, double tol) const {
  return dims_ == other.dims_ &&
         (orientation_ - other.orientation_).cwiseAbs().maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// Volume / LabelMask

Volume::Volume(Grid grid) : grid_(std::move(grid)), data_(grid_.size(), 0.0) {}

Volume::Volume(Grid grid, std::vector<double> data)
    : grid_(std::move(grid)), data_(std::move(data)) {
  if (data_.size() != grid_.size())
    throw InvalidArgument("volume data length does not match grid");
  for (double v : data_)
    if (!std::isfinite(v))
      throw InvalidArgument("volume contains non-finite values");
}

double Volume::min() const { return *std::min_element(data_.begin(), data_.end()); }
double Volume::max() const { return *std::max_element(data_.begin(), data_.end()); }
double Volume::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

LabelMask::LabelMask(Grid grid)
    : grid_(std::move(grid)), labels_(grid_.size(), 0) {}

LabelMask::LabelMask(Grid grid, std::vector<std::uint16_t> labels)
    : grid_(std::move(grid)), labels_(std::move(labels)) {
  if (labels_.size() != grid_.size())
    throw InvalidArgument("label data length does not match grid");
}

std::size_t LabelMask::count() const {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](auto l) { return l != 0; }));
}

bool LabelMask::is_binary() const {
  return std::all_of(labels_.begin(), labels_.end(),
                     [](auto l) { return l <= 1; });
}

LabelMask LabelMask::binarized() const {
  std::vector<std::uint16_t> out(labels_.size());
  std::transform(labels_.begin(), labels_.end(), out.begin(),
                 [](auto l) { return static_cast<std::uint16_t>(l != 0); });
  return {grid_, std::move(out)};
}

Volume LabelMask::indicator() const {
  std::vector<double> out(labels_.size());
  std::transform(labels_.begin(), labels_.end(), out.begin(),
                 [](auto l) { return l != 0 ? 1.0 : 0.0; });
  return {grid_, std::move(out)};
}

// ---------------------------------------------------------------------------
// AffineTransform

AffineTransform::AffineTransform(const Mat4 &matrix, Dof dof)
    : matrix_(matrix), dof_(dof) {
  if (!matrix_.allFinite())
    throw InvalidArgument("transform contains non-finite entries");
  if ((matrix_.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("transform last row must be (0,0,0,1)");
  matrix_.row(3) = Eigen::RowVector4d(0, 0, 0, 1);
  if (dof_ == Dof::Rigid) {
    const Eigen::Matrix3d r = matrix_.block<3, 3>(0, 0);
    const double ortho =
        (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6)
      throw InvalidArgument("rigid transform must be a proper rotation");
  }
}

AffineTransform AffineTransform::translation(const Vec3 &t) {
  return {translation_matrix(t), Dof::Rigid};
}

AffineTransform AffineTransform::rotation(const Vec3 &axis, double degrees,
                                          const Vec3 &center) {
  if (axis.norm() == 0.0)
    throw InvalidArgument("rotation axis must be non-zero");
  const Eigen::AngleAxisd aa(degrees * kPi / 180.0, axis.normalized());
  Mat4 r = Mat4::Identity();
  r.block<3, 3>(0, 0) = aa.toRotationMatrix();
  return {translation_matrix(center) * r * translation_matrix(-center),
          Dof::Rigid};
}

bool AffineTransform::invertible() const {
  return std::abs(matrix_.block<3, 3>(0, 0).determinant()) > 1e-12;
}

AffineTransform AffineTransform::inverse() const {
  if (!invertible())
    throw NumericalError("non-invertible transform");
  Mat4 inv = matrix_.inverse();
  inv.row(3) = Eigen::RowVector4d(0, 0, 0, 1);
  return {inv, dof_};
}

Vec3 AffineTransform::apply(const Vec3 &p) const {
  return matrix_.block<3, 3>(0, 0) * p + matrix_.block<3, 1>(0, 3);
}

AffineTransform AffineTransform::compose(const AffineTransform &other) const {
  const Dof dof = static_cast<int>(dof_) >= static_cast<int>(other.dof_)
                      ? dof_
                      : other.dof_;
  return {matrix_ * other.matrix_, dof};
}

// ---------------------------------------------------------------------------
// Resampling

double sample_trilinear(const Volume &volume, const Vec3 &voxel) {
  const auto &g = volume.grid();
  double c[3];
  std::int64_t i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const auto n = g.dims()[a];
    c[a] = voxel[a];
    if (c[a] < -kEdgeEps || c[a] > static_cast<double>(n - 1) + kEdgeEps)
      return 0.0;
    c[a] = std::clamp(c[a], 0.0, static_cast<double>(n - 1));
    if (n == 1) {
      i0[a] = 0;
      f[a] = 0.0;
      continue;
    }
    i0[a] = std::min(static_cast<std::int64_t>(std::floor(c[a])), n - 2);
    f[a] = c[a] - static_cast<double>(i0[a]);
  }
  const auto data = volume.data();
  const auto sx = g.dims()[0] > 1 ? 1 : 0;
  const auto sy = g.dims()[1] > 1 ? g.dims()[0] : 0;
  const auto sz = g.dims()[2] > 1 ? g.dims()[0] * g.dims()[1] : 0;
  const auto base = static_cast<std::int64_t>(g.linear(i0[0], i0[1], i0[2]));
  auto v = [&](int dx, int dy, int dz) {
    return data[static_cast<std::size_t>(base + dx * sx + dy * sy + dz * sz)];
  };
  const double c00 = v(0, 0, 0) * (1 - f[0]) + v(1, 0, 0) * f[0];
  const double c10 = v(0, 1, 0) * (1 - f[0]) + v(1, 1, 0) * f[0];
  const double c01 = v(0, 0, 1) * (1 - f[0]) + v(1, 0, 1) * f[0];
  const double c11 = v(0, 1, 1) * (1 - f[0]) + v(1, 1, 1) * f[0];
  const double c0 = c00 * (1 - f[1]) + c10 * f[1];
  const double c1 = c01 * (1 - f[1]) + c11 * f[1];
  return c0 * (1 - f[2]) + c1 * f[2];
}

namespace {

template <typename T, typename Fn>
void for_each_mapped(const Grid &target, const Mat4 &map, std::vector<T> &out,
                     Fn &&fn) {
  const Eigen::Matrix3d a = map.block<3, 3>(0, 0);
  const Vec3 b = map.block<3, 1>(0, 3);
  std::size_t n = 0;
  for (std::int64_t k = 0; k < target.nz(); ++k)
    for (std::int64_t j = 0; j < target.ny(); ++j) {
      const Vec3 row = a.col(1) * static_cast<double>(j) +
                       a.col(2) * static_cast<double>(k) + b;
      for (std::int64_t i = 0; i < target.nx(); ++i, ++n)
        out[n] = fn(Vec3(a.col(0) * static_cast<double>(i) + row));
    }
}

template <typename T>
T nearest_value(const Grid &g, std::span<const T> data, const Vec3 &p) {
  const auto i = static_cast<std::int64_t>(std::floor(p.x() + 0.5));
  const auto j = static_cast<std::int64_t>(std::floor(p.y() + 0.5));
  const auto k = static_cast<std::int64_t>(std::floor(p.z() + 0.5));
  return g.contains(i, j, k) ? data[g.linear(i, j, k)] : T{0};
}

} // namespace

Volume resample(const Volume &source, const AffineTransform &transform,
                const Grid &target_grid, Interp interp) {
  const Mat4 map = voxel_map(source.grid(), transform, target_grid);
  std::vector<double> out(target_grid.size());
  if (interp == Interp::Nearest) {
    for_each_mapped(target_grid, map, out, [&](const Vec3 &p) {
      return nearest_value(source.grid(), source.data(), p);
    });
  } else {
    for_each_mapped(target_grid, map, out,
                    [&](const Vec3 &p) { return sample_trilinear(source, p); });
  }
  return {target_grid, std::move(out)};
}

LabelMask resample(const LabelMask &source, const AffineTransform &transform,
                   const Grid &target_grid) {
  const Mat4 map = voxel_map(source.grid(), transform, target_grid);
  std::vector<std::uint16_t> out(target_grid.size());
  for_each_mapped(target_grid, map, out, [&](const Vec3 &p) {
    return nearest_value(source.grid(), source.labels(), p);
  });
  return {target_grid, std::move(out)};
}

// ---------------------------------------------------------------------------
// ROI, intensity, filtering

Volume crop_roi(const Volume &source, const Index3 &center, const Index3 &size) {
  Index3 start{};
  Grid grid = crop_grid(source.grid(), center, size, start);
  return {grid, crop_impl(source.grid(), source.data(), start, size)};
}

LabelMask crop_roi(const LabelMask &source, const Index3 &center,
                   const Index3 &size) {
  Index3 start{};
  Grid grid = crop_grid(source.grid(), center, size, start);
  return {grid, crop_impl(source.grid(), source.labels(), start, size)};
}

Volume normalize_intensity(const Volume &source) {
  const double lo = source.min();
  const double hi = source.max();
  if (!(hi > lo))
    throw InvalidArgument("degenerate intensity range");
  const double scale = 1.0 / (hi - lo);
  std::vector<double> out(source.size());
  const auto in = source.data();
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] = (in[n] - lo) * scale;
  return {source.grid(), std::move(out)};
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  const std::int64_t period = 2 * n;
  std::int64_t m = i % period;
  if (m < 0)
    m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0))
    throw InvalidArgument("gaussian_blur: sigma must be non-negative");
  if (sigma == 0.0)
    return {1.0};
  const auto radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int x = -radius; x <= radius; ++x) {
    const double w = std::exp(-0.5 * (x * x) / (sigma * sigma));
    k[static_cast<std::size_t>(x + radius)] = w;
    total += w;
  }
  for (auto &w : k)
    w /= total;
  return k;
}

Volume gaussian_blur(const Volume &source, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (kernel.size() == 1)
    return source;
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  const auto &g = source.grid();
  std::vector<double> cur = source.values();
  std::vector<double> next(cur.size());
  std::vector<double> line;

  const std::int64_t strides[3] = {1, g.nx(), g.nx() * g.ny()};
  for (int axis = 0; axis < 3; ++axis) {
    const auto n = g.dims()[axis];
    const auto stride = strides[axis];
    line.resize(static_cast<std::size_t>(n));
    // Iterate over every line parallel to `axis`.
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (std::int64_t q = 0; q < g.dims()[a2]; ++q)
      for (std::int64_t p = 0; p < g.dims()[a1]; ++p) {
        const auto base = p * strides[a1] + q * strides[a2];
        for (std::int64_t t = 0; t < n; ++t)
          line[static_cast<std::size_t>(t)] =
              cur[static_cast<std::size_t>(base + t * stride)];
        for (std::int64_t t = 0; t < n; ++t) {
          double acc = 0.0;
          for (std::int64_t r = -radius; r <= radius; ++r)
            acc += kernel[static_cast<std::size_t>(r + radius)] *
                   line[static_cast<std::size_t>(reflect_index(t + r, n))];
          next[static_cast<std::size_t>(base + t * stride)] = acc;
        }
      }
    std::swap(cur, next);
  }
  return {g, std::move(cur)};
}

Volume downsample(const Volume &source, int factor) {
  if (factor < 1)
    throw InvalidArgument("downsample factor must be >= 1");
  if (factor == 1)
    return source;
  const auto &g = source.grid();
  Index3 dims;
  for (int a = 0; a < 3; ++a)
    dims[a] = (g.dims()[a] + factor - 1) / factor;
  Mat4 scale = Mat4::Identity();
  const double half = (factor - 1) / 2.0;
  for (int a = 0; a < 3; ++a) {
    // Singleton axes are not decimated.
    const bool keep = g.dims()[a] == 1;
    scale(a, a) = keep ? 1.0 : factor;
    scale(a, 3) = keep ? 0.0 : half;
  }
  Grid out_grid(dims, Mat4(g.orientation() * scale));
  std::vector<double> out(out_grid.size(), 0.0);
  std::vector<int> counts(out.size(), 0);
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const auto n = out_grid.linear(i / factor, j / factor, k / factor);
        out[n] += source.at(i, j, k);
        ++counts[n];
      }
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] /= counts[n];
  return {out_grid, std::move(out)};
}

Volume clamp(const Volume &source, double lo, double hi) {
  std::vector<double> out = source.values();
  for (auto &v : out)
    v = std::clamp(v, lo, hi);
  return {source.grid(), std::move(out)};
}

} // namespace lfqa
