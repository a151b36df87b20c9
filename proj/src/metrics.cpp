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

#include "lfqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_dims(const LabelMask &a, const LabelMask &b) {
  if (a.grid().dims() != b.grid().dims())
    throw InvalidArgument("mask dimensions differ");
}

// Lower envelope of parabolas s^2 (p - q)^2 + f(q), in place over a strided line.
void edt_1d(double *f, std::int64_t n, std::int64_t stride, double s2,
            std::vector<double> &work, std::vector<std::int64_t> &v,
            std::vector<double> &z) {
  work.resize(static_cast<std::size_t>(n));
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  for (std::int64_t q = 0; q < n; ++q)
    work[q] = f[q * stride];

  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (work[q] == kInf)
      continue;
    const double fq = work[q] + s2 * static_cast<double>(q * q);
    double s = -kInf;
    while (k >= 0) {
      const std::int64_t r = v[k];
      s = (fq - (work[r] + s2 * static_cast<double>(r * r))) /
          (2.0 * s2 * static_cast<double>(q - r));
      if (s > z[k])
        break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0)
    return;
  std::int64_t j = 0;
  for (std::int64_t p = 0; p < n; ++p) {
    while (z[j + 1] < static_cast<double>(p))
      ++j;
    const double d = static_cast<double>(p - v[j]);
    f[p * stride] = s2 * d * d + work[v[j]];
  }
}

double count_foreground(const LabelMask &m) { return static_cast<double>(m.count()); }

} // namespace

double dice(const LabelMask &a, const LabelMask &b) {
  check_same_dims(a, b);
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const bool x = a[n] != 0, y = b[n] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0)
    return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

std::vector<std::uint8_t> boundary(const LabelMask &mask) {
  const auto &g = mask.grid();
  std::vector<std::uint8_t> out(mask.size(), 0);
  static constexpr int kOff[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                     {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        if (mask.at(i, j, k) == 0)
          continue;
        for (const auto &o : kOff) {
          const auto a = i + o[0], b = j + o[1], c = k + o[2];
          if (!g.contains(a, b, c) || mask.at(a, b, c) == 0) {
            out[g.linear(i, j, k)] = 1;
            break;
          }
        }
      }
  return out;
}

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> seeds,
                                               const Index3 &dims,
                                               const Vec3 &spacing) {
  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<double> f(seeds.size());
  for (std::size_t n = 0; n < seeds.size(); ++n)
    f[n] = seeds[n] ? 0.0 : kInf;
  std::vector<double> work, z;
  std::vector<std::int64_t> v;
  for (std::int64_t k = 0; k < nz; ++k)
    for (std::int64_t j = 0; j < ny; ++j)
      edt_1d(&f[static_cast<std::size_t>(nx * (j + ny * k))], nx, 1,
             spacing[0] * spacing[0], work, v, z);
  for (std::int64_t k = 0; k < nz; ++k)
    for (std::int64_t i = 0; i < nx; ++i)
      edt_1d(&f[static_cast<std::size_t>(i + nx * ny * k)], ny, nx,
             spacing[1] * spacing[1], work, v, z);
  for (std::int64_t j = 0; j < ny; ++j)
    for (std::int64_t i = 0; i < nx; ++i)
      edt_1d(&f[static_cast<std::size_t>(i + nx * j)], nz, nx * ny,
             spacing[2] * spacing[2], work, v, z);
  return f;
}

std::vector<double> surface_distances(const LabelMask &a, const LabelMask &b,
                                      const Vec3 &spacing) {
  check_same_dims(a, b);
  if (a.empty() || b.empty())
    throw InvalidArgument("undefined surface distance");
  const auto ba = boundary(a);
  const auto bb = boundary(b);
  const auto &dims = a.grid().dims();
  const auto da = squared_distance_transform(ba, dims, spacing);
  const auto db = squared_distance_transform(bb, dims, spacing);
  std::vector<double> out;
  for (std::size_t n = 0; n < ba.size(); ++n)
    if (ba[n])
      out.push_back(std::sqrt(db[n]));
  for (std::size_t n = 0; n < bb.size(); ++n)
    if (bb[n])
      out.push_back(std::sqrt(da[n]));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> surface_distances(const LabelMask &a, const LabelMask &b) {
  return surface_distances(a, b, a.grid().spacing());
}

double percentile(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw InvalidArgument("percentile of an empty list");
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidArgument("percentile rank must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size())
    return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double hd(const LabelMask &a, const LabelMask &b) {
  return surface_distances(a, b).back();
}

double hd95(const LabelMask &a, const LabelMask &b) {
  return percentile(surface_distances(a, b), 0.95);
}

double assd(const LabelMask &a, const LabelMask &b) {
  const auto d = surface_distances(a, b);
  double s = 0.0;
  for (double x : d)
    s += x;
  return s / static_cast<double>(d.size());
}

double rve(const LabelMask &pred, const LabelMask &truth) {
  check_same_dims(pred, truth);
  if (truth.empty())
    throw InvalidArgument("relative volume error: empty reference mask");
  const double vp = count_foreground(pred) * pred.grid().voxel_volume();
  const double vt = count_foreground(truth) * truth.grid().voxel_volume();
  return std::abs(vp - vt) / vt;
}

SegMetricsRecord evaluate_segmentation(const LabelMask &pred,
                                       const LabelMask &truth) {
  SegMetricsRecord r;
  r.dice = dice(pred, truth);
  const auto d = surface_distances(pred, truth);
  r.hd = d.back();
  r.hd95 = percentile(d, 0.95);
  double s = 0.0;
  for (double x : d)
    s += x;
  r.assd = s / static_cast<double>(d.size());
  r.rve = rve(pred, truth);
  return r;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty())
    return s;
  for (double v : values)
    s.mean += v;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values)
      ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

ConfusionMatrix::ConfusionMatrix(int n_classes) : n_(n_classes) {
  if (n_classes < 1)
    throw InvalidArgument("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(n_ * n_), 0);
}

std::size_t ConfusionMatrix::index(int t, int p) const {
  if (t < 0 || p < 0 || t >= n_ || p >= n_)
    throw InvalidArgument("class label out of range");
  return static_cast<std::size_t>(t * n_ + p);
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto c : counts_)
    s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int c = 0; c < n_; ++c)
    s += at(c, c);
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int c) const {
  std::int64_t s = 0;
  for (int p = 0; p < n_; ++p)
    s += at(c, p);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int c) const {
  std::int64_t s = 0;
  for (int t = 0; t < n_; ++t)
    s += at(t, c);
  return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred,
                          int n_classes) {
  if (truth.size() != pred.size())
    throw InvalidArgument("confusion: label lists differ in length");
  ConfusionMatrix cm(n_classes);
  for (std::size_t n = 0; n < truth.size(); ++n)
    ++cm.at(truth[n], pred[n]);
  return cm;
}

FbetaReport fbeta_report(const ConfusionMatrix &cm, double beta) {
  if (!(beta > 0.0))
    throw InvalidArgument("beta must be positive");
  const std::int64_t total = cm.total();
  if (total <= 0)
    throw InvalidArgument("empty confusion matrix");
  const int n = cm.n_classes();
  const double b2 = beta * beta;
  auto f_of = [b2](double p, double r) {
    const double den = b2 * p + r;
    return den > 0.0 ? (1.0 + b2) * p * r / den : 0.0;
  };

  FbetaReport rep;
  rep.beta = beta;
  rep.class_precision.resize(static_cast<std::size_t>(n));
  rep.class_recall.resize(static_cast<std::size_t>(n));
  rep.class_fbeta.resize(static_cast<std::size_t>(n));
  rep.support.resize(static_cast<std::size_t>(n));
  int present = 0;
  for (int c = 0; c < n; ++c) {
    const auto tp = static_cast<double>(cm.at(c, c));
    const auto rows = cm.row_sum(c), cols = cm.col_sum(c);
    const double p = cols > 0 ? tp / static_cast<double>(cols) : 0.0;
    const double r = rows > 0 ? tp / static_cast<double>(rows) : 0.0;
    const auto u = static_cast<std::size_t>(c);
    rep.class_precision[u] = p;
    rep.class_recall[u] = r;
    rep.class_fbeta[u] = f_of(p, r);
    rep.support[u] = rows;
    if (rows > 0 || cols > 0) {
      ++present;
      rep.precision.macro += p;
      rep.recall.macro += r;
      rep.fbeta.macro += rep.class_fbeta[u];
    }
    const double w = static_cast<double>(rows) / static_cast<double>(total);
    rep.precision.weighted += w * p;
    rep.recall.weighted += w * r;
    rep.fbeta.weighted += w * rep.class_fbeta[u];
  }
  rep.precision.macro /= present;
  rep.recall.macro /= present;
  rep.fbeta.macro /= present;

  // Single-label data: pooled false positives equal pooled false negatives.
  const double acc = static_cast<double>(cm.trace()) / static_cast<double>(total);
  rep.precision.micro = acc;
  rep.recall.micro = acc;
  rep.fbeta.micro = f_of(acc, acc);
  rep.accuracy = {acc, acc, acc};
  return rep;
}

int max_vote(std::span<const int> labels) {
  if (labels.empty())
    throw InvalidArgument("max_vote: no predictions");
  std::map<int, int> counts;
  for (int l : labels)
    ++counts[l];
  int best = 0, best_count = -1;
  for (const auto &[label, count] : counts)
    if (count >= best_count) {
      best = label;
      best_count = count;
    }
  return best;
}

double student_t_two_sided_p(double t, int dof) {
  if (dof < 1)
    throw InvalidArgument("t distribution needs at least one degree of freedom");
  if (!std::isfinite(t))
    throw NumericalError("non-finite t statistic");
  const boost::math::students_t dist(static_cast<double>(dof));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

TTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidArgument("paired t-test: samples differ in length");
  if (x.size() < 2)
    throw InvalidArgument("paired t-test: need at least two pairs");
  std::vector<double> d(x.size());
  for (std::size_t n = 0; n < d.size(); ++n)
    d[n] = x[n] - y[n];
  const Summary s = summarize(d);
  if (!(s.sd > 0.0))
    throw InvalidArgument("paired t-test: zero-variance differences");
  TTestResult r;
  r.dof = static_cast<int>(d.size()) - 1;
  r.t = s.mean / (s.sd / std::sqrt(static_cast<double>(d.size())));
  r.p = student_t_two_sided_p(r.t, r.dof);
  return r;
}

nlohmann::json to_json(const SegMetricsRecord &r) {
  return {{"dice", r.dice}, {"hd", r.hd}, {"hd95", r.hd95},
          {"assd", r.assd}, {"rve", r.rve}};
}

nlohmann::json to_json(const FbetaReport &rep) {
  auto avg = [](const Averaged &a) {
    return nlohmann::json{{"micro", a.micro}, {"macro", a.macro},
                          {"weighted", a.weighted}};
  };
  return {{"beta", rep.beta},
          {"precision", avg(rep.precision)},
          {"recall", avg(rep.recall)},
          {"fbeta", avg(rep.fbeta)},
          {"accuracy", avg(rep.accuracy)},
          {"per_class",
           {{"precision", rep.class_precision},
            {"recall", rep.class_recall},
            {"fbeta", rep.class_fbeta},
            {"support", rep.support}}}};
}

} // namespace lfqa
