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

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "lfqa/volume.hpp"

namespace lfqa {

// Segmentation overlap and surface distances.

/// 2|A n B| / (|A| + |B|); 1 when both are empty. Non-zero labels count as
/// foreground.
double dice(const LabelMask &a, const LabelMask &b);

/// Foreground voxels with at least one 6-neighbour in the background;
/// neighbours outside the grid are background.
std::vector<std::uint8_t> boundary(const LabelMask &mask);

/**
 * Symmetric boundary-to-boundary distances in mm, ascending: every boundary
 * voxel of a to the nearest boundary voxel of b and vice versa. Uses an exact
 * separable squared Euclidean distance transform.
 * Throws InvalidArgument("undefined surface distance") if either is empty.
 */
std::vector<double> surface_distances(const LabelMask &a, const LabelMask &b,
                                      const Vec3 &spacing);
std::vector<double> surface_distances(const LabelMask &a, const LabelMask &b);

/// Squared distance (mm^2) from every voxel to the nearest seed voxel;
/// +inf everywhere when there is no seed.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> seeds,
                                               const Index3 &dims,
                                               const Vec3 &spacing);

/// Linear interpolation between order statistics at position q (n - 1).
double percentile(std::span<const double> sorted, double q);

double hd(const LabelMask &a, const LabelMask &b);
double hd95(const LabelMask &a, const LabelMask &b);
double assd(const LabelMask &a, const LabelMask &b);

/// |V_pred - V_truth| / V_truth. Throws InvalidArgument for an empty truth.
double rve(const LabelMask &pred, const LabelMask &truth);

struct SegMetricsRecord {
  double dice = 0.0;
  double hd = 0.0;
  double hd95 = 0.0;
  double assd = 0.0;
  double rve = 0.0;
};

SegMetricsRecord evaluate_segmentation(const LabelMask &pred,
                                       const LabelMask &truth);

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double sd = 0.0;
  std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

// Classification.

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(int n_classes);

  int n_classes() const { return n_; }
  std::int64_t &at(int truth, int pred) { return counts_[index(truth, pred)]; }
  std::int64_t at(int truth, int pred) const {
    return counts_[index(truth, pred)];
  }
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int c) const;
  std::int64_t col_sum(int c) const;

private:
  std::size_t index(int t, int p) const;
  int n_;
  std::vector<std::int64_t> counts_;
};

/// Throws InvalidArgument for length mismatch or labels outside [0, n).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred,
                          int n_classes);

struct Averaged {
  double micro = 0.0;
  double macro = 0.0;
  double weighted = 0.0;
};

/**
 * Per-class precision, recall and F_beta with 0/0 -> 0. Macro and weighted
 * averages run over classes present in the truth or the predictions;
 * weights are the true-class supports. Accuracy is trace / total under every
 * label.
 */
struct FbetaReport {
  double beta = 1.0;
  Averaged precision;
  Averaged recall;
  Averaged fbeta;
  Averaged accuracy;
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_fbeta;
  std::vector<std::int64_t> support;
};

/// Throws InvalidArgument for an empty matrix or beta <= 0.
FbetaReport fbeta_report(const ConfusionMatrix &cm, double beta);

/// Most frequent label; ties go to the larger label (higher severity).
int max_vote(std::span<const int> labels);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int dof = 0;
};

/// Two-sided p-value of Student's t with dof degrees of freedom.
double student_t_two_sided_p(double t, int dof);

/// Paired t-test on d = x - y. Throws InvalidArgument for unequal or short
/// inputs and for zero-variance differences.
TTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const SegMetricsRecord &record);
nlohmann::json to_json(const FbetaReport &report);

} // namespace lfqa
