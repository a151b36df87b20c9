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
#include <functional>
#include <span>
#include <vector>

#include "lfqa/volume.hpp"

namespace lfqa {

/// Probabilities are clipped to [kProbEps, 1] before any logarithm.
inline constexpr double kProbEps = 1e-7;

struct FocalParams {
  double alpha = 0.25;
  double gamma_focus = 2.0;

  /// alpha in (0, 1], gamma_focus >= 0.
  void validate() const;
};

/// (background, foreground) fractions.
using Ratio = std::array<double, 2>;

struct PriorParams {
  double lambda_weight = 5.0;
  Ratio tau{1.0, 0.0};

  void validate() const;
};

/// Per-sample -alpha (1-p)^gamma ln(p); p is the probability of the true class.
double focal_term(double p, const FocalParams &params);
/// d focal_term / dp.
double focal_term_derivative(double p, const FocalParams &params);

/// Mean focal loss. Throws InvalidArgument for p outside [0, 1] or no samples.
double focal_loss(std::span<const double> p, const FocalParams &params = {});
std::vector<double> focal_loss_grad(std::span<const double> p,
                                    const FocalParams &params = {});

/// Mean -ln(p).
double cross_entropy(std::span<const double> p);

/// 1 - (2 sum(pred*target) + 1) / (sum(pred) + sum(target) + 1).
/// pred in [0, 1]; target is read as an indicator.
double dice_loss(std::span<const double> pred, std::span<const double> target);
double dice_loss(const Volume &pred, const LabelMask &target);
std::vector<double> dice_loss_grad(std::span<const double> pred,
                                   std::span<const double> target);

/// sum tau_i ln(tau_i / tau_hat_i); zero-weight terms vanish, tau_hat clipped.
double kl_ratio(const Ratio &tau, const Ratio &tau_hat);
/// Gradient with respect to tau_hat: -tau_i / tau_hat_i.
Ratio kl_ratio_grad(const Ratio &tau, const Ratio &tau_hat);

/// dice_loss + lambda KL(tau, (1 - mean(pred), mean(pred))).
double prior_total_loss(std::span<const double> pred,
                        std::span<const double> target,
                        const PriorParams &params);
double prior_total_loss(const Volume &pred, const LabelMask &target,
                        const PriorParams &params);
std::vector<double> prior_total_loss_grad(std::span<const double> pred,
                                          std::span<const double> target,
                                          const PriorParams &params);

/// Central differences, one coordinate at a time.
std::vector<double>
finite_diff_grad(const std::function<double(std::span<const double>)> &loss,
                 std::span<const double> x, double h = 1e-6);

} // namespace lfqa
