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

#include "lfqa/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lfqa/error.hpp"

namespace lfqa {

namespace {

void check_probability(double p, const char *what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument(std::string(what) + ": probability outside [0, 1]");
}

void check_simplex(const Ratio &r, const char *what) {
  if (!(r[0] >= 0.0 && r[1] >= 0.0) || std::abs(r[0] + r[1] - 1.0) > 1e-9)
    throw InvalidArgument(std::string(what) + " is not a probability pair");
}

std::vector<double> indicator_values(const LabelMask &mask) {
  std::vector<double> t(mask.size());
  for (std::size_t n = 0; n < t.size(); ++n)
    t[n] = mask[n] != 0 ? 1.0 : 0.0;
  return t;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

Ratio predicted_ratio(std::span<const double> pred) {
  const double m = mean_of(pred);
  return {1.0 - m, m};
}

} // namespace

void FocalParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidArgument("focal alpha must lie in (0, 1]");
  if (!(gamma_focus >= 0.0))
    throw InvalidArgument("focal gamma must be >= 0");
}

void PriorParams::validate() const {
  if (!(lambda_weight >= 0.0))
    throw InvalidArgument("prior lambda must be >= 0");
  check_simplex(tau, "tau");
}

double focal_term(double p, const FocalParams &params) {
  check_probability(p, "focal_loss");
  const double pc = std::max(p, kProbEps);
  return -params.alpha * std::pow(1.0 - p, params.gamma_focus) * std::log(pc);
}

double focal_term_derivative(double p, const FocalParams &params) {
  check_probability(p, "focal_loss");
  const double g = params.gamma_focus;
  const double q = 1.0 - p;
  const double pc = std::max(p, kProbEps);
  double d = 0.0;
  // (1-p)^(g-1) ln p is 0 at p == 1 for g > 0.
  if (g > 0.0 && q > 0.0)
    d += g * std::pow(q, g - 1.0) * std::log(pc);
  if (p >= kProbEps)
    d -= std::pow(q, g) / p;
  return params.alpha * d;
}

double focal_loss(std::span<const double> p, const FocalParams &params) {
  params.validate();
  if (p.empty())
    throw InvalidArgument("focal_loss: no samples");
  double s = 0.0;
  for (double x : p)
    s += focal_term(x, params);
  return s / static_cast<double>(p.size());
}

std::vector<double> focal_loss_grad(std::span<const double> p,
                                    const FocalParams &params) {
  params.validate();
  if (p.empty())
    throw InvalidArgument("focal_loss: no samples");
  std::vector<double> g(p.size());
  const double inv = 1.0 / static_cast<double>(p.size());
  for (std::size_t n = 0; n < p.size(); ++n)
    g[n] = focal_term_derivative(p[n], params) * inv;
  return g;
}

double cross_entropy(std::span<const double> p) {
  if (p.empty())
    throw InvalidArgument("cross_entropy: no samples");
  double s = 0.0;
  for (double x : p) {
    check_probability(x, "cross_entropy");
    s -= std::log(std::max(x, kProbEps));
  }
  return s / static_cast<double>(p.size());
}

double dice_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw InvalidArgument("dice_loss: size mismatch");
  double inter = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    check_probability(pred[n], "dice_loss");
    const double t = target[n] != 0.0 ? 1.0 : 0.0;
    inter += pred[n] * t;
    sp += pred[n];
    st += t;
  }
  return 1.0 - (2.0 * inter + 1.0) / (sp + st + 1.0);
}

double dice_loss(const Volume &pred, const LabelMask &target) {
  if (!pred.grid().same_geometry(target.grid()))
    throw InvalidArgument("dice_loss: grid mismatch");
  const auto t = indicator_values(target);
  return dice_loss(pred.data(), t);
}

std::vector<double> dice_loss_grad(std::span<const double> pred,
                                   std::span<const double> target) {
  if (pred.size() != target.size())
    throw InvalidArgument("dice_loss: size mismatch");
  double inter = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double t = target[n] != 0.0 ? 1.0 : 0.0;
    inter += pred[n] * t;
    sp += pred[n];
    st += t;
  }
  const double num = 2.0 * inter + 1.0;
  const double den = sp + st + 1.0;
  std::vector<double> g(pred.size());
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const double t = target[n] != 0.0 ? 1.0 : 0.0;
    g[n] = -(2.0 * t * den - num) / (den * den);
  }
  return g;
}

double kl_ratio(const Ratio &tau, const Ratio &tau_hat) {
  check_simplex(tau, "tau");
  check_simplex(tau_hat, "tau_hat");
  double kl = 0.0;
  for (int c = 0; c < 2; ++c)
    if (tau[c] > 0.0)
      kl += tau[c] * std::log(tau[c] / std::clamp(tau_hat[c], kProbEps, 1.0));
  return kl;
}

Ratio kl_ratio_grad(const Ratio &tau, const Ratio &tau_hat) {
  check_simplex(tau, "tau");
  Ratio g{0.0, 0.0};
  for (int c = 0; c < 2; ++c)
    if (tau[c] > 0.0 && tau_hat[c] >= kProbEps)
      g[c] = -tau[c] / tau_hat[c];
  return g;
}

double prior_total_loss(std::span<const double> pred,
                        std::span<const double> target,
                        const PriorParams &params) {
  params.validate();
  if (pred.empty())
    throw InvalidArgument("prior_total_loss: no voxels");
  const double d = dice_loss(pred, target);
  return d + params.lambda_weight * kl_ratio(params.tau, predicted_ratio(pred));
}

double prior_total_loss(const Volume &pred, const LabelMask &target,
                        const PriorParams &params) {
  if (!pred.grid().same_geometry(target.grid()))
    throw InvalidArgument("prior_total_loss: grid mismatch");
  const auto t = indicator_values(target);
  return prior_total_loss(pred.data(), t, params);
}

std::vector<double> prior_total_loss_grad(std::span<const double> pred,
                                          std::span<const double> target,
                                          const PriorParams &params) {
  params.validate();
  if (pred.empty())
    throw InvalidArgument("prior_total_loss: no voxels");
  auto g = dice_loss_grad(pred, target);
  const Ratio gk = kl_ratio_grad(params.tau, predicted_ratio(pred));
  // tau_hat = (1 - m, m), m = mean(pred).
  const double dm = (gk[1] - gk[0]) / static_cast<double>(pred.size());
  for (auto &x : g)
    x += params.lambda_weight * dm;
  return g;
}

std::vector<double>
finite_diff_grad(const std::function<double(std::span<const double>)> &loss,
                 std::span<const double> x, double h) {
  if (!(h > 0.0))
    throw InvalidArgument("finite_diff_grad: step must be positive");
  std::vector<double> work(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double x0 = work[n];
    work[n] = x0 + h;
    const double up = loss(work);
    work[n] = x0 - h;
    const double down = loss(work);
    work[n] = x0;
    g[n] = (up - down) / (2.0 * h);
  }
  return g;
}

} // namespace lfqa
