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

#include "lfqa/qa_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "lfqa/error.hpp"
#include "lfqa/kspace.hpp"
#include "lfqa/metrics.hpp"

namespace lfqa {

namespace {

constexpr double kPi = 3.14159265358979323846;

double mean_of(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v)
    s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double quantile_inplace(std::vector<double> &v, double q) {
  const auto k = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

struct SpectralFeatures {
  double hf_fraction = 0.0;
  double spike_ratio = 0.0;
};

SpectralFeatures spectral_features(const Volume &v) {
  const KSpace k = fft3(v);
  const auto &g = v.grid();
  double total = 0.0, high = 0.0, peak = 0.0;
  for (std::size_t n = 1; n < k.size(); ++n) {
    const double mag = std::abs(k.coeffs()[n]);
    const double r = nyquist_radius(g, n);
    total += mag * mag;
    if (r > 0.5)
      high += mag * mag;
    if (r >= kSpikeAnnulusMin && r <= kSpikeAnnulusMax)
      peak = std::max(peak, mag);
  }
  SpectralFeatures f;
  f.hf_fraction = total > 0.0 ? high / total : 0.0;
  const double dc = std::abs(k.coeffs()[0]);
  f.spike_ratio = dc > 0.0 ? peak / dc : 0.0;
  return f;
}

std::array<double, 3> band_ratios(const Volume &v) {
  const Volume smooth = gaussian_blur(v, 1.0);
  const auto &g = v.grid();
  std::array<std::vector<double>, 3> slice_energy;
  for (int a = 0; a < 3; ++a)
    slice_energy[static_cast<std::size_t>(a)].assign(static_cast<std::size_t>(g.dims()[a]), 0.0);
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const auto n = g.linear(i, j, k);
        const double r = v[n] - smooth[n];
        slice_energy[0][static_cast<std::size_t>(i)] += r * r;
        slice_energy[1][static_cast<std::size_t>(j)] += r * r;
        slice_energy[2][static_cast<std::size_t>(k)] += r * r;
      }
  std::array<double, 3> out{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double m = mean_of(slice_energy[a]);
    const double mx = *std::max_element(slice_energy[a].begin(), slice_energy[a].end());
    out[a] = m > 0.0 ? mx / m : 1.0;
  }
  return out;
}

double histogram_entropy(const Volume &v) {
  constexpr int kBins = 64;
  std::array<double, kBins> h{};
  for (double x : v.data())
    h[static_cast<std::size_t>(std::clamp(static_cast<int>(x * kBins), 0, kBins - 1))] += 1.0;
  double e = 0.0;
  const double n = static_cast<double>(v.size());
  for (double c : h)
    if (c > 0.0)
      e -= (c / n) * std::log(c / n);
  return e;
}

double gradient_mean(const Volume &v) {
  const auto &g = v.grid();
  double s = 0.0;
  std::size_t count = 0;
  for (std::int64_t k = 1; k + 1 < g.nz(); ++k)
    for (std::int64_t j = 1; j + 1 < g.ny(); ++j)
      for (std::int64_t i = 1; i + 1 < g.nx(); ++i) {
        const double gx = 0.5 * (v.at(i + 1, j, k) - v.at(i - 1, j, k));
        const double gy = 0.5 * (v.at(i, j + 1, k) - v.at(i, j - 1, k));
        const double gz = 0.5 * (v.at(i, j, k + 1) - v.at(i, j, k - 1));
        s += std::sqrt(gx * gx + gy * gy + gz * gz);
        ++count;
      }
  return count ? s / static_cast<double>(count) : 0.0;
}

double centroid_offset(const Volume &v) {
  const auto &g = v.grid();
  Vec3 c = Vec3::Zero();
  double w = 0.0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const double x = v.at(i, j, k);
        c += x * Vec3(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
        w += x;
      }
  const Vec3 mid(static_cast<double>(g.nx() - 1) / 2.0, static_cast<double>(g.ny() - 1) / 2.0,
                 static_cast<double>(g.nz() - 1) / 2.0);
  return w > 0.0 ? (c / w - mid).norm() : 0.0;
}

double bias_energy(const Volume &v) {
  const int factor = std::min<std::int64_t>({v.grid().nx(), v.grid().ny(), v.grid().nz()}) >= 32 ? 4 : 2;
  const Volume d = downsample(v, factor);
  const auto &g = d.grid();
  std::vector<std::array<double, 10>> rows;
  std::vector<double> y;
  auto norm = [](std::int64_t i, std::int64_t n) {
    return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
  };
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const double val = d.at(i, j, k);
        if (val <= 0.1)
          continue;
        const double x = norm(i, g.nx()), yy = norm(j, g.ny()), z = norm(k, g.nz());
        rows.push_back({1.0, x, yy, z, x * x, yy * yy, z * z, x * yy, x * z, yy * z});
        y.push_back(val);
      }
  if (rows.size() < 20)
    return 0.0;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), 10);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < 10; ++c)
      a(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    b(static_cast<Eigen::Index>(r)) = y[r];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd fit = a * coef;
  const double m = fit.mean();
  if (!(m > 0.0))
    return 0.0;
  return (fit.array() - m).square().mean() / (m * m);
}

double foreground_iqr(const Volume &v) {
  std::vector<double> fg;
  for (double x : v.data())
    if (x > 0.05)
      fg.push_back(x);
  if (fg.size() < 4)
    return 0.0;
  const double q1 = quantile_inplace(fg, 0.25);
  const double q3 = quantile_inplace(fg, 0.75);
  return q3 - q1;
}

double principal_angle(const Volume &v) {
  const auto &g = v.grid();
  const Vec3 sp = g.spacing();
  double w = 0.0, mx = 0.0, my = 0.0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const double x = v.at(i, j, k);
        w += x;
        mx += x * static_cast<double>(i) * sp[0];
        my += x * static_cast<double>(j) * sp[1];
      }
  if (!(w > 0.0))
    return 0.0;
  mx /= w;
  my /= w;
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        const double x = v.at(i, j, k);
        const double dx = static_cast<double>(i) * sp[0] - mx;
        const double dy = static_cast<double>(j) * sp[1] - my;
        cxx += x * dx * dx;
        cyy += x * dy * dy;
        cxy += x * dx * dy;
      }
  return std::abs(0.5 * std::atan2(2.0 * cxy, cyy - cxx)) * 180.0 / kPi;
}

double lr_asymmetry(const Volume &v) {
  const auto &g = v.grid();
  double diff = 0.0;
  for (std::int64_t k = 0; k < g.nz(); ++k)
    for (std::int64_t j = 0; j < g.ny(); ++j)
      for (std::int64_t i = 0; i < g.nx(); ++i)
        diff += std::abs(v.at(i, j, k) - v.at(g.nx() - 1 - i, j, k));
  const double s = v.sum();
  return s > 0.0 ? diff / s : 0.0;
}

double background_mean(const Volume &v) {
  const auto &g = v.grid();
  Index3 b;
  for (int a = 0; a < 3; ++a)
    b[static_cast<std::size_t>(a)] = std::max<std::int64_t>(1, g.dims()[a] / 8);
  double s = 0.0;
  std::size_t count = 0;
  for (std::int64_t k = 0; k < g.nz(); ++k) {
    if (k >= b[2] && k < g.nz() - b[2])
      continue;
    for (std::int64_t j = 0; j < g.ny(); ++j) {
      if (j >= b[1] && j < g.ny() - b[1])
        continue;
      for (std::int64_t i = 0; i < g.nx(); ++i) {
        if (i >= b[0] && i < g.nx() - b[0])
          continue;
        s += v.at(i, j, k);
        ++count;
      }
    }
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

std::uint64_t example_stream(ArtefactDomain d, int severity, int idx) {
  return (static_cast<std::uint64_t>(index_of(d)) << 40) |
         (static_cast<std::uint64_t>(severity) << 32) | static_cast<std::uint32_t>(idx);
}

std::string example_id(ArtefactDomain d, int severity, int idx) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_c%d_%04d", std::string(to_string(d)).c_str(),
                severity, idx);
  return buf;
}

struct Job {
  int severity;
  int idx;
};

std::vector<Job> jobs_for(const std::array<int, kNumSeverities> &counts) {
  std::vector<Job> jobs;
  for (int c = 0; c < kNumSeverities; ++c) {
    if (counts[static_cast<std::size_t>(c)] < 0)
      throw InvalidArgument("example counts must be non-negative");
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i)
      jobs.push_back({c, i});
  }
  return jobs;
}

TrainingExample make_example(const std::vector<Volume> &clean, ArtefactDomain domain,
                             const Job &job, const SimParams &sim_params,
                             std::uint64_t seed) {
  const std::size_t src = static_cast<std::size_t>(job.idx) % clean.size();
  const std::string id = example_id(domain, job.severity, job.idx);
  if (job.severity == 0)
    return {id, normalize_intensity(clean[src]), domain, Severity::Class0, std::nullopt, src};
  Rng rng = Rng(seed).split(example_stream(domain, job.severity, job.idx));
  auto [vol, params] =
      apply_artefact(clean[src], domain, severity_from_int(job.severity), sim_params, rng);
  return {id, std::move(vol), domain, severity_from_int(job.severity), std::move(params), src};
}

// Mean loss, optional gradient, for standardised inputs with a bias column.
double objective(const Eigen::MatrixXd &x, const std::vector<int> &y,
                 const Eigen::MatrixXd &w, TrainingLoss loss, const FocalParams &focal,
                 double l2, Eigen::MatrixXd *grad) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd z = x * w.transpose();
  Eigen::MatrixXd gz(n, kNumSeverities);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double zmax = z.row(r).maxCoeff();
    Eigen::RowVectorXd p = (z.row(r).array() - zmax).exp();
    p /= p.sum();
    const int t = y[static_cast<std::size_t>(r)];
    const double pt = std::clamp(p(t), 0.0, 1.0);
    double dldp = 0.0;
    if (loss == TrainingLoss::Focal) {
      total += focal_term(pt, focal);
      dldp = focal_term_derivative(pt, focal);
      for (int k = 0; k < kNumSeverities; ++k)
        gz(r, k) = dldp * pt * ((k == t ? 1.0 : 0.0) - p(k));
    } else {
      total -= std::log(std::max(pt, kProbEps));
      for (int k = 0; k < kNumSeverities; ++k)
        gz(r, k) = pt >= kProbEps ? p(k) - (k == t ? 1.0 : 0.0) : 0.0;
    }
  }
  const Eigen::Index d = w.cols() - 1;
  const double reg = 0.5 * l2 * w.leftCols(d).squaredNorm();
  if (grad) {
    *grad = gz.transpose() * x / static_cast<double>(n);
    grad->leftCols(d) += l2 * w.leftCols(d);
  }
  return total / static_cast<double>(n) + reg;
}

Eigen::MatrixXd design_matrix(const std::vector<LabelledFeatures> &examples,
                              const std::vector<double> &mean,
                              const std::vector<double> &scale) {
  const auto d = static_cast<Eigen::Index>(mean.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(examples.size()), d + 1);
  for (std::size_t r = 0; r < examples.size(); ++r) {
    if (examples[r].x.size() != mean.size())
      throw InvalidArgument("feature dimension mismatch");
    for (Eigen::Index c = 0; c < d; ++c) {
      const auto u = static_cast<std::size_t>(c);
      x(static_cast<Eigen::Index>(r), c) = (examples[r].x[u] - mean[u]) / scale[u];
    }
    x(static_cast<Eigen::Index>(r), d) = 1.0;
  }
  return x;
}

} // namespace

const std::vector<std::string> &feature_names() {
  static const std::vector<std::string> names = {
      "hf_energy_fraction", "noise_sigma",     "band_ratio_x",   "band_ratio_y",
      "band_ratio_z",       "histogram_entropy", "gradient_mean", "centroid_offset",
      "bias_energy",        "foreground_iqr",  "spike_ratio",    "principal_angle",
      "lr_asymmetry",       "background_mean"};
  return names;
}

std::size_t feature_dim() { return feature_names().size(); }

double laplacian_noise_sigma(const Volume &v) {
  const auto &g = v.grid();
  std::vector<double> lap;
  lap.reserve(v.size());
  for (std::int64_t k = 1; k + 1 < g.nz(); ++k)
    for (std::int64_t j = 1; j + 1 < g.ny(); ++j)
      for (std::int64_t i = 1; i + 1 < g.nx(); ++i) {
        const double l = v.at(i + 1, j, k) + v.at(i - 1, j, k) + v.at(i, j + 1, k) +
                         v.at(i, j - 1, k) + v.at(i, j, k + 1) + v.at(i, j, k - 1) -
                         6.0 * v.at(i, j, k);
        lap.push_back(std::abs(l));
      }
  if (lap.empty())
    return 0.0;
  // For white noise of deviation s the operator output has deviation
  // sqrt(42) s; the median absolute value of a normal is 0.6745 deviations.
  return quantile_inplace(lap, 0.5) / (0.6745 * std::sqrt(42.0));
}

FeatureVector extract_features(const Volume &volume) {
  for (auto d : volume.grid().dims())
    if (d < 8)
      throw InvalidArgument("feature extraction needs at least 8 voxels per axis");
  const Volume v = normalize_intensity(volume);
  const SpectralFeatures spec = spectral_features(v);
  const auto bands = band_ratios(v);
  FeatureVector f = {spec.hf_fraction,   laplacian_noise_sigma(v), bands[0],
                     bands[1],           bands[2],                 histogram_entropy(v),
                     gradient_mean(v),   centroid_offset(v),       bias_energy(v),
                     foreground_iqr(v),  spec.spike_ratio,         principal_angle(v),
                     lr_asymmetry(v),    background_mean(v)};
  for (double x : f)
    if (!std::isfinite(x))
      throw NumericalError("non-finite feature");
  return f;
}

std::string_view to_string(TrainingLoss loss) {
  return loss == TrainingLoss::Focal ? "focal" : "ce";
}

TrainingLoss parse_training_loss(std::string_view name) {
  if (name == "focal")
    return TrainingLoss::Focal;
  if (name == "ce" || name == "cross_entropy")
    return TrainingLoss::CrossEntropy;
  throw InvalidArgument("unknown loss '" + std::string(name) + "' (focal|ce)");
}

void TrainConfig::validate() const {
  if (epochs < 0)
    throw InvalidArgument("epochs must be >= 0");
  if (!(learning_rate > 0.0))
    throw InvalidArgument("learning rate must be positive");
  if (!(l2 >= 0.0))
    throw InvalidArgument("l2 must be >= 0");
}

DomainClassifier::DomainClassifier(ArtefactDomain domain, TrainingLoss loss,
                                   FocalParams focal, std::vector<double> feature_mean,
                                   std::vector<double> feature_scale,
                                   Eigen::MatrixXd weights)
    : domain_(domain), loss_(loss), focal_(focal), mean_(std::move(feature_mean)),
      scale_(std::move(feature_scale)), weights_(std::move(weights)) {
  focal_.validate();
  if (scale_.size() != mean_.size())
    throw InvalidArgument("feature mean and scale differ in length");
  for (double s : scale_)
    if (!(s > 0.0))
      throw InvalidArgument("feature scales must be positive");
  if (weights_.rows() != kNumSeverities ||
      weights_.cols() != static_cast<Eigen::Index>(mean_.size()) + 1)
    throw InvalidArgument("weight matrix must be 3 x (dim + 1)");
}

std::array<double, kNumSeverities>
DomainClassifier::probabilities(const FeatureVector &x) const {
  if (x.size() != mean_.size())
    throw InvalidArgument("feature dimension mismatch");
  const auto d = static_cast<Eigen::Index>(mean_.size());
  Eigen::VectorXd u(d + 1);
  for (Eigen::Index c = 0; c < d; ++c) {
    const auto k = static_cast<std::size_t>(c);
    u(c) = (x[k] - mean_[k]) / scale_[k];
  }
  u(d) = 1.0;
  const Eigen::VectorXd z = weights_ * u;
  const double zmax = z.maxCoeff();
  std::array<double, kNumSeverities> p{};
  double s = 0.0;
  for (int k = 0; k < kNumSeverities; ++k) {
    p[static_cast<std::size_t>(k)] = std::exp(z(k) - zmax);
    s += p[static_cast<std::size_t>(k)];
  }
  for (auto &v : p)
    v /= s;
  return p;
}

Severity DomainClassifier::predict(const FeatureVector &x) const {
  const auto p = probabilities(x);
  return severity_from_int(
      static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
}

nlohmann::json DomainClassifier::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(weights_.cols()));
    for (Eigen::Index c = 0; c < weights_.cols(); ++c)
      row[static_cast<std::size_t>(c)] = weights_(r, c);
    w.push_back(row);
  }
  return {{"version", kModelVersion},
          {"feature_version", kFeatureVersion},
          {"domain", std::string(to_string(domain_))},
          {"loss", std::string(to_string(loss_))},
          {"focal", {{"alpha", focal_.alpha}, {"gamma", focal_.gamma_focus}}},
          {"feature_order", feature_names()},
          {"feature_mean", mean_},
          {"feature_scale", scale_},
          {"weights", w}};
}

DomainClassifier DomainClassifier::from_json(const nlohmann::json &j) {
  try {
    if (j.at("version").get<int>() != kModelVersion)
      throw ParseError("unsupported model version");
    if (j.at("feature_order").get<std::vector<std::string>>() != feature_names())
      throw ParseError("model was trained on a different feature set");
    const auto domain = parse_domain(j.at("domain").get<std::string>());
    if (!domain)
      throw ParseError("unknown domain in model file");
    FocalParams focal{j.at("focal").at("alpha").get<double>(),
                      j.at("focal").at("gamma").get<double>()};
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto mean = j.at("feature_mean").get<std::vector<double>>();
    Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(mean.size() + 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != mean.size() + 1)
        throw ParseError("weight row has the wrong length");
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
    return {*domain, parse_training_loss(j.at("loss").get<std::string>()), focal, mean,
            j.at("feature_scale").get<std::vector<double>>(), w};
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("malformed model: ") + e.what());
  } catch (const InvalidArgument &e) {
    throw ParseError(std::string("malformed model: ") + e.what());
  }
}

DomainClassifier train_domain(ArtefactDomain domain,
                              const std::vector<LabelledFeatures> &examples,
                              TrainingLoss loss, const FocalParams &focal,
                              const TrainConfig &config) {
  config.validate();
  focal.validate();
  if (examples.empty())
    throw InvalidArgument("no training examples");
  std::array<int, kNumSeverities> present{};
  std::vector<int> y;
  for (const auto &e : examples) {
    ++present[static_cast<std::size_t>(to_int(e.y))];
    y.push_back(to_int(e.y));
  }
  if (std::count_if(present.begin(), present.end(), [](int c) { return c > 0; }) < 2)
    throw InvalidArgument("single-class training set");

  const std::size_t d = examples.front().x.size();
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto &e : examples) {
    if (e.x.size() != d)
      throw InvalidArgument("feature dimension mismatch");
    for (std::size_t c = 0; c < d; ++c)
      mean[c] += e.x[c];
  }
  for (auto &m : mean)
    m /= static_cast<double>(examples.size());
  for (const auto &e : examples)
    for (std::size_t c = 0; c < d; ++c)
      scale[c] += (e.x[c] - mean[c]) * (e.x[c] - mean[c]);
  for (auto &s : scale) {
    s = std::sqrt(s / static_cast<double>(examples.size()));
    if (!(s > 1e-12))
      s = 1.0;
  }

  const Eigen::MatrixXd x = design_matrix(examples, mean, scale);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kNumSeverities, static_cast<Eigen::Index>(d) + 1);
  Eigen::MatrixXd grad;
  std::vector<double> history;
  double current = objective(x, y, w, loss, focal, config.l2, &grad);
  history.push_back(current);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double step = config.learning_rate;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      const Eigen::MatrixXd trial = w - step * grad;
      const double value = objective(x, y, trial, loss, focal, config.l2, nullptr);
      if (value <= current) {
        w = trial;
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      break;
    objective(x, y, w, loss, focal, config.l2, &grad);
    history.push_back(current);
  }

  DomainClassifier out(domain, loss, focal, std::move(mean), std::move(scale), std::move(w));
  out.loss_history = std::move(history);
  return out;
}

double training_objective(const DomainClassifier &classifier,
                          const std::vector<LabelledFeatures> &examples, double l2) {
  const Eigen::MatrixXd x =
      design_matrix(examples, classifier.feature_mean(), classifier.feature_scale());
  std::vector<int> y;
  for (const auto &e : examples)
    y.push_back(to_int(e.y));
  return objective(x, y, classifier.weights(), classifier.loss(), classifier.focal(), l2,
                   nullptr);
}

QAScoreRecord predict_features(const std::vector<DomainClassifier> &classifiers,
                               const FeatureVector &x, const std::string &sample_id) {
  QAScoreRecord rec;
  rec.sample_id = sample_id;
  for (ArtefactDomain d : kAllDomains) {
    std::vector<int> votes;
    for (const auto &c : classifiers)
      if (c.domain() == d)
        votes.push_back(to_int(c.predict(x)));
    if (votes.empty())
      throw InvalidArgument("no classifier for domain " + std::string(to_string(d)));
    rec[d] = severity_from_int(max_vote(votes));
  }
  return rec;
}

QAScoreRecord predict(const std::vector<DomainClassifier> &classifiers,
                      const Volume &volume, const std::string &sample_id) {
  for (ArtefactDomain d : kAllDomains)
    if (std::none_of(classifiers.begin(), classifiers.end(),
                     [d](const DomainClassifier &c) { return c.domain() == d; }))
      throw InvalidArgument("no classifier for domain " + std::string(to_string(d)));
  return predict_features(classifiers, extract_features(volume), sample_id);
}

std::vector<TrainingExample>
generate_training_set(const std::vector<Volume> &clean, ArtefactDomain domain,
                      const std::array<int, kNumSeverities> &counts,
                      const SimParams &sim_params, std::uint64_t seed) {
  if (clean.empty())
    throw InvalidArgument("no clean volumes");
  sim_params.validate();
  std::vector<TrainingExample> out;
  for (const Job &job : jobs_for(counts))
    out.push_back(make_example(clean, domain, job, sim_params, seed));
  return out;
}

std::vector<LabelledFeatures>
generate_feature_set(const std::vector<Volume> &clean, ArtefactDomain domain,
                     const std::array<int, kNumSeverities> &counts,
                     const SimParams &sim_params, std::uint64_t seed, int jobs) {
  if (clean.empty())
    throw InvalidArgument("no clean volumes");
  sim_params.validate();
  const auto work = jobs_for(counts);
  std::vector<LabelledFeatures> out(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        const auto ex = make_example(clean, domain, work[i], sim_params, seed);
        out[i] = {extract_features(ex.volume), ex.severity};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, work.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  for (const auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw InvalidArgument("train fraction must lie in [0, 1]");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i)
    idx[i] = i;
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(idx[i - 1], idx[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> val(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

std::filesystem::path model_path(const std::filesystem::path &dir, ArtefactDomain domain) {
  return dir / (std::string(to_string(domain)) + ".json");
}

void save_classifier(const DomainClassifier &classifier, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  const auto path = model_path(dir, classifier.domain());
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << classifier.to_json().dump(2) << '\n';
}

DomainClassifier load_classifier(const std::filesystem::path &dir, ArtefactDomain domain) {
  const auto path = model_path(dir, domain);
  std::ifstream in(path);
  if (!in)
    throw IoError("missing model for domain " + std::string(to_string(domain)) + ": " +
                  path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  auto c = DomainClassifier::from_json(j);
  if (c.domain() != domain)
    throw ParseError(path.string() + ": model is for domain " +
                     std::string(to_string(c.domain())));
  return c;
}

} // namespace lfqa
