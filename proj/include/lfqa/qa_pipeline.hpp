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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lfqa/artefact_sim.hpp"
#include "lfqa/losses.hpp"
#include "lfqa/qa_types.hpp"
#include "lfqa/volume.hpp"

namespace lfqa {

/// Bumped whenever the feature list or its order changes.
inline constexpr int kFeatureVersion = 1;
/// Model file format version.
inline constexpr int kModelVersion = 1;

using FeatureVector = std::vector<double>;

/// Names of the features, in extraction order.
const std::vector<std::string> &feature_names();
std::size_t feature_dim();

/**
 * Hand-crafted quality features of normalize_intensity(volume):
 *
 *   hf_energy_fraction   spectral energy beyond half Nyquist / non-DC energy
 *   noise_sigma          robust noise estimate from the 6-neighbour Laplacian
 *   band_ratio_{x,y,z}   max / mean of per-slice high-pass variance
 *   histogram_entropy    64-bin intensity entropy (nats)
 *   gradient_mean        mean central-difference gradient magnitude
 *   centroid_offset      intensity centroid distance from the grid centre (voxels)
 *   bias_energy          variance of a quadratic fit to the foreground
 *   foreground_iqr       interquartile range of foreground intensities
 *   spike_ratio          largest annulus k-space magnitude / DC magnitude
 *   principal_angle      in-plane principal axis angle from j (degrees)
 *   lr_asymmetry         mean |v - mirror_i(v)| / mean v
 *   background_mean      mean of the eight corner blocks
 *
 * Throws InvalidArgument for constant input or grids under 8 voxels per axis.
 */
FeatureVector extract_features(const Volume &volume);

/// Noise estimate alone (used by extract_features), on the given scale.
double laplacian_noise_sigma(const Volume &volume);

enum class TrainingLoss { Focal, CrossEntropy };
std::string_view to_string(TrainingLoss loss);
/// "focal" or "ce" / "cross_entropy".
TrainingLoss parse_training_loss(std::string_view name);

struct TrainConfig {
  int epochs = 500;
  /// Initial step of every epoch's backtracking line search.
  double learning_rate = 1.0;
  double l2 = 1e-4;

  void validate() const;
};

struct LabelledFeatures {
  FeatureVector x;
  Severity y = Severity::Class0;
};

/// Standardised multinomial logistic regression for one artefact domain.
class DomainClassifier {
public:
  DomainClassifier(ArtefactDomain domain, TrainingLoss loss, FocalParams focal,
                   std::vector<double> feature_mean,
                   std::vector<double> feature_scale, Eigen::MatrixXd weights);

  ArtefactDomain domain() const { return domain_; }
  TrainingLoss loss() const { return loss_; }
  const FocalParams &focal() const { return focal_; }
  /// 3 x (dim + 1); the last column is the bias.
  const Eigen::MatrixXd &weights() const { return weights_; }
  const std::vector<double> &feature_mean() const { return mean_; }
  const std::vector<double> &feature_scale() const { return scale_; }
  std::size_t dim() const { return mean_.size(); }

  std::array<double, kNumSeverities> probabilities(const FeatureVector &x) const;
  Severity predict(const FeatureVector &x) const;

  /// Training objective before the first epoch and after every epoch.
  std::vector<double> loss_history;

  nlohmann::json to_json() const;
  /// Throws ParseError for malformed files or a different feature set.
  static DomainClassifier from_json(const nlohmann::json &j);

private:
  ArtefactDomain domain_;
  TrainingLoss loss_;
  FocalParams focal_;
  std::vector<double> mean_;
  std::vector<double> scale_;
  Eigen::MatrixXd weights_;
};

/**
 * Full-batch gradient descent with a backtracking line search, so the
 * objective never increases. Zero epochs leaves the weights at zero.
 * Throws InvalidArgument when fewer than two classes are present or the
 * feature dimensions disagree.
 */
DomainClassifier train_domain(ArtefactDomain domain,
                              const std::vector<LabelledFeatures> &examples,
                              TrainingLoss loss, const FocalParams &focal = {},
                              const TrainConfig &config = {});

/// Training objective (mean focal or cross-entropy plus L2) of a classifier.
double training_objective(const DomainClassifier &classifier,
                          const std::vector<LabelledFeatures> &examples,
                          double l2);

/**
 * One record per volume. Classifiers for the same domain form an ensemble
 * reduced by max_vote. Throws InvalidArgument when a domain has no
 * classifier.
 */
QAScoreRecord predict(const std::vector<DomainClassifier> &classifiers,
                      const Volume &volume, const std::string &sample_id);
QAScoreRecord predict_features(const std::vector<DomainClassifier> &classifiers,
                               const FeatureVector &x, const std::string &sample_id);

struct TrainingExample {
  std::string id;
  Volume volume;
  ArtefactDomain domain;
  Severity severity;
  /// Absent for class 0.
  std::optional<ConcreteParams> params;
  std::size_t source_index = 0;
};

/**
 * counts[c] examples of class c for `domain`. Source volumes cycle through
 * `clean`; class 0 is the normalised clean volume, classes 1 and 2 go through
 * apply_artefact. Every example draws from its own sub-stream of `seed`.
 */
std::vector<TrainingExample>
generate_training_set(const std::vector<Volume> &clean, ArtefactDomain domain,
                      const std::array<int, kNumSeverities> &counts,
                      const SimParams &sim_params, std::uint64_t seed);

/// Same examples as generate_training_set, reduced to features on the fly
/// over up to `jobs` threads. Output order does not depend on `jobs`.
std::vector<LabelledFeatures>
generate_feature_set(const std::vector<Volume> &clean, ArtefactDomain domain,
                     const std::array<int, kNumSeverities> &counts,
                     const SimParams &sim_params, std::uint64_t seed, int jobs = 1);

/// Shuffled split of [0, n) into (train, validation) with
/// round(train_fraction * n) training indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

/// Model directory layout: one "<domain>.json" per domain.
std::filesystem::path model_path(const std::filesystem::path &dir,
                                 ArtefactDomain domain);
void save_classifier(const DomainClassifier &classifier,
                     const std::filesystem::path &dir);
/// Throws IoError naming the domain when the file is missing.
DomainClassifier load_classifier(const std::filesystem::path &dir,
                                 ArtefactDomain domain);

} // namespace lfqa
