#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coxnet/fitter.hpp"

namespace coxnet {

using LabelMatrix = std::array<std::array<double, kLabelCount>, kLabelCount>;

// q[predicted][true]: probability that a tweet the classifier labelled
// `predicted` truly belongs to `true`. Rows are indexed POS, NEG, NEU, UNR.
struct ConfusionModel {
  LabelMatrix q{};
  std::array<std::array<std::size_t, kLabelCount>, kLabelCount> calibration_counts{};
  double smoothing = 0.0;

  static ConfusionModel identity();
  static ConfusionModel uniform();
  // `diagonal` on the diagonal, the remainder spread evenly over the row.
  static ConfusionModel symmetric(double diagonal);

  // A row is undefined (all NaN) when its predicted class never occurs in
  // the calibration set and no smoothing is applied.
  bool defined(Label predicted) const;
  void validate() const;  // defined rows sum to 1 within 1e-12, entries >= 0
};

// q[p][t] = (count(p, t) + smoothing) / (count(p, .) + 4 * smoothing).
// Rows with count(p, .) = 0 and smoothing 0 are left undefined; reclassify
// rejects a tweet whose label falls on such a row.
ConfusionModel estimate_confusion(std::span<const std::pair<Label, Label>> calibration,
                                  double smoothing = 1.0);

// `<predicted> <true>` label-token pairs, one per line, '#' comments.
std::vector<std::pair<Label, Label>> read_calibration(std::istream& in);
// Four rows of four numbers.
ConfusionModel read_confusion_matrix(std::istream& in);
void write_confusion_matrix(std::ostream& out, const ConfusionModel& model);

// Redraws every tweet label from q[label]. Times, actors and FOLLOW events
// are untouched.
EventLog reclassify(const EventLog& log, const ConfusionModel& model, std::uint64_t seed);

struct RealizationRecord {
  std::size_t index = 0;  // 1-based
  std::uint64_t seed = 0;
  bool converged = false;
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
};

struct SignificanceFractions {
  double positive = 0.0;
  double negative = 0.0;
  double not_significant = 0.0;
};

struct RealizationProfile {
  Sentiment sentiment = Sentiment::Positive;
  std::vector<std::string> names;
  std::vector<RealizationRecord> realizations;  // in realization order
  std::size_t included = 0;                     // converged realizations
  std::size_t excluded = 0;
  std::vector<SignificanceFractions> fractions;  // per coefficient, over included
  std::vector<double> mean_estimate;             // per coefficient, over included

  std::size_t realization_count() const noexcept { return realizations.size(); }
};

// Fills included/excluded, fractions and mean estimates from the records.
void summarize(RealizationProfile& profile);

struct ResampleConfig {
  std::size_t realizations = 200;
  std::uint64_t master_seed = 1;
  FitConfig fit;
  RiskSetPolicy policy;
  bool standardize = false;
  double t_start = -std::numeric_limits<double>::infinity();
  double t_end = std::numeric_limits<double>::infinity();
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct ProfilePair {
  RealizationProfile positive;
  RealizationProfile negative;
};

// Realization k (1-based) relabels with derive_seed(master_seed, k), replays
// the network, and fits both sentiment models.
ProfilePair run_profile(const EventLog& log, const CovariateSpec& spec,
                        const ConfusionModel& model, const ResampleConfig& config);

}  // namespace coxnet
