#include "coxnet/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <string>

#include "coxnet/error.hpp"
#include "coxnet/parallel.hpp"
#include "coxnet/simulator.hpp"
#include "text_util.hpp"

namespace coxnet {

ConfusionModel ConfusionModel::identity() {
  ConfusionModel m;
  for (std::size_t k = 0; k < kLabelCount; ++k) m.q[k][k] = 1.0;
  return m;
}

ConfusionModel ConfusionModel::uniform() {
  ConfusionModel m;
  for (auto& row : m.q) row.fill(1.0 / static_cast<double>(kLabelCount));
  return m;
}

ConfusionModel ConfusionModel::symmetric(double diagonal) {
  if (!(diagonal >= 0.0 && diagonal <= 1.0)) throw InvalidArgument("diagonal must lie in [0, 1]");
  ConfusionModel m;
  const double off = (1.0 - diagonal) / static_cast<double>(kLabelCount - 1);
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    for (std::size_t b = 0; b < kLabelCount; ++b) m.q[a][b] = a == b ? diagonal : off;
  }
  return m;
}

bool ConfusionModel::defined(Label predicted) const {
  const auto& row = q[static_cast<std::size_t>(predicted)];
  return !std::all_of(row.begin(), row.end(), [](double v) { return std::isnan(v); });
}

void ConfusionModel::validate() const {
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    if (!defined(static_cast<Label>(a))) continue;
    double sum = 0.0;
    for (double v : q[a]) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("confusion entries must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InvalidArgument("confusion row " + std::string(label_token(static_cast<Label>(a))) +
                            " sums to " + detail::format_double(sum));
    }
  }
}

ConfusionModel estimate_confusion(std::span<const std::pair<Label, Label>> calibration,
                                  double smoothing) {
  if (calibration.empty()) throw InvalidArgument("calibration set is empty");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw InvalidArgument("smoothing must be non-negative");
  }
  ConfusionModel m;
  m.smoothing = smoothing;
  for (const auto& [predicted, truth] : calibration) {
    ++m.calibration_counts[static_cast<std::size_t>(predicted)][static_cast<std::size_t>(truth)];
  }
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    std::size_t row_total = 0;
    for (std::size_t c : m.calibration_counts[a]) row_total += c;
    const double denom = static_cast<double>(row_total) + static_cast<double>(kLabelCount) * smoothing;
    if (denom == 0.0) {
      m.q[a].fill(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    for (std::size_t b = 0; b < kLabelCount; ++b) {
      m.q[a][b] = (static_cast<double>(m.calibration_counts[a][b]) + smoothing) / denom;
    }
  }
  return m;
}

std::vector<std::pair<Label, Label>> read_calibration(std::istream& in) {
  std::vector<std::pair<Label, Label>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_ws(view);
    if (fields.size() != 2) throw ParseError(line_no, "expected '<predicted> <true>'");
    auto predicted = parse_label(fields[0]);
    auto truth = parse_label(fields[1]);
    if (!predicted || !truth) throw ParseError(line_no, "unknown label token");
    out.emplace_back(*predicted, *truth);
  }
  return out;
}

ConfusionModel read_confusion_matrix(std::istream& in) {
  ConfusionModel m;
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_ws(view);
    if (row >= kLabelCount) throw ParseError(line_no, "confusion matrix has more than 4 rows");
    if (fields.size() != kLabelCount) throw ParseError(line_no, "confusion row needs 4 entries");
    for (std::size_t b = 0; b < kLabelCount; ++b) {
      auto v = detail::parse_double(fields[b]);
      if (!v) throw ParseError(line_no, "invalid number '" + std::string(fields[b]) + "'");
      m.q[row][b] = *v;
    }
    ++row;
  }
  if (row != kLabelCount) throw ParseError(0, "confusion matrix needs 4 rows");
  m.validate();
  return m;
}

void write_confusion_matrix(std::ostream& out, const ConfusionModel& model) {
  out << "# rows: predicted POS NEG NEU UNR; columns: true POS NEG NEU UNR\n";
  for (const auto& row : model.q) {
    for (std::size_t b = 0; b < kLabelCount; ++b) {
      out << (b ? " " : "") << detail::format_double(row[b]);
    }
    out << '\n';
  }
}

EventLog reclassify(const EventLog& log, const ConfusionModel& model, std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Event> events = log.events();
  for (Event& e : events) {
    if (e.kind != EventKind::Tweet) continue;
    if (!model.defined(e.label)) {
      throw InvalidArgument("predicted class " + std::string(label_token(e.label)) +
                            " is absent from the calibration set and smoothing is 0");
    }
    const auto& row = model.q[static_cast<std::size_t>(e.label)];
    const double u = unit(rng);
    double cumulative = 0.0;
    std::size_t chosen = kLabelCount;
    std::size_t last_positive = 0;
    for (std::size_t b = 0; b < kLabelCount; ++b) {
      if (row[b] > 0.0) last_positive = b;
      cumulative += row[b];
      if (chosen == kLabelCount && row[b] > 0.0 && u < cumulative) chosen = b;
    }
    e.label = static_cast<Label>(chosen == kLabelCount ? last_positive : chosen);
  }
  return log.with_events(std::move(events));
}

void summarize(RealizationProfile& profile) {
  const std::size_t p = profile.names.size();
  profile.included = 0;
  profile.excluded = 0;
  profile.fractions.assign(p, {});
  profile.mean_estimate.assign(p, 0.0);
  std::vector<std::array<std::size_t, 3>> counts(p, {0, 0, 0});
  for (const auto& r : profile.realizations) {
    if (!r.converged) {
      ++profile.excluded;
      continue;
    }
    ++profile.included;
    for (std::size_t k = 0; k < p; ++k) {
      const auto idx = static_cast<Eigen::Index>(k);
      ++counts[k][static_cast<std::size_t>(classify(r.ci_lower[idx], r.ci_upper[idx]))];
      profile.mean_estimate[k] += r.estimate[idx];
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (profile.included == 0) {
      profile.mean_estimate[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const auto m = static_cast<double>(profile.included);
    profile.mean_estimate[k] /= m;
    profile.fractions[k].positive = static_cast<double>(counts[k][0]) / m;
    profile.fractions[k].negative = static_cast<double>(counts[k][1]) / m;
    profile.fractions[k].not_significant = static_cast<double>(counts[k][2]) / m;
  }
}

ProfilePair run_profile(const EventLog& log, const CovariateSpec& spec,
                        const ConfusionModel& model, const ResampleConfig& config) {
  if (config.realizations == 0) throw InvalidArgument("at least one realization is required");
  model.validate();
  config.fit.validate();

  ProfilePair out;
  out.positive.sentiment = Sentiment::Positive;
  out.negative.sentiment = Sentiment::Negative;
  out.positive.names = out.negative.names = spec.names();
  out.positive.realizations.resize(config.realizations);
  out.negative.realizations.resize(config.realizations);

  const auto p = static_cast<Eigen::Index>(spec.size());
  auto failed = [&](std::size_t index, std::uint64_t seed) {
    RealizationRecord r;
    r.index = index;
    r.seed = seed;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.estimate = r.se = r.ci_lower = r.ci_upper = Eigen::VectorXd::Constant(p, nan);
    return r;
  };

  parallel_for(config.realizations, config.threads, [&](std::size_t k) {
    const std::size_t index = k + 1;
    const std::uint64_t seed = derive_seed(config.master_seed, index);
    EventLog relabeled = reclassify(log, model, seed);
    auto data = std::make_shared<const WindowedData>(relabeled, spec, config.t_start, config.t_end);
    for (Sentiment s : {Sentiment::Positive, Sentiment::Negative}) {
      RealizationRecord record = failed(index, seed);
      try {
        PartialLikelihood model_s(data, s, config.policy, config.standardize);
        FitResult r = fit(model_s, config.fit);
        record.converged = r.converged;
        record.estimate = r.beta;
        record.se = r.se;
        record.ci_lower = r.ci_lower;
        record.ci_upper = r.ci_upper;
      } catch (const NumericalError&) {
        record.converged = false;
      }
      (s == Sentiment::Positive ? out.positive : out.negative).realizations[k] = std::move(record);
    }
  });

  summarize(out.positive);
  summarize(out.negative);
  return out;
}

}  // namespace coxnet
