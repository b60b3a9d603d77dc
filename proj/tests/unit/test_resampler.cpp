#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "coxnet/error.hpp"
#include "coxnet/resampler.hpp"
#include "coxnet/simulator.hpp"
#include "oracle.hpp"

using namespace coxnet;

namespace {

constexpr std::size_t kPos = 0, kNeg = 1, kNeu = 2, kUnr = 3;

EventLog tweets_only(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Event> events;
  for (std::size_t k = 0; k < count; ++k) {
    events.push_back(Event::tweet(static_cast<double>(k), static_cast<NodeIndex>(rng() % 50),
                                  static_cast<Label>(rng() % 4)));
  }
  return EventLog(numbered_registry(50), std::move(events));
}

SimConfig strong_effect_config(std::uint64_t seed) {
  SimConfig cfg;
  cfg.nodes = 150;
  cfg.network.p_edge = 0.05;
  cfg.network.p_reciprocal = 0.5;
  cfg.beta_pos = Eigen::VectorXd::Zero(6);
  cfg.beta_pos[4] = 1.0;  // f5_pos
  cfg.baseline_pos = 0.01;
  cfg.baseline_neg = 0.01;
  cfg.neutral_rate = 0.01;
  cfg.horizon = 600;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Confusion, FactoriesAreStochastic) {
  for (const auto& m : {ConfusionModel::identity(), ConfusionModel::uniform(), ConfusionModel::symmetric(0.9)}) {
    EXPECT_NO_THROW(m.validate());
  }
  EXPECT_DOUBLE_EQ(ConfusionModel::symmetric(0.9).q[0][1], 0.1 / 3);
  EXPECT_THROW(ConfusionModel::symmetric(1.2), InvalidArgument);
  ConfusionModel bad = ConfusionModel::identity();
  bad.q[1][1] = 0.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = ConfusionModel::identity();
  bad.q[2][0] = -0.1;
  bad.q[2][2] = 1.1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Confusion, PerfectCalibrationWithoutSmoothingIsIdentity) {
  std::vector<std::pair<Label, Label>> pairs;
  for (int k = 0; k < 4; ++k)
    for (int rep = 0; rep < 3; ++rep) pairs.emplace_back(static_cast<Label>(k), static_cast<Label>(k));
  auto m = estimate_confusion(pairs, 0.0);
  EXPECT_EQ(m.q, ConfusionModel::identity().q);
  EXPECT_EQ(m.calibration_counts[2][2], 3u);
}

TEST(Confusion, SinglePairWithoutSmoothing) {
  std::vector<std::pair<Label, Label>> pairs{{Label::Positive, Label::Negative}};
  auto m = estimate_confusion(pairs, 0.0);
  EXPECT_EQ(m.q[kPos], (std::array<double, 4>{0, 1, 0, 0}));
  EXPECT_TRUE(m.defined(Label::Positive));
  // The other predicted classes were never seen: their rows stay undefined,
  // and redrawing a tweet that needs one is an error.
  EXPECT_FALSE(m.defined(Label::Negative));
  EXPECT_NO_THROW(m.validate());
  auto pos_only = parse_log_text("1 TWEET a POS\n2 TWEET b POS\n");
  auto relabelled = reclassify(pos_only, m, 1);
  for (const auto& e : relabelled.events()) EXPECT_EQ(e.label, Label::Negative);
  auto mixed = parse_log_text("1 TWEET a POS\n2 TWEET b NEU\n");
  EXPECT_THROW(reclassify(mixed, m, 1), InvalidArgument);
}

TEST(Confusion, AddOneSmoothing) {
  std::vector<std::pair<Label, Label>> pairs{{Label::Positive, Label::Positive}, {Label::Positive, Label::Negative}};
  auto m = estimate_confusion(pairs);
  EXPECT_DOUBLE_EQ(m.q[kPos][kPos], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.q[kPos][kNeg], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.q[kPos][kNeu], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(m.q[kUnr][kUnr], 0.25);
  EXPECT_NO_THROW(m.validate());
}

TEST(Confusion, EstimationErrors) {
  std::vector<std::pair<Label, Label>> none;
  EXPECT_THROW(estimate_confusion(none), InvalidArgument);
  std::vector<std::pair<Label, Label>> one{{Label::Neutral, Label::Neutral}};
  EXPECT_THROW(estimate_confusion(one, -1.0), InvalidArgument);
}

// A calibration set whose overall accuracy is 84.29%: without smoothing the
// count-weighted diagonal of Q is exactly the accuracy.
TEST(Confusion, WeightedDiagonalMatchesCalibrationAccuracy) {
  std::vector<std::pair<Label, Label>> pairs;
  const std::array<int, 4> per_class{2500, 1500, 2000, 1000};
  const std::array<int, 4> correct{2110, 1262, 1690, 838};  // 5900 of 7000
  for (std::size_t c = 0; c < 4; ++c) {
    for (int k = 0; k < per_class[c]; ++k) {
      const Label truth = k < correct[c] ? static_cast<Label>(c) : static_cast<Label>((c + 1 + k % 3) % 4);
      pairs.emplace_back(static_cast<Label>(c), truth);
    }
  }
  const double n = static_cast<double>(pairs.size());
  for (double s : {0.0, 1.0}) {
    auto m = estimate_confusion(pairs, s);
    double mass = 0.0;
    for (std::size_t c = 0; c < 4; ++c) mass += per_class[c] / n * m.q[c][c];
    if (s == 0.0) {
      EXPECT_DOUBLE_EQ(mass, 5900.0 / 7000.0);
    }
    EXPECT_NEAR(mass, 0.8429, 5e-5 + 12.0 * s / n) << "smoothing " << s;
  }
}

TEST(Confusion, TextRoundTrip) {
  auto m = ConfusionModel::symmetric(0.7);
  std::stringstream io;
  write_confusion_matrix(io, m);
  auto back = read_confusion_matrix(io);
  EXPECT_EQ(back.q, m.q);
  std::stringstream bad("1 0 0 0\n0 1 0 0\n0 0 1 0\n");
  EXPECT_THROW(read_confusion_matrix(bad), ParseError);
  std::stringstream calib("# predicted true\nPOS NEG\nNEU NEU\n");
  auto pairs = read_calibration(calib);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0], std::make_pair(Label::Positive, Label::Negative));
  std::stringstream broken("POS\n");
  EXPECT_THROW(read_calibration(broken), ParseError);
}

TEST(Reclassify, IdentityLeavesLogUnchanged) {
  auto log = oracle::random_stream({10, 300, 0.3, 0.0}, 1);
  EXPECT_EQ(reclassify(log, ConfusionModel::identity(), 99), log);
}

TEST(Reclassify, UniformSharesFollowMultinomialLaw) {
  auto log = tweets_only(10000, 3);
  auto out = reclassify(log, ConfusionModel::uniform(), 5);
  const double sigma = std::sqrt(0.25 * 0.75 / 10000.0);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_LE(std::abs(out.counts().by_label[c] / 10000.0 - 0.25), 3 * sigma) << "label " << c;
  }
}

TEST(Reclassify, PermutationSwapsPositiveAndNegative) {
  ConfusionModel swap = ConfusionModel::identity();
  swap.q[kPos] = {0, 1, 0, 0};
  swap.q[kNeg] = {1, 0, 0, 0};
  auto log = oracle::random_stream({10, 300, 0.3, 0.0}, 2);
  auto out = reclassify(log, swap, 1);
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto& a = log.events()[k];
    const auto& b = out.events()[k];
    if (a.kind != EventKind::Tweet) continue;
    if (a.label == Label::Positive) EXPECT_EQ(b.label, Label::Negative);
    else if (a.label == Label::Negative) EXPECT_EQ(b.label, Label::Positive);
    else EXPECT_EQ(b.label, a.label);
  }
}

TEST(Reclassify, OnlyLabelsChangeAndSeedsReproduce) {
  auto log = oracle::random_stream({20, 500, 0.4, 0.0}, 4);
  auto a = reclassify(log, ConfusionModel::symmetric(0.5), 17);
  auto b = reclassify(log, ConfusionModel::symmetric(0.5), 17);
  auto c = reclassify(log, ConfusionModel::symmetric(0.5), 18);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  ASSERT_EQ(a.size(), log.size());
  EXPECT_EQ(a.counts().follows, log.counts().follows);
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto& x = log.events()[k];
    const auto& y = a.events()[k];
    EXPECT_EQ(x.time, y.time);
    EXPECT_EQ(x.kind, y.kind);
    EXPECT_EQ(x.actor, y.actor);
    EXPECT_EQ(x.target, y.target);
  }
}

TEST(Summarize, ExcludesFailedRealizationsAndFractionsSumToOne) {
  RealizationProfile p;
  p.names = {"a", "b"};
  auto record = [](bool ok, double lo0, double hi0) {
    RealizationRecord r;
    r.converged = ok;
    r.estimate = Eigen::Vector2d(0.5 * (lo0 + hi0), 0.0);
    r.se = Eigen::Vector2d(1, 1);
    r.ci_lower = Eigen::Vector2d(lo0, -1);
    r.ci_upper = Eigen::Vector2d(hi0, 1);
    return r;
  };
  p.realizations = {record(true, 0.1, 0.3), record(true, -0.4, -0.2), record(false, 5, 6), record(true, -0.1, 0.1)};
  summarize(p);
  EXPECT_EQ(p.included, 3u);
  EXPECT_EQ(p.excluded, 1u);
  EXPECT_DOUBLE_EQ(p.fractions[0].positive, 1.0 / 3);
  EXPECT_DOUBLE_EQ(p.fractions[0].negative, 1.0 / 3);
  EXPECT_DOUBLE_EQ(p.fractions[0].not_significant, 1.0 / 3);
  EXPECT_EQ(p.fractions[1].not_significant, 1.0);
  EXPECT_NEAR(p.mean_estimate[0], (0.2 - 0.3 + 0.0) / 3, 1e-15);
}

TEST(RunProfile, IdentityIsDegenerate) {
  auto sim = simulate(strong_effect_config(1));
  ResampleConfig cfg;
  cfg.realizations = 5;
  cfg.master_seed = 3;
  auto pair = run_profile(sim.log, CovariateSpec::focal(), ConfusionModel::identity(), cfg);
  for (const RealizationProfile* p : {&pair.positive, &pair.negative}) {
    ASSERT_EQ(p->realizations.size(), 5u);
    EXPECT_EQ(p->included, 5u);
    for (const auto& r : p->realizations) {
      EXPECT_EQ(r.estimate, p->realizations[0].estimate);
      EXPECT_EQ(r.ci_lower, p->realizations[0].ci_lower);
      EXPECT_EQ(r.ci_upper, p->realizations[0].ci_upper);
    }
    for (const auto& f : p->fractions) {
      for (double v : {f.positive, f.negative, f.not_significant}) EXPECT_TRUE(v == 0.0 || v == 1.0);
      EXPECT_EQ(f.positive + f.negative + f.not_significant, 1.0);
    }
  }
}

TEST(RunProfile, SingleRealizationIsOneFit) {
  auto sim = simulate(strong_effect_config(2));
  ResampleConfig cfg;
  cfg.realizations = 1;
  cfg.master_seed = 11;
  const auto model = ConfusionModel::symmetric(0.8);
  auto pair = run_profile(sim.log, CovariateSpec::focal(), model, cfg);
  const auto& rec = pair.negative.realizations.at(0);
  EXPECT_EQ(rec.index, 1u);
  EXPECT_EQ(rec.seed, derive_seed(11, 1));
  auto relabelled = reclassify(sim.log, model, rec.seed);
  PartialLikelihood direct(std::make_shared<const WindowedData>(relabelled, CovariateSpec::focal()),
                           Sentiment::Negative);
  auto r = fit(direct);
  EXPECT_EQ(rec.converged, r.converged);
  EXPECT_EQ(rec.estimate, r.beta);
  EXPECT_EQ(rec.ci_upper, r.ci_upper);
}

TEST(RunProfile, ThreadCountDoesNotChangeResults) {
  auto sim = simulate(strong_effect_config(3));
  ResampleConfig cfg;
  cfg.realizations = 4;
  cfg.threads = 1;
  auto one = run_profile(sim.log, CovariateSpec::focal(), ConfusionModel::symmetric(0.9), cfg);
  cfg.threads = 3;
  auto three = run_profile(sim.log, CovariateSpec::focal(), ConfusionModel::symmetric(0.9), cfg);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(one.positive.realizations[k].estimate, three.positive.realizations[k].estimate);
    EXPECT_EQ(one.negative.realizations[k].ci_lower, three.negative.realizations[k].ci_lower);
  }
}

TEST(RunProfile, ZeroRealizationsRejected) {
  ResampleConfig cfg;
  cfg.realizations = 0;
  EXPECT_THROW(run_profile(parse_log_text("1 TWEET a POS\n"), CovariateSpec::focal(), ConfusionModel::identity(), cfg),
               InvalidArgument);
}

// More label noise should not make a true effect easier to detect. Checked
// as a trend over three noise levels, not per seed.
TEST(RunProfile, SignificanceDegradesWithNoise) {
  auto sim = simulate(strong_effect_config(4));
  ResampleConfig cfg;
  cfg.realizations = 12;
  cfg.master_seed = 5;
  std::vector<double> fraction;
  for (double diag : {0.95, 0.7, 0.4}) {
    auto pair = run_profile(sim.log, CovariateSpec::focal(), ConfusionModel::symmetric(diag), cfg);
    fraction.push_back(pair.positive.fractions[4].positive);
  }
  EXPECT_GE(fraction[0], fraction[1]);
  EXPECT_GE(fraction[1], fraction[2]);
  EXPECT_GT(fraction[0], fraction[2]);
}
