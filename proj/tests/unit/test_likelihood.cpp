#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "coxnet/error.hpp"
#include "coxnet/fitter.hpp"
#include "coxnet/likelihood.hpp"
#include "coxnet/simulator.hpp"
#include "oracle.hpp"

using namespace coxnet;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PartialLikelihood make_model(const EventLog& log, const CovariateSpec& spec, Sentiment s,
                             RiskSetMode mode = RiskSetMode::AllNodes, bool standardize = false,
                             double t_start = -kInf, double t_end = kInf) {
  auto data = std::make_shared<const WindowedData>(log, spec, t_start, t_end);
  RiskSetPolicy policy;
  policy.mode = mode;
  return PartialLikelihood(data, s, policy, standardize);
}

Eigen::VectorXd random_beta(std::size_t p, std::uint64_t seed, double bound = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::VectorXd b(static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = u(rng);
  return b;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Likelihood, SingleEventUniformHazard) {
  // Node 0 follows 1; 1 has tweeted positively; 2 and 3 are idle. Node 0 posts.
  auto log = parse_log_text(
      "0 FOLLOW n0 n1\n0 TWEET n2 NEU\n0 TWEET n3 UNR\n1 TWEET n1 POS\n5 TWEET n0 POS\n");
  const auto spec = CovariateSpec::focal();
  // Window holds only the final event; four nodes at risk.
  auto model = make_model(log, spec, Sentiment::Positive, RiskSetMode::AllNodes, false, 5, kInf);
  auto v = model.evaluate(Eigen::VectorXd::Zero(6));
  EXPECT_DOUBLE_EQ(v.loglik, -std::log(4.0));
  EXPECT_EQ(v.events, 1u);
  // s(node 0) has f1_pos = 1, f2_pos = 1; others are 0; mean over 4 nodes is 1/4.
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
  expected[0] = 1.0 - 0.25;
  expected[2] = 1.0 - 0.25;
  EXPECT_LE((v.gradient - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Likelihood, NoEventsInWindow) {
  auto log = parse_log_text("0 TWEET a NEG\n1 FOLLOW a b\n");
  auto v = make_model(log, CovariateSpec::focal(), Sentiment::Positive).evaluate(Eigen::VectorXd::Ones(6));
  EXPECT_EQ(v.loglik, 0.0);
  EXPECT_EQ(v.gradient, Eigen::VectorXd::Zero(6));
  EXPECT_EQ(v.events, 0u);
}

TEST(Likelihood, WrongBetaLengthThrows) {
  auto log = parse_log_text("0 TWEET a POS\n");
  auto model = make_model(log, CovariateSpec::focal(), Sentiment::Positive);
  EXPECT_THROW(model.evaluate(Eigen::VectorXd::Zero(5)), InvalidArgument);
}

TEST(Likelihood, FiveNodeTwentyEventMatchesBruteForce) {
  const auto spec = CovariateSpec::full();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto log = oracle::random_stream({5, 20, 0.3, 0.0}, seed);
    const auto beta = random_beta(spec.size(), seed, 0.3);
    for (Sentiment s : {Sentiment::Positive, Sentiment::Negative}) {
      auto got = make_model(log, spec, s).evaluate(beta);
      auto want = oracle::partial_likelihood(5, log.events(), spec, beta, s, RiskSetMode::AllNodes);
      EXPECT_EQ(got.events, want.events);
      EXPECT_LE(oracle::relative_error(got.loglik, want.loglik), 1e-12);
      EXPECT_LE(max_rel(got.gradient, want.gradient), 1e-12);
      EXPECT_LE(max_rel(got.hessian, want.hessian), 1e-12);
    }
  }
}

// Ties, both risk-set modes, and windows with a replayed history.
TEST(Likelihood, RandomInstancesMatchBruteForce) {
  const auto spec = CovariateSpec::full();
  int instance = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto log = oracle::random_stream({9, 90, 0.35, seed % 2 ? 2.0 : 0.0}, 500 + seed);
    const double last = log.events().back().time;
    const double t_start = seed % 3 == 0 ? last * 0.4 : -kInf;
    const double t_end = seed % 4 == 0 ? last * 0.8 : kInf;
    const auto beta = random_beta(spec.size(), seed, 0.2);
    for (RiskSetMode mode : {RiskSetMode::AllNodes, RiskSetMode::EverActive}) {
      for (Sentiment s : {Sentiment::Positive, Sentiment::Negative}) {
        ++instance;
        auto got = make_model(log, spec, s, mode, false, t_start, t_end).evaluate(beta);
        auto want = oracle::partial_likelihood(9, log.events(), spec, beta, s, mode, t_start, t_end);
        ASSERT_EQ(got.events, want.events) << "instance " << instance;
        EXPECT_LE(oracle::relative_error(got.loglik, want.loglik), 1e-11) << "instance " << instance;
        EXPECT_LE(max_rel(got.gradient, want.gradient), 1e-11) << "instance " << instance;
        EXPECT_LE(max_rel(got.hessian, want.hessian), 1e-11) << "instance " << instance;
      }
    }
  }
}

TEST(Likelihood, LoglikAgreesWithEvaluateBitwise) {
  const auto spec = CovariateSpec::focal();
  auto log = oracle::random_stream({15, 300, 0.3, 0.0}, 4);
  auto model = make_model(log, spec, Sentiment::Negative, RiskSetMode::EverActive);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto beta = random_beta(6, seed);
    EXPECT_EQ(model.loglik(beta), model.evaluate(beta).loglik);
  }
}

TEST(Likelihood, OneShotEqualsModel) {
  const auto spec = CovariateSpec::focal();
  auto log = oracle::random_stream({8, 80, 0.3, 0.0}, 8);
  const auto beta = random_beta(6, 1);
  RiskSetPolicy policy;
  auto a = log_partial_likelihood(log, spec, beta, policy, Sentiment::Positive);
  auto b = make_model(log, spec, Sentiment::Positive).evaluate(beta);
  EXPECT_EQ(a.loglik, b.loglik);
  EXPECT_EQ(a.gradient, b.gradient);
}

TEST(Likelihood, GradientAndHessianMatchFiniteDifferences) {
  const auto spec = CovariateSpec::focal();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto log = oracle::random_stream({10, 50, 0.3, 0.0}, 900 + seed);
    auto model = make_model(log, spec, Sentiment::Positive);
    const auto beta = random_beta(6, seed);
    const auto v = model.evaluate(beta);
    const double h = 1e-5;
    Eigen::VectorXd fd_grad(6);
    Eigen::MatrixXd fd_hess(6, 6);
    for (Eigen::Index k = 0; k < 6; ++k) {
      Eigen::VectorXd up = beta, down = beta;
      up[k] += h;
      down[k] -= h;
      fd_grad[k] = (model.loglik(up) - model.loglik(down)) / (2 * h);
      fd_hess.col(k) = (model.evaluate(up).gradient - model.evaluate(down).gradient) / (2 * h);
    }
    EXPECT_LE(max_rel(v.gradient, fd_grad), 1e-6) << "seed " << seed;
    EXPECT_LE(max_rel(v.hessian, fd_hess), 1e-4) << "seed " << seed;
    EXPECT_LE((v.hessian - v.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v.hessian);
    EXPECT_LE(eig.eigenvalues().maxCoeff(), 1e-8);
  }
}

// Centring leaves the likelihood unchanged; scaling reparametrizes beta.
TEST(Likelihood, StandardizationIsAnAffineReparametrization) {
  const auto spec = CovariateSpec::full();
  auto log = oracle::random_stream({12, 150, 0.3, 0.0}, 21);
  auto raw = make_model(log, spec, Sentiment::Positive);
  auto std_model = make_model(log, spec, Sentiment::Positive, RiskSetMode::AllNodes, true);
  ASSERT_TRUE(std_model.scaling().enabled);
  const auto& scale = std_model.scaling().scale;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto beta = random_beta(spec.size(), seed, 0.5);
    const Eigen::VectorXd raw_beta = beta.cwiseQuotient(scale);
    EXPECT_NEAR(std_model.loglik(beta), raw.loglik(raw_beta), 1e-9 * std::abs(raw.loglik(raw_beta)));
  }
}

TEST(Likelihood, TranslationInvarianceUnderConstantShift) {
  // A covariate shifted by the same constant for every node at every time
  // (here via the scaling centre) cannot change the likelihood.
  const auto spec = CovariateSpec::focal();
  auto log = oracle::random_stream({10, 120, 0.3, 0.0}, 31);
  auto plain = make_model(log, spec, Sentiment::Positive);
  auto centred = make_model(log, spec, Sentiment::Positive, RiskSetMode::AllNodes, true);
  const auto& c = centred.scaling();
  const auto beta = random_beta(6, 2);
  // beta' on standardized scale equivalent to beta on raw scale
  EXPECT_NEAR(centred.loglik(beta.cwiseProduct(c.scale)), plain.loglik(beta), 1e-9 * std::abs(plain.loglik(beta)));
}

// Without edges the focal covariates are pinned at zero, so moving NEG tweets
// between already-active nodes cannot touch the POS likelihood.
TEST(Likelihood, PositiveStreamIgnoresNegativeActors) {
  const auto spec = CovariateSpec::focal();
  std::vector<Event> base;
  for (NodeIndex i = 0; i < 6; ++i) base.push_back(Event::tweet(0, i, Label::Neutral));
  std::mt19937_64 rng(3);
  for (int k = 1; k <= 60; ++k) {
    base.push_back(Event::tweet(k, static_cast<NodeIndex>(rng() % 6), k % 2 ? Label::Positive : Label::Negative));
  }
  auto permuted = base;
  for (auto& e : permuted) {
    if (e.label == Label::Negative) e.actor = static_cast<NodeIndex>((e.actor + 1 + rng() % 5) % 6);
  }
  auto reg = numbered_registry(6);
  const auto beta = random_beta(6, 4);
  for (RiskSetMode mode : {RiskSetMode::AllNodes, RiskSetMode::EverActive}) {
    auto a = make_model(EventLog(reg, base), spec, Sentiment::Positive, mode).evaluate(beta);
    auto b = make_model(EventLog(reg, permuted), spec, Sentiment::Positive, mode).evaluate(beta);
    EXPECT_EQ(a.loglik, b.loglik);
  }
}

TEST(Likelihood, LargeLinearPredictorsStayFinite) {
  auto log = oracle::random_stream({10, 400, 0.3, 0.0}, 12);
  auto model = make_model(log, CovariateSpec::focal(), Sentiment::Positive);
  Eigen::VectorXd beta = Eigen::VectorXd::Constant(6, 40.0);
  auto v = model.evaluate(beta);
  EXPECT_TRUE(std::isfinite(v.loglik));
  EXPECT_TRUE(v.gradient.allFinite());
  EXPECT_TRUE(v.hessian.allFinite());
  EXPECT_LE(v.loglik, 0.0);
}

TEST(Likelihood, EverActiveExcludesNodesBeforeTheirFirstTweet) {
  // n0 posts first: nobody is active yet, so the event is skipped.
  auto log = parse_log_text("1 TWEET n0 POS\n2 TWEET n1 NEU\n3 TWEET n1 POS\n4 TWEET n2 UNR\n");
  auto model = make_model(log, CovariateSpec::focal(), Sentiment::Positive, RiskSetMode::EverActive);
  auto v = model.evaluate(Eigen::VectorXd::Zero(6));
  EXPECT_EQ(v.events, 1u);
  EXPECT_DOUBLE_EQ(v.loglik, -std::log(2.0));  // n0 and n1 at risk at t = 3
}

TEST(Baseline, UniformJumpAtZeroBeta) {
  auto log = parse_log_text("1 TWEET a NEU\n1 TWEET b NEU\n1 TWEET c NEU\n2 TWEET a POS\n");
  auto model = make_model(log, CovariateSpec::focal(), Sentiment::Positive);
  auto steps = model.cumulative_baseline(Eigen::VectorXd::Zero(6));
  ASSERT_EQ(steps.size(), 1u);
  EXPECT_EQ(steps[0].time, 2.0);
  EXPECT_DOUBLE_EQ(steps[0].cumulative_hazard, 1.0 / 3.0);
}

TEST(Baseline, NoEventsIsEmpty) {
  auto log = parse_log_text("1 TWEET a NEG\n");
  auto model = make_model(log, CovariateSpec::focal(), Sentiment::Positive);
  EXPECT_TRUE(model.cumulative_baseline(Eigen::VectorXd::Zero(6)).empty());
}

TEST(Baseline, RecoversConstantHazardFromSimulation) {
  SimConfig cfg;
  cfg.nodes = 150;
  cfg.network.p_edge = 0.04;
  cfg.beta_pos = Eigen::VectorXd::Zero(6);
  cfg.beta_pos << 0.2, 0.0, 0.0, 0.0, 0.5, 0.0;
  cfg.baseline_pos = 0.01;
  cfg.baseline_neg = 0.005;
  cfg.neutral_rate = 0.01;
  cfg.horizon = 1000;
  cfg.seed = 2024;
  auto sim = simulate(cfg);
  auto data = std::make_shared<const WindowedData>(sim.log, cfg.spec);
  PartialLikelihood model(data, Sentiment::Positive);
  auto result = fit(model);
  ASSERT_TRUE(result.converged);
  auto steps = model.cumulative_baseline(result.beta);
  ASSERT_FALSE(steps.empty());
  for (std::size_t k = 1; k < steps.size(); ++k) EXPECT_GE(steps[k].cumulative_hazard, steps[k - 1].cumulative_hazard);
  for (double t : {0.3 * cfg.horizon, 0.5 * cfg.horizon, 0.7 * cfg.horizon}) {
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double x, const BaselineStep& s) { return x < s.time; });
    ASSERT_NE(it, steps.begin());
    const double rate = std::prev(it)->cumulative_hazard / t;
    EXPECT_NEAR(rate, cfg.baseline_pos, 0.15 * cfg.baseline_pos) << "t = " << t;
  }
}
