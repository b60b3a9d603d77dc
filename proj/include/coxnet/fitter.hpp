#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "coxnet/likelihood.hpp"

namespace coxnet {

struct FitConfig {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;  // on the max-norm of the score
  int step_halving_limit = 30;
  double ridge = 1e-8;               // added to -H on factorization failure
  double confidence_level = 0.95;
  double divergence_bound = 50.0;    // |beta_k| beyond this is reported as separation

  void validate() const;
};

struct FitResult {
  std::vector<std::string> names;
  Sentiment sentiment = Sentiment::Positive;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  double loglik = 0.0;
  double gradient_norm = 0.0;  // max-norm at the returned beta
  int iterations = 0;          // accepted Newton steps
  bool converged = false;
  bool ridge_applied = false;  // information was singular somewhere
  bool separation = false;     // some |beta_k| exceeded the divergence bound
  std::vector<double> loglik_trace;  // initial value, then one per accepted step
  std::size_t events = 0;
  Eigen::MatrixXd hessian;     // at the returned beta

  // configuration echo
  FitConfig config;
  RiskSetPolicy policy;
  CovariateScaling scaling;
};

enum class Significance : std::uint8_t { Positive, Negative, NotSignificant };
std::string_view to_string(Significance s);  // SIG_POS, SIG_NEG, NOT_SIG

// Newton-Raphson with step halving on the log partial likelihood. Standard
// errors come from the inverse observed information at the returned beta.
FitResult fit(const PartialLikelihood& model, const FitConfig& config = {},
              const Eigen::VectorXd& beta_init = Eigen::VectorXd());

// Two-sided normal quantile for the given confidence level.
double wald_critical_value(double confidence_level);

std::vector<Significance> wald_significance(const FitResult& result);
Significance classify(double ci_lower, double ci_upper);

}  // namespace coxnet
