#include "coxnet/fitter.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>

#include "coxnet/error.hpp"

namespace coxnet {

namespace {

// Factorizes the observed information -H, adding a ridge to the diagonal
// (growing by 10x) until the factorization is positive definite.
struct Information {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool ridged = false;
};

bool positive_definite(const Eigen::LDLT<Eigen::MatrixXd>& ldlt, double scale) {
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.vectorD();
  const double floor = 1e-13 * std::max(scale, 1e-300);
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!(d[k] > floor)) return false;
  }
  return true;
}

Information factorize(const Eigen::MatrixXd& hessian, double ridge) {
  Information info;
  Eigen::MatrixXd neg = -hessian;
  const double scale = neg.diagonal().cwiseAbs().maxCoeff();
  info.ldlt.compute(neg);
  if (positive_definite(info.ldlt, scale)) return info;
  info.ridged = true;
  double r = ridge;
  for (int attempt = 0; attempt < 40; ++attempt, r *= 10.0) {
    Eigen::MatrixXd ridged = neg;
    ridged.diagonal().array() += r;
    info.ldlt.compute(ridged);
    if (positive_definite(info.ldlt, std::max(scale, r))) return info;
  }
  throw NumericalError("observed information could not be regularized");
}

}  // namespace

void FitConfig::validate() const {
  if (max_iterations <= 0) throw InvalidArgument("max_iterations must be positive");
  if (!(gradient_tolerance > 0.0)) throw InvalidArgument("gradient tolerance must be positive");
  if (step_halving_limit <= 0) throw InvalidArgument("step-halving limit must be positive");
  if (!(ridge > 0.0)) throw InvalidArgument("ridge must be positive");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw InvalidArgument("confidence level must lie in (0, 1)");
  }
  if (!(divergence_bound > 0.0)) throw InvalidArgument("divergence bound must be positive");
}

std::string_view to_string(Significance s) {
  switch (s) {
    case Significance::Positive: return "SIG_POS";
    case Significance::Negative: return "SIG_NEG";
    default: return "NOT_SIG";
  }
}

double wald_critical_value(double confidence_level) {
  boost::math::normal standard;
  return boost::math::quantile(standard, 0.5 * (1.0 + confidence_level));
}

Significance classify(double ci_lower, double ci_upper) {
  if (ci_lower > 0.0) return Significance::Positive;
  if (ci_upper < 0.0) return Significance::Negative;
  return Significance::NotSignificant;
}

std::vector<Significance> wald_significance(const FitResult& result) {
  std::vector<Significance> out;
  out.reserve(static_cast<std::size_t>(result.beta.size()));
  for (Eigen::Index k = 0; k < result.beta.size(); ++k) {
    out.push_back(classify(result.ci_lower[k], result.ci_upper[k]));
  }
  return out;
}

FitResult fit(const PartialLikelihood& model, const FitConfig& config,
              const Eigen::VectorXd& beta_init) {
  config.validate();
  const auto p = static_cast<Eigen::Index>(model.dimension());
  FitResult result;
  result.names = model.data().spec().names();
  result.sentiment = model.sentiment();
  result.config = config;
  result.policy = model.policy();
  result.scaling = model.scaling();

  Eigen::VectorXd beta = beta_init.size() == 0 ? Eigen::VectorXd::Zero(p) : beta_init;
  if (beta.size() != p) throw InvalidArgument("initial coefficient vector has the wrong length");
  if (!beta.allFinite()) throw InvalidArgument("initial coefficient vector must be finite");

  LikelihoodValue current = model.evaluate(beta);
  result.loglik_trace.push_back(current.loglik);

  while (true) {
    const double gnorm = current.gradient.size() ? current.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (gnorm < config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= config.max_iterations) break;

    Information info = factorize(current.hessian, config.ridge);
    result.ridge_applied = result.ridge_applied || info.ridged;
    const Eigen::VectorXd step = info.ldlt.solve(current.gradient);

    bool accepted = false;
    double scale = 1.0;
    for (int halving = 0; halving <= config.step_halving_limit; ++halving, scale *= 0.5) {
      Eigen::VectorXd candidate = beta + scale * step;
      const double value = model.loglik(candidate);
      if (std::isfinite(value) && value >= current.loglik) {
        beta = std::move(candidate);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    current = model.evaluate(beta);
    ++result.iterations;
    result.loglik_trace.push_back(current.loglik);
    if (beta.cwiseAbs().maxCoeff() > config.divergence_bound) {
      result.separation = true;
      break;
    }
  }

  result.beta = beta;
  result.loglik = current.loglik;
  result.events = current.events;
  result.hessian = current.hessian;
  result.gradient_norm = current.gradient.size() ? current.gradient.cwiseAbs().maxCoeff() : 0.0;
  if (result.separation) result.converged = false;

  Information info = factorize(current.hessian, config.ridge);
  result.ridge_applied = result.ridge_applied || info.ridged;
  const Eigen::MatrixXd covariance = info.ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  const double z = wald_critical_value(config.confidence_level);
  result.se = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  result.ci_lower = beta - z * result.se;
  result.ci_upper = beta + z * result.se;
  return result;
}

}  // namespace coxnet
