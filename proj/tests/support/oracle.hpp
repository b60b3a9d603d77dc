#pragma once
// Test-only reference implementations. Nothing here reuses library code
// beyond the plain data types: adjacency is a dense matrix rebuilt from the
// raw events, and every covariate is evaluated straight from its definition.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "coxnet/covariates.hpp"
#include "coxnet/event_stream.hpp"
#include "coxnet/likelihood.hpp"

namespace oracle {

// Network history rebuilt from scratch: adj(a, b) = 1 when a follows b.
struct DenseState {
  explicit DenseState(int n);
  void apply(const coxnet::Event& e);

  int n;
  Eigen::MatrixXd adj;
  std::vector<long> pos, neg, neu, unr;
};

DenseState replay(int n, const std::vector<coxnet::Event>& events, double before_time);

// Covariate matrix (n x p) for every node of `state`, one column per spec entry.
Eigen::MatrixXd covariates(const DenseState& state, const coxnet::CovariateSpec& spec);

struct Likelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  std::size_t events = 0;
};

// Breslow log partial likelihood with every covariate recomputed from the raw
// events at every distinct event time.
Likelihood partial_likelihood(int n, const std::vector<coxnet::Event>& events,
                              const coxnet::CovariateSpec& spec, const Eigen::VectorXd& beta,
                              coxnet::Sentiment sentiment, coxnet::RiskSetMode mode,
                              double t_start = -INFINITY, double t_end = INFINITY);

struct StreamShape {
  int nodes = 10;
  int events = 50;
  double follow_share = 0.3;
  double tie_grid = 0.0;  // when > 0, times are rounded to this grid to force ties
};

// Random mixed TWEET/FOLLOW stream over u0..u{n-1}, time-sorted, no self loops.
coxnet::EventLog random_stream(const StreamShape& shape, std::uint64_t seed);

// Relative difference with an exact-zero convention.
double relative_error(double a, double b);

}  // namespace oracle
