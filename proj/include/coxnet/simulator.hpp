#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "coxnet/covariates.hpp"
#include "coxnet/event_stream.hpp"

namespace coxnet {

// SplitMix64 finalizer applied to master + (counter + 1) * golden-ratio
// increment. Counter 0 seeds the network draw, 1 the event process, and
// k >= 1 the k-th resampling realization.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

enum class NetworkModel : std::uint8_t { ErdosRenyi, Given };

struct NetworkGenerator {
  NetworkModel model = NetworkModel::ErdosRenyi;
  double p_edge = 0.05;
  double p_reciprocal = 0.5;
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;  // (follower, followee) for Given
};

struct SimConfig {
  std::size_t nodes = 100;
  NetworkGenerator network;
  CovariateSpec spec = CovariateSpec::focal();
  Eigen::VectorXd beta_pos;  // empty means all zeros
  Eigen::VectorXd beta_neg;
  double baseline_pos = 1e-3;  // constant lambda_0 for each stream
  double baseline_neg = 1e-3;
  double neutral_rate = 1e-3;  // per node
  double follow_rate = 0.0;    // network-wide rate of new FOLLOW edges
  double horizon = 1000.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimOutput {
  EventLog log;
  SimConfig config;
  std::array<std::size_t, kLabelCount> label_counts{};
  std::size_t follow_events = 0;
};

// FOLLOW events at time 0. Under Erdos-Renyi every ordered pair gets an edge
// with p_edge, then each realized edge gets its reverse with p_reciprocal.
std::vector<Event> make_network(std::size_t nodes, const NetworkGenerator& generator,
                                std::uint64_t seed);

// Samples the multivariate counting process whose positive and negative
// intensities are lambda_0^s * exp(beta^s . x_i(t-)). Covariates only change
// at events, so the next event is an exact draw from competing exponentials.
SimOutput simulate(const SimConfig& config);

// Registry holding u0 .. u{n-1}.
std::shared_ptr<const NodeRegistry> numbered_registry(std::size_t nodes);

}  // namespace coxnet
