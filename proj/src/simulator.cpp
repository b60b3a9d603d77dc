#include "coxnet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_set>

#include "coxnet/error.hpp"

namespace coxnet {

namespace {

constexpr double kMaxLinearPredictor = 700.0;

// Complete binary tree of partial sums over node rates; parents are
// recomputed from their children on every update.
class RateTree {
 public:
  explicit RateTree(std::size_t n) : leaves_(1) {
    while (leaves_ < std::max<std::size_t>(n, 1)) leaves_ *= 2;
    tree_.assign(2 * leaves_, 0.0);
  }

  void set(std::size_t i, double rate) {
    std::size_t k = leaves_ + i;
    tree_[k] = rate;
    for (k /= 2; k >= 1; k /= 2) tree_[k] = tree_[2 * k] + tree_[2 * k + 1];
  }

  double total() const { return tree_[1]; }
  double leaf(std::size_t i) const { return tree_[leaves_ + i]; }

  // Leaf whose cumulative interval contains u, u in [0, total).
  std::size_t find(double u) const {
    std::size_t k = 1;
    while (k < leaves_) {
      const double left = tree_[2 * k];
      if (u < left || tree_[2 * k + 1] <= 0.0) {
        k = 2 * k;
      } else {
        u -= left;
        k = 2 * k + 1;
      }
    }
    return k - leaves_;
  }

 private:
  std::size_t leaves_;
  std::vector<double> tree_;
};

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t edge_key(NodeIndex a, NodeIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(master + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

void SimConfig::validate() const {
  if (nodes == 0) throw InvalidArgument("simulation needs at least one node");
  if (nodes > std::numeric_limits<NodeIndex>::max()) throw InvalidArgument("too many nodes");
  auto rate_ok = [](double r) { return std::isfinite(r) && r >= 0.0; };
  if (!rate_ok(baseline_pos) || !rate_ok(baseline_neg) || !rate_ok(neutral_rate) ||
      !rate_ok(follow_rate)) {
    throw InvalidArgument("hazard rates must be finite and non-negative");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("horizon must be positive");
  const auto p = static_cast<Eigen::Index>(spec.size());
  if (beta_pos.size() != 0 && beta_pos.size() != p) {
    throw InvalidArgument("beta_pos has length " + std::to_string(beta_pos.size()) +
                          ", covariate spec has " + std::to_string(p));
  }
  if (beta_neg.size() != 0 && beta_neg.size() != p) {
    throw InvalidArgument("beta_neg has length " + std::to_string(beta_neg.size()) +
                          ", covariate spec has " + std::to_string(p));
  }
  if ((beta_pos.size() && !beta_pos.allFinite()) || (beta_neg.size() && !beta_neg.allFinite())) {
    throw InvalidArgument("coefficients must be finite");
  }
  if (network.model == NetworkModel::ErdosRenyi) {
    auto prob_ok = [](double q) { return q >= 0.0 && q <= 1.0; };
    if (!prob_ok(network.p_edge) || !prob_ok(network.p_reciprocal)) {
      throw InvalidArgument("edge probabilities must lie in [0, 1]");
    }
  } else {
    for (const auto& [a, b] : network.edges) {
      if (a >= nodes || b >= nodes) throw InvalidArgument("edge list references an unknown node");
      if (a == b) throw InvalidArgument("edge list contains a self-loop");
    }
  }
}

std::shared_ptr<const NodeRegistry> numbered_registry(std::size_t nodes) {
  auto registry = std::make_shared<NodeRegistry>();
  for (std::size_t i = 0; i < nodes; ++i) registry->intern("u" + std::to_string(i));
  return registry;
}

std::vector<Event> make_network(std::size_t nodes, const NetworkGenerator& generator,
                                std::uint64_t seed) {
  std::vector<Event> events;
  std::unordered_set<std::uint64_t> present;
  auto add = [&](NodeIndex a, NodeIndex b) {
    if (present.insert(edge_key(a, b)).second) events.push_back(Event::follow(0.0, a, b));
  };
  if (generator.model == NetworkModel::Given) {
    for (const auto& [a, b] : generator.edges) add(a, b);
    return events;
  }
  if (nodes < 2 || generator.p_edge <= 0.0) return events;

  std::mt19937_64 rng(seed);
  const std::uint64_t per_row = nodes - 1;
  const std::uint64_t pairs = static_cast<std::uint64_t>(nodes) * per_row;
  std::vector<std::pair<NodeIndex, NodeIndex>> first_stage;
  auto pair_at = [&](std::uint64_t m) {
    const auto i = static_cast<NodeIndex>(m / per_row);
    auto j = static_cast<NodeIndex>(m % per_row);
    if (j >= i) ++j;
    return std::pair<NodeIndex, NodeIndex>{i, j};
  };
  if (generator.p_edge >= 1.0) {
    for (std::uint64_t m = 0; m < pairs; ++m) first_stage.push_back(pair_at(m));
  } else {
    std::geometric_distribution<std::uint64_t> gap(generator.p_edge);
    for (std::uint64_t m = gap(rng); m < pairs; m += 1 + gap(rng)) first_stage.push_back(pair_at(m));
  }
  for (const auto& [a, b] : first_stage) add(a, b);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& [a, b] : first_stage) {
    if (unit(rng) < generator.p_reciprocal) add(b, a);
  }
  return events;
}

SimOutput simulate(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.nodes;
  const auto p = static_cast<Eigen::Index>(config.spec.size());
  const Eigen::VectorXd beta_pos = config.beta_pos.size() ? config.beta_pos : Eigen::VectorXd::Zero(p);
  const Eigen::VectorXd beta_neg = config.beta_neg.size() ? config.beta_neg : Eigen::VectorXd::Zero(p);

  SimOutput out;
  out.config = config;
  std::vector<Event> events = make_network(n, config.network, derive_seed(config.seed, 0));
  out.follow_events = events.size();

  IncrementalCovariates cov(n, config.spec);
  for (const Event& e : events) cov.apply(e);

  std::vector<double> rate_pos(n), rate_neg(n);
  RateTree tree(n);
  auto refresh = [&](NodeIndex i) {
    auto row = cov.row(i);
    const Eigen::Map<const Eigen::VectorXd> x(row.data(), p);
    const double eta_pos = beta_pos.dot(x);
    const double eta_neg = beta_neg.dot(x);
    if (!(std::abs(eta_pos) < kMaxLinearPredictor) || !(std::abs(eta_neg) < kMaxLinearPredictor)) {
      throw NumericalError("intensity overflow for node u" + std::to_string(i) +
                           " (linear predictors " + std::to_string(eta_pos) + ", " +
                           std::to_string(eta_neg) + ")");
    }
    rate_pos[i] = config.baseline_pos * std::exp(eta_pos);
    rate_neg[i] = config.baseline_neg * std::exp(eta_neg);
    tree.set(i, rate_pos[i] + rate_neg[i] + config.neutral_rate);
  };
  for (NodeIndex i = 0; i < n; ++i) refresh(i);

  std::mt19937_64 rng(derive_seed(config.seed, 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<NodeIndex> any_node(0, static_cast<NodeIndex>(n - 1));
  double t = 0.0;
  while (true) {
    const double total = tree.total() + config.follow_rate;
    if (!(total > 0.0)) break;
    t += std::exponential_distribution<double>(total)(rng);
    if (t > config.horizon) break;

    Event e;
    const double u = unit(rng) * total;
    if (u < config.follow_rate) {
      if (n < 2 || cov.state().edge_count() >= n * (n - 1)) continue;
      NodeIndex a = 0, b = 0;
      do {
        a = any_node(rng);
        b = any_node(rng);
      } while (a == b || cov.state().follows(a, b));
      e = Event::follow(t, a, b);
      ++out.follow_events;
    } else {
      const double v = u - config.follow_rate;
      auto i = static_cast<NodeIndex>(tree.find(std::min(v, std::nextafter(tree.total(), 0.0))));
      if (i >= n || tree.leaf(i) <= 0.0) continue;
      const double w = unit(rng) * tree.leaf(i);
      Label label = Label::Neutral;
      if (w < rate_pos[i]) {
        label = Label::Positive;
      } else if (w < rate_pos[i] + rate_neg[i]) {
        label = Label::Negative;
      }
      e = Event::tweet(t, i, label);
      ++out.label_counts[static_cast<std::size_t>(label)];
    }
    events.push_back(e);
    for (NodeIndex i : cov.apply(e)) refresh(i);
  }

  out.log = EventLog(numbered_registry(n), std::move(events));
  return out;
}

}  // namespace coxnet
