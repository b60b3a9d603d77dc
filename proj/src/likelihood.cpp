#include "coxnet/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coxnet/error.hpp"

namespace coxnet {

namespace {

// Neumaier-compensated running sum.
struct Compensated {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Linear predictors more than this far above the current shift trigger a
// full rebuild with a new shift, so exp() never overflows.
constexpr double kShiftHeadroom = 30.0;
// Rebuild when S0 falls this far below its value at the last rebuild.
constexpr double kCancellationRatio = 1e-8;

// Running sums over the risk set:
//   S0 = sum_k exp(eta_k - shift), S1 = sum_k exp(.) x_k, S2 = sum_k exp(.) x_k x_k^T
// maintained under membership changes and row updates. Only the lower
// triangle of S2 is stored.
class RiskSums {
 public:
  RiskSums(std::size_t n, std::size_t p, int order, const Eigen::VectorXd& beta,
           const CovariateScaling& scaling)
      : n_(n), p_(p), order_(order), beta_(beta), scaling_(scaling),
        member_(n, 0), x_(n * p, 0.0), eta_(n, 0.0),
        s1_(order >= 1 ? p : 0), s2_(order >= 2 ? p * (p + 1) / 2 : 0) {}

  bool contains(NodeIndex i) const { return member_[i] != 0; }
  std::size_t size() const { return members_; }
  double eta(NodeIndex i) const { return eta_[i]; }
  const double* x(NodeIndex i) const { return x_.data() + static_cast<std::size_t>(i) * p_; }

  void load_initial(NodeIndex i, std::span<const double> row) {
    member_[i] = 1;
    ++members_;
    load(i, row);
  }

  void insert(NodeIndex i, std::span<const double> row) {
    member_[i] = 1;
    ++members_;
    load(i, row);
    if (eta_[i] > shift_ + kShiftHeadroom) {
      rebuild();
    } else {
      contribute(i, 1.0);
      after_update();
    }
  }

  void update(NodeIndex i, std::span<const double> row) {
    contribute(i, -1.0);
    load(i, row);
    if (eta_[i] > shift_ + kShiftHeadroom) {
      rebuild();
    } else {
      contribute(i, 1.0);
      after_update();
    }
  }

  void rebuild() {
    shift_ = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!member_[i]) continue;
      if (first || eta_[i] > shift_) shift_ = eta_[i];
      first = false;
    }
    s0_ = {};
    std::fill(s1_.begin(), s1_.end(), Compensated{});
    std::fill(s2_.begin(), s2_.end(), Compensated{});
    for (std::size_t i = 0; i < n_; ++i) {
      if (member_[i]) contribute(static_cast<NodeIndex>(i), 1.0);
    }
    s0_at_rebuild_ = s0_.value();
    updates_since_rebuild_ = 0;
  }

  double log_s0() const { return std::log(s0_.value()) + shift_; }
  double s0() const { return s0_.value(); }
  double shift() const { return shift_; }

  // mean = S1/S0; second = S2/S0 (full symmetric).
  void moments(Eigen::VectorXd& mean, Eigen::MatrixXd* second) const {
    const double inv = 1.0 / s0_.value();
    for (std::size_t a = 0; a < p_; ++a) mean[static_cast<Eigen::Index>(a)] = s1_[a].value() * inv;
    if (second) {
      std::size_t idx = 0;
      for (std::size_t a = 0; a < p_; ++a) {
        for (std::size_t b = 0; b <= a; ++b, ++idx) {
          const double v = s2_[idx].value() * inv;
          (*second)(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
          (*second)(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
        }
      }
    }
  }

 private:
  void load(NodeIndex i, std::span<const double> row) {
    double* xi = x_.data() + static_cast<std::size_t>(i) * p_;
    double eta = 0.0;
    for (std::size_t a = 0; a < p_; ++a) {
      double v = row[a];
      if (std::isnan(v)) {
        throw NumericalError("NaN covariate for node " + std::to_string(i));
      }
      if (scaling_.enabled) {
        v = (v - scaling_.center[static_cast<Eigen::Index>(a)]) /
            scaling_.scale[static_cast<Eigen::Index>(a)];
      }
      xi[a] = v;
      eta += beta_[static_cast<Eigen::Index>(a)] * v;
    }
    if (!std::isfinite(eta)) {
      throw NumericalError("non-finite linear predictor for node " + std::to_string(i));
    }
    eta_[i] = eta;
  }

  void contribute(NodeIndex i, double sign) {
    const double w = sign * std::exp(eta_[i] - shift_);
    s0_.add(w);
    if (order_ < 1) return;
    const double* xi = x(i);
    for (std::size_t a = 0; a < p_; ++a) s1_[a].add(w * xi[a]);
    if (order_ < 2) return;
    std::size_t idx = 0;
    for (std::size_t a = 0; a < p_; ++a) {
      const double wa = w * xi[a];
      for (std::size_t b = 0; b <= a; ++b, ++idx) s2_[idx].add(wa * xi[b]);
    }
  }

  void after_update() {
    ++updates_since_rebuild_;
    if (s0_.value() < kCancellationRatio * s0_at_rebuild_ ||
        updates_since_rebuild_ > 4 * n_ + 1024) {
      rebuild();
    }
  }

  std::size_t n_;
  std::size_t p_;
  int order_;
  const Eigen::VectorXd& beta_;
  const CovariateScaling& scaling_;
  std::vector<std::uint8_t> member_;
  std::size_t members_ = 0;
  std::vector<double> x_;
  std::vector<double> eta_;
  double shift_ = 0.0;
  Compensated s0_;
  std::vector<Compensated> s1_;
  std::vector<Compensated> s2_;
  double s0_at_rebuild_ = 0.0;
  std::size_t updates_since_rebuild_ = 0;
};

}  // namespace

std::string_view to_string(RiskSetMode mode) {
  return mode == RiskSetMode::AllNodes ? "all_nodes" : "ever_active";
}

std::string_view to_string(TieMethod) { return "breslow"; }

RiskSetMode parse_risk_set_mode(std::string_view text) {
  if (text == "all_nodes" || text == "all") return RiskSetMode::AllNodes;
  if (text == "ever_active") return RiskSetMode::EverActive;
  throw InvalidArgument("unknown risk set mode '" + std::string(text) + "'");
}

WindowedData::WindowedData(const EventLog& log, CovariateSpec spec, double t_start, double t_end)
    : checkpoint_(log.node_count(), std::move(spec)), t_start_(t_start), t_end_(t_end) {
  WindowedLog parts = window(log, t_start, t_end);
  for (const Event& e : parts.history.events()) checkpoint_.apply(e);
  analysis_ = parts.analysis.events();
}

PartialLikelihood::PartialLikelihood(std::shared_ptr<const WindowedData> data, Sentiment sentiment,
                                     RiskSetPolicy policy, bool standardize)
    : data_(std::move(data)), sentiment_(sentiment), policy_(policy) {
  if (!data_) throw InvalidArgument("partial likelihood requires windowed data");
  const auto p = static_cast<Eigen::Index>(dimension());
  scaling_.center = Eigen::VectorXd::Zero(p);
  scaling_.scale = Eigen::VectorXd::Ones(p);

  // Contributing events: membership only depends on related-tweet history.
  const Label target = sentiment_label(sentiment_);
  const NetworkState& start = data_->checkpoint().state();
  std::vector<std::uint8_t> active(start.size(), 0);
  for (NodeIndex i = 0; i < start.size(); ++i) active[i] = start.counters(i).all() > 0;
  const auto& events = data_->analysis();
  for (std::size_t g = 0; g < events.size();) {
    std::size_t h = g;
    while (h < events.size() && events[h].time == events[g].time) {
      const Event& e = events[h];
      if (e.kind == EventKind::Tweet && e.label == target &&
          (policy_.mode == RiskSetMode::AllNodes || active[e.actor])) {
        ++event_count_;
      }
      ++h;
    }
    for (; g < h; ++g) {
      const Event& e = events[g];
      if (e.kind == EventKind::Tweet && e.label != Label::Unrelated) active[e.actor] = 1;
    }
  }

  if (standardize) {
    Eigen::VectorXd sum_x = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sum_x2 = Eigen::VectorXd::Zero(p);
    double count = 0.0;
    Eigen::VectorXd mean(p);
    Eigen::MatrixXd second(p, p);
    replay<2>(Eigen::VectorXd::Zero(p), [&](double, const std::vector<NodeIndex>&, const RiskSums& sums) {
      sums.moments(mean, &second);
      const double m = static_cast<double>(sums.size());
      sum_x += m * mean;
      sum_x2 += m * second.diagonal();
      count += m;
    });
    if (count > 0.0) {
      scaling_.center = sum_x / count;
      for (Eigen::Index a = 0; a < p; ++a) {
        const double var = sum_x2[a] / count - scaling_.center[a] * scaling_.center[a];
        scaling_.scale[a] = var > 1e-24 ? std::sqrt(var) : 1.0;
      }
    }
    scaling_.enabled = true;
  }
}

template <int Order, class OnGroup>
void PartialLikelihood::replay(const Eigen::VectorXd& beta, OnGroup&& on_group) const {
  if (static_cast<std::size_t>(beta.size()) != dimension()) {
    throw InvalidArgument("coefficient vector has length " + std::to_string(beta.size()) +
                          ", expected " + std::to_string(dimension()));
  }
  IncrementalCovariates cov = data_->checkpoint();
  const std::size_t n = cov.node_count();
  RiskSums sums(n, dimension(), Order, beta, scaling_);
  for (NodeIndex i = 0; i < n; ++i) {
    if (policy_.mode == RiskSetMode::AllNodes || cov.state().counters(i).all() > 0) {
      sums.load_initial(i, cov.row(i));
    }
  }
  sums.rebuild();

  const Label target = sentiment_label(sentiment_);
  const auto& events = data_->analysis();
  std::vector<NodeIndex> actors;
  for (std::size_t g = 0; g < events.size();) {
    const double t = events[g].time;
    std::size_t h = g;
    actors.clear();
    while (h < events.size() && events[h].time == t) {
      const Event& e = events[h];
      if (e.kind == EventKind::Tweet && e.label == target && sums.contains(e.actor)) {
        actors.push_back(e.actor);
      }
      ++h;
    }
    if (!actors.empty()) {
      if (sums.size() == 0 || !(sums.s0() > 0.0)) {
        throw NumericalError("empty risk set at event time " + std::to_string(t));
      }
      on_group(t, actors, static_cast<const RiskSums&>(sums));
    }
    for (; g < h; ++g) {
      const Event& e = events[g];
      for (NodeIndex i : cov.apply(e)) {
        if (sums.contains(i)) sums.update(i, cov.row(i));
      }
      if (policy_.mode == RiskSetMode::EverActive && e.kind == EventKind::Tweet &&
          e.label != Label::Unrelated && !sums.contains(e.actor)) {
        sums.insert(e.actor, cov.row(e.actor));
      }
    }
  }
}

LikelihoodValue PartialLikelihood::evaluate(const Eigen::VectorXd& beta) const {
  const auto p = static_cast<Eigen::Index>(dimension());
  LikelihoodValue out;
  out.gradient = Eigen::VectorXd::Zero(p);
  out.hessian = Eigen::MatrixXd::Zero(p, p);
  Compensated loglik;
  std::vector<Compensated> gradient(static_cast<std::size_t>(p));
  Eigen::VectorXd mean(p);
  Eigen::MatrixXd second(p, p);
  replay<2>(beta, [&](double, const std::vector<NodeIndex>& actors, const RiskSums& sums) {
    const double d = static_cast<double>(actors.size());
    sums.moments(mean, &second);
    for (NodeIndex a : actors) {
      loglik.add(sums.eta(a));
      const double* x = sums.x(a);
      for (Eigen::Index k = 0; k < p; ++k) gradient[static_cast<std::size_t>(k)].add(x[k]);
    }
    loglik.add(-d * sums.log_s0());
    for (Eigen::Index k = 0; k < p; ++k) gradient[static_cast<std::size_t>(k)].add(-d * mean[k]);
    out.hessian.noalias() -= d * (second - mean * mean.transpose());
    out.events += actors.size();
  });
  out.loglik = loglik.value();
  for (Eigen::Index k = 0; k < p; ++k) out.gradient[k] = gradient[static_cast<std::size_t>(k)].value();
  // Exact symmetry.
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

double PartialLikelihood::loglik(const Eigen::VectorXd& beta) const {
  Compensated loglik;
  replay<0>(beta, [&](double, const std::vector<NodeIndex>& actors, const RiskSums& sums) {
    for (NodeIndex a : actors) loglik.add(sums.eta(a));
    loglik.add(-static_cast<double>(actors.size()) * sums.log_s0());
  });
  return loglik.value();
}

std::vector<BaselineStep> PartialLikelihood::cumulative_baseline(const Eigen::VectorXd& beta) const {
  std::vector<BaselineStep> steps;
  Compensated total;
  replay<0>(beta, [&](double t, const std::vector<NodeIndex>& actors, const RiskSums& sums) {
    total.add(static_cast<double>(actors.size()) * std::exp(-sums.log_s0()));
    steps.push_back({t, total.value()});
  });
  return steps;
}

LikelihoodValue log_partial_likelihood(const EventLog& log, const CovariateSpec& spec,
                                       const Eigen::VectorXd& beta, RiskSetPolicy policy,
                                       Sentiment sentiment) {
  auto data = std::make_shared<const WindowedData>(log, spec);
  return PartialLikelihood(std::move(data), sentiment, policy).evaluate(beta);
}

}  // namespace coxnet
