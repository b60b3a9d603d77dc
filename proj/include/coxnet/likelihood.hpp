#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <string_view>
#include <vector>

#include "coxnet/covariates.hpp"
#include "coxnet/event_stream.hpp"

namespace coxnet {

enum class RiskSetMode : std::uint8_t {
  AllNodes,    // every registered node is at risk at every event time
  EverActive,  // nodes with at least one related tweet strictly before t
};
enum class TieMethod : std::uint8_t { Breslow };

std::string_view to_string(RiskSetMode mode);
std::string_view to_string(TieMethod ties);
RiskSetMode parse_risk_set_mode(std::string_view text);

struct RiskSetPolicy {
  RiskSetMode mode = RiskSetMode::AllNodes;
  TieMethod ties = TieMethod::Breslow;
};

struct LikelihoodValue {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  std::size_t events = 0;  // events contributing a numerator term
};

// Affine map x' = (x - center) / scale applied to every covariate row before
// it enters the likelihood. Identity unless standardization was requested.
struct CovariateScaling {
  bool enabled = false;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

struct BaselineStep {
  double time = 0.0;
  double cumulative_hazard = 0.0;
};

// The event history before the analysis window, replayed once into a
// covariate checkpoint, plus the events inside the window. Shared read-only
// by the positive and negative models.
class WindowedData {
 public:
  WindowedData(const EventLog& log, CovariateSpec spec,
               double t_start = -std::numeric_limits<double>::infinity(),
               double t_end = std::numeric_limits<double>::infinity());

  const IncrementalCovariates& checkpoint() const noexcept { return checkpoint_; }
  const std::vector<Event>& analysis() const noexcept { return analysis_; }
  const CovariateSpec& spec() const noexcept { return checkpoint_.spec(); }
  std::size_t node_count() const noexcept { return checkpoint_.node_count(); }
  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }

 private:
  IncrementalCovariates checkpoint_;
  std::vector<Event> analysis_;
  double t_start_;
  double t_end_;
};

// Cox log partial likelihood of one sentiment stream over the window, with
// Breslow handling of tied event times. Each event's risk-set sum is taken
// over covariates from strictly before the event time.
class PartialLikelihood {
 public:
  PartialLikelihood(std::shared_ptr<const WindowedData> data, Sentiment sentiment,
                    RiskSetPolicy policy = {}, bool standardize = false);

  LikelihoodValue evaluate(const Eigen::VectorXd& beta) const;
  double loglik(const Eigen::VectorXd& beta) const;

  // Breslow estimate of the cumulative baseline hazard, one step per event time.
  std::vector<BaselineStep> cumulative_baseline(const Eigen::VectorXd& beta) const;

  std::size_t dimension() const noexcept { return data_->spec().size(); }
  std::size_t event_count() const noexcept { return event_count_; }
  Sentiment sentiment() const noexcept { return sentiment_; }
  const RiskSetPolicy& policy() const noexcept { return policy_; }
  const CovariateScaling& scaling() const noexcept { return scaling_; }
  const WindowedData& data() const noexcept { return *data_; }

 private:
  template <int Order, class OnGroup>
  void replay(const Eigen::VectorXd& beta, OnGroup&& on_group) const;

  std::shared_ptr<const WindowedData> data_;
  Sentiment sentiment_;
  RiskSetPolicy policy_;
  CovariateScaling scaling_;
  std::size_t event_count_ = 0;
};

// One-shot evaluation over a whole (already windowed) log.
LikelihoodValue log_partial_likelihood(const EventLog& log, const CovariateSpec& spec,
                                       const Eigen::VectorXd& beta, RiskSetPolicy policy,
                                       Sentiment sentiment);

}  // namespace coxnet
