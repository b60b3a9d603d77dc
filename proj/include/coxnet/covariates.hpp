#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coxnet/event_stream.hpp"
#include "coxnet/network_state.hpp"

namespace coxnet {

// Covariate families. F1..F7, U1 and U2 come in a positive and a negative
// variant; the structural families carry no sentiment.
//
//   F1  sum over followees j of w_j, w_j = N^s(j)/N^a(j)  (neighbourhood size)
//   F2  w-weighted mean of N^s(j) over followees           (exposure intensity)
//   F3  w-weighted mean followee out-degree
//   F4  w-weighted mean followee in-degree
//   F5  w-weighted fraction of followees that follow back  (reciprocity)
//   F6  w-weighted mean of |followers(i) & followers(j)|
//   F7  w-weighted mean of |followees(i) & followees(j)|
//   U1  N^s(i), the node's own count
//   U2  sum over followers k of w_k
//
// Every weighted mean is 0 when F1 is 0.
enum class Family : std::uint8_t {
  F1, F2, F3, F4, F5, F6, F7, U1, U2,
  OutDegree, InDegree, ReciprocalFraction, RelatedTweets, LogOutDegree, LogInDegree,
};

bool is_sentiment_family(Family f);

struct CovariateDescriptor {
  Family family = Family::F1;
  std::optional<Sentiment> sentiment;

  std::string name() const;  // f1_pos, u2_neg, struct_outdeg, ...
  static std::optional<CovariateDescriptor> from_name(std::string_view name);

  bool operator==(const CovariateDescriptor&) const = default;
};

// Ordered list of covariates; the six focal ones (f1, f2, f5 for both
// sentiments) are always present.
class CovariateSpec {
 public:
  explicit CovariateSpec(std::vector<CovariateDescriptor> descriptors);

  static CovariateSpec focal();  // the six focal covariates
  static CovariateSpec full();   // the default 24-covariate model
  // "focal", "full", or a comma-separated list of covariate names.
  static CovariateSpec parse(std::string_view text);

  std::size_t size() const noexcept { return descriptors_.size(); }
  const std::vector<CovariateDescriptor>& descriptors() const noexcept { return descriptors_; }
  const CovariateDescriptor& operator[](std::size_t k) const { return descriptors_[k]; }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool uses(Family f) const;
  std::string to_string() const;  // comma-separated names

  bool operator==(const CovariateSpec&) const = default;

 private:
  std::vector<CovariateDescriptor> descriptors_;
};

bool is_focal(const CovariateDescriptor& d);

double f1(const NetworkState& state, NodeIndex i, Sentiment s);
double f2(const NetworkState& state, NodeIndex i, Sentiment s);
double f5(const NetworkState& state, NodeIndex i, Sentiment s);

// Values of the non-focal entries of `spec`, in spec order.
std::vector<std::pair<CovariateDescriptor, double>> auxiliary_covariates(
    const NetworkState& state, NodeIndex i, const CovariateSpec& spec);

// Full recomputation of s(i, H) from the state.
std::vector<double> covariate_vector(const NetworkState& state, NodeIndex i,
                                     const CovariateSpec& spec);
void covariate_vector(const NetworkState& state, NodeIndex i, const CovariateSpec& spec,
                      std::span<double> out);

// Network state plus a cached covariate row per node, advanced one event at a
// time. Only rows an event can change are recomputed; per-edge structural
// terms (degrees, shared neighbours, reciprocity) are kept alongside each
// followee list and updated with exact integer arithmetic on FOLLOW events.
// Copies are independent checkpoints.
class IncrementalCovariates {
 public:
  IncrementalCovariates(std::size_t node_count, CovariateSpec spec);

  // Applies `e` to the owned state and returns the sorted indices of the rows
  // that were recomputed.
  std::span<const NodeIndex> apply(const Event& e);

  const NetworkState& state() const noexcept { return state_; }
  const CovariateSpec& spec() const noexcept { return spec_; }
  std::size_t node_count() const noexcept { return state_.size(); }
  std::size_t dimension() const noexcept { return spec_.size(); }
  std::span<const double> row(NodeIndex i) const {
    return {values_.data() + static_cast<std::size_t>(i) * spec_.size(), spec_.size()};
  }

  // Largest relative difference between the cached rows (and cached edge
  // terms) and a brute-force recomputation from the state.
  double max_discrepancy() const;
  // Throws NumericalError when max_discrepancy() exceeds `tolerance`.
  void verify(double tolerance = 1e-12) const;

  struct EdgeTerms {
    std::uint32_t followee_out = 0;      // |followees(j)|
    std::uint32_t followee_in = 0;       // |followers(j)|
    std::uint32_t shared_followers = 0;  // |followers(i) & followers(j)|
    std::uint32_t shared_followees = 0;  // |followees(i) & followees(j)|
    bool reciprocal = false;             // j follows i

    bool operator==(const EdgeTerms&) const = default;
  };

 private:
  EdgeTerms fresh_terms(NodeIndex i, NodeIndex j) const;
  EdgeTerms& terms(NodeIndex i, NodeIndex j);
  void recompute_row(NodeIndex i);
  void mark(NodeIndex i);
  void mark_all(std::span<const NodeIndex> nodes);

  CovariateSpec spec_;
  NetworkState state_;
  std::vector<std::vector<EdgeTerms>> edge_terms_;  // aligned with followees(i)
  std::vector<double> values_;
  std::vector<std::uint8_t> marked_;
  std::vector<NodeIndex> changed_;
  bool track_followers_of_actor_ = false;   // F3 or F7 in spec
  bool track_followers_of_target_ = false;  // F4 or F6 in spec
  bool track_followees_of_tweeter_ = false; // U2 in spec
  bool track_tweeter_ = false;              // U1 or RelatedTweets in spec
};

}  // namespace coxnet
