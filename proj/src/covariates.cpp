#include "coxnet/covariates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "coxnet/error.hpp"
#include "text_util.hpp"

namespace coxnet {

namespace {

struct FamilyName {
  Family family;
  std::string_view name;
};

constexpr std::array<FamilyName, 15> kFamilyNames{{
    {Family::F1, "f1"},
    {Family::F2, "f2"},
    {Family::F3, "f3"},
    {Family::F4, "f4"},
    {Family::F5, "f5"},
    {Family::F6, "f6"},
    {Family::F7, "f7"},
    {Family::U1, "u1"},
    {Family::U2, "u2"},
    {Family::OutDegree, "struct_outdeg"},
    {Family::InDegree, "struct_indeg"},
    {Family::ReciprocalFraction, "struct_recip_frac"},
    {Family::RelatedTweets, "struct_n_all"},
    {Family::LogOutDegree, "struct_log_outdeg"},
    {Family::LogInDegree, "struct_log_indeg"},
}};

constexpr std::array<Sentiment, 2> kSentiments{Sentiment::Positive, Sentiment::Negative};

std::size_t sidx(Sentiment s) { return s == Sentiment::Positive ? 0 : 1; }

double ratio(double numerator, double weight) { return weight > 0.0 ? numerator / weight : 0.0; }

// Weighted mean of integer-valued terms, accumulated as offsets from the
// first weighted term. The offsets are exact, so equal terms give back that
// value exactly.
struct ShiftedMean {
  double reference = 0.0;
  double offsets = 0.0;

  void add(double w, double x, bool first) {
    if (first) reference = x;
    offsets += w * (x - reference);
  }
  double mean(double weight) const { return weight > 0.0 ? reference + offsets / weight : 0.0; }
};

// Weighted sums over the followees of one node for one sentiment.
struct WeightedSums {
  double weight = 0.0;
  double reciprocal = 0.0;
  ShiftedMean count;
  ShiftedMean followee_out;
  ShiftedMean followee_in;
  ShiftedMean shared_followers;
  ShiftedMean shared_followees;
};

struct NodeSums {
  std::array<WeightedSums, 2> by_sentiment{};
  std::array<double, 2> follower_weight{};  // U2
  std::size_t reciprocal_followees = 0;
};

using EdgeTerms = IncrementalCovariates::EdgeTerms;

// Shared by the brute-force and incremental paths so that both add the same
// terms in the same order.
template <class TermsFn>
NodeSums accumulate(const NetworkState& state, NodeIndex i, bool need_u2, TermsFn&& terms) {
  NodeSums sums;
  auto followees = state.followees(i);
  for (std::size_t k = 0; k < followees.size(); ++k) {
    const NodeIndex j = followees[k];
    const TweetCounters& c = state.counters(j);
    const EdgeTerms t = terms(k, j);
    if (t.reciprocal) ++sums.reciprocal_followees;
    for (Sentiment s : kSentiments) {
      const double w = c.fraction(s);
      if (w == 0.0) continue;
      WeightedSums& ws = sums.by_sentiment[sidx(s)];
      const bool first = ws.weight == 0.0;
      ws.weight += w;
      ws.reciprocal += w * (t.reciprocal ? 1.0 : 0.0);
      ws.count.add(w, static_cast<double>(c.of(s)), first);
      ws.followee_out.add(w, static_cast<double>(t.followee_out), first);
      ws.followee_in.add(w, static_cast<double>(t.followee_in), first);
      ws.shared_followers.add(w, static_cast<double>(t.shared_followers), first);
      ws.shared_followees.add(w, static_cast<double>(t.shared_followees), first);
    }
  }
  if (need_u2) {
    for (NodeIndex k : state.followers(i)) {
      const TweetCounters& c = state.counters(k);
      for (Sentiment s : kSentiments) sums.follower_weight[sidx(s)] += c.fraction(s);
    }
  }
  return sums;
}

void fill(const CovariateSpec& spec, const NetworkState& state, NodeIndex i, const NodeSums& sums,
          std::span<double> out) {
  const double outdeg = static_cast<double>(state.out_degree(i));
  const double indeg = static_cast<double>(state.in_degree(i));
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const CovariateDescriptor& d = spec[k];
    const std::size_t s = d.sentiment ? sidx(*d.sentiment) : 0;
    const WeightedSums& ws = sums.by_sentiment[s];
    double v = 0.0;
    switch (d.family) {
      case Family::F1: v = ws.weight; break;
      case Family::F2: v = ws.count.mean(ws.weight); break;
      case Family::F3: v = ws.followee_out.mean(ws.weight); break;
      case Family::F4: v = ws.followee_in.mean(ws.weight); break;
      case Family::F5: v = ratio(ws.reciprocal, ws.weight); break;
      case Family::F6: v = ws.shared_followers.mean(ws.weight); break;
      case Family::F7: v = ws.shared_followees.mean(ws.weight); break;
      case Family::U1: v = static_cast<double>(state.counters(i).of(*d.sentiment)); break;
      case Family::U2: v = sums.follower_weight[s]; break;
      case Family::OutDegree: v = outdeg; break;
      case Family::InDegree: v = indeg; break;
      case Family::ReciprocalFraction:
        v = outdeg > 0.0 ? static_cast<double>(sums.reciprocal_followees) / outdeg : 0.0;
        break;
      case Family::RelatedTweets: v = static_cast<double>(state.counters(i).all()); break;
      case Family::LogOutDegree: v = std::log1p(outdeg); break;
      case Family::LogInDegree: v = std::log1p(indeg); break;
    }
    out[k] = v;
  }
}

double relative_difference(double a, double b) {
  if (a == b) return 0.0;
  if (!std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<double>::infinity();
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace

bool is_sentiment_family(Family f) {
  switch (f) {
    case Family::F1: case Family::F2: case Family::F3: case Family::F4: case Family::F5:
    case Family::F6: case Family::F7: case Family::U1: case Family::U2:
      return true;
    default:
      return false;
  }
}

std::string CovariateDescriptor::name() const {
  std::string out;
  for (const auto& fn : kFamilyNames) {
    if (fn.family == family) out = std::string(fn.name);
  }
  if (sentiment) {
    out += '_';
    out += sentiment_name(*sentiment);
  }
  return out;
}

std::optional<CovariateDescriptor> CovariateDescriptor::from_name(std::string_view name) {
  for (const auto& fn : kFamilyNames) {
    if (!is_sentiment_family(fn.family)) {
      if (name == fn.name) return CovariateDescriptor{fn.family, std::nullopt};
      continue;
    }
    for (Sentiment s : kSentiments) {
      std::string candidate = std::string(fn.name) + "_" + std::string(sentiment_name(s));
      if (name == candidate) return CovariateDescriptor{fn.family, s};
    }
  }
  return std::nullopt;
}

bool is_focal(const CovariateDescriptor& d) {
  return d.family == Family::F1 || d.family == Family::F2 || d.family == Family::F5;
}

CovariateSpec::CovariateSpec(std::vector<CovariateDescriptor> descriptors)
    : descriptors_(std::move(descriptors)) {
  for (std::size_t a = 0; a < descriptors_.size(); ++a) {
    const auto& d = descriptors_[a];
    if (is_sentiment_family(d.family) != d.sentiment.has_value()) {
      throw InvalidArgument("covariate descriptor has an inconsistent sentiment");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (descriptors_[b] == d) throw InvalidArgument("duplicate covariate '" + d.name() + "'");
    }
  }
  for (Family f : {Family::F1, Family::F2, Family::F5}) {
    for (Sentiment s : kSentiments) {
      CovariateDescriptor d{f, s};
      if (std::find(descriptors_.begin(), descriptors_.end(), d) == descriptors_.end()) {
        throw InvalidArgument("covariate spec is missing focal covariate '" + d.name() + "'");
      }
    }
  }
}

CovariateSpec CovariateSpec::focal() {
  std::vector<CovariateDescriptor> d;
  for (Family f : {Family::F1, Family::F2, Family::F5}) {
    for (Sentiment s : kSentiments) d.push_back({f, s});
  }
  return CovariateSpec(std::move(d));
}

CovariateSpec CovariateSpec::full() {
  std::vector<CovariateDescriptor> d = focal().descriptors();
  for (Family f : {Family::F3, Family::F4, Family::F6, Family::F7, Family::U1, Family::U2}) {
    for (Sentiment s : kSentiments) d.push_back({f, s});
  }
  for (Family f : {Family::OutDegree, Family::InDegree, Family::ReciprocalFraction,
                   Family::RelatedTweets, Family::LogOutDegree, Family::LogInDegree}) {
    d.push_back({f, std::nullopt});
  }
  return CovariateSpec(std::move(d));
}

CovariateSpec CovariateSpec::parse(std::string_view text) {
  text = detail::trim(text);
  if (text == "focal") return focal();
  if (text == "full") return full();
  std::vector<CovariateDescriptor> d;
  for (std::string_view token : detail::split(text, ',')) {
    token = detail::trim(token);
    auto desc = CovariateDescriptor::from_name(token);
    if (!desc) throw InvalidArgument("unknown covariate '" + std::string(token) + "'");
    d.push_back(*desc);
  }
  return CovariateSpec(std::move(d));
}

std::vector<std::string> CovariateSpec::names() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& d : descriptors_) out.push_back(d.name());
  return out;
}

std::optional<std::size_t> CovariateSpec::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < size(); ++k) {
    if (descriptors_[k].name() == name) return k;
  }
  return std::nullopt;
}

bool CovariateSpec::uses(Family f) const {
  return std::any_of(descriptors_.begin(), descriptors_.end(),
                     [f](const CovariateDescriptor& d) { return d.family == f; });
}

std::string CovariateSpec::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < size(); ++k) {
    if (k) out += ',';
    out += descriptors_[k].name();
  }
  return out;
}

namespace {

void require_node(const NetworkState& state, NodeIndex i) {
  if (i >= state.size()) throw InvalidArgument("unknown node index " + std::to_string(i));
}

}  // namespace

double f1(const NetworkState& state, NodeIndex i, Sentiment s) {
  require_node(state, i);
  double sum = 0.0;
  for (NodeIndex j : state.followees(i)) {
    const double w = state.counters(j).fraction(s);
    if (w != 0.0) sum += w;
  }
  return sum;
}

double f2(const NetworkState& state, NodeIndex i, Sentiment s) {
  require_node(state, i);
  double weight = 0.0;
  ShiftedMean exposure;
  for (NodeIndex j : state.followees(i)) {
    const TweetCounters& c = state.counters(j);
    const double w = c.fraction(s);
    if (w == 0.0) continue;
    exposure.add(w, static_cast<double>(c.of(s)), weight == 0.0);
    weight += w;
  }
  return exposure.mean(weight);
}

double f5(const NetworkState& state, NodeIndex i, Sentiment s) {
  require_node(state, i);
  double weight = 0.0;
  double reciprocal = 0.0;
  for (NodeIndex j : state.followees(i)) {
    const double w = state.counters(j).fraction(s);
    if (w == 0.0) continue;
    weight += w;
    reciprocal += w * (state.follows(j, i) ? 1.0 : 0.0);
  }
  return ratio(reciprocal, weight);
}

void covariate_vector(const NetworkState& state, NodeIndex i, const CovariateSpec& spec,
                      std::span<double> out) {
  require_node(state, i);
  if (out.size() != spec.size()) throw InvalidArgument("covariate output has the wrong length");
  const bool need_shared_followers = spec.uses(Family::F6);
  const bool need_shared_followees = spec.uses(Family::F7);
  NodeSums sums = accumulate(state, i, spec.uses(Family::U2), [&](std::size_t, NodeIndex j) {
    EdgeTerms t;
    t.followee_out = static_cast<std::uint32_t>(state.out_degree(j));
    t.followee_in = static_cast<std::uint32_t>(state.in_degree(j));
    t.reciprocal = state.follows(j, i);
    if (need_shared_followers) t.shared_followers = static_cast<std::uint32_t>(state.shared_followers(i, j));
    if (need_shared_followees) t.shared_followees = static_cast<std::uint32_t>(state.shared_followees(i, j));
    return t;
  });
  fill(spec, state, i, sums, out);
}

std::vector<double> covariate_vector(const NetworkState& state, NodeIndex i,
                                     const CovariateSpec& spec) {
  std::vector<double> out(spec.size());
  covariate_vector(state, i, spec, out);
  return out;
}

std::vector<std::pair<CovariateDescriptor, double>> auxiliary_covariates(
    const NetworkState& state, NodeIndex i, const CovariateSpec& spec) {
  std::vector<double> all = covariate_vector(state, i, spec);
  std::vector<std::pair<CovariateDescriptor, double>> out;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (!is_focal(spec[k])) out.emplace_back(spec[k], all[k]);
  }
  return out;
}

IncrementalCovariates::IncrementalCovariates(std::size_t node_count, CovariateSpec spec)
    : spec_(std::move(spec)),
      state_(node_count),
      edge_terms_(node_count),
      values_(node_count * spec_.size(), 0.0),
      marked_(node_count, 0) {
  track_followers_of_actor_ = spec_.uses(Family::F3) || spec_.uses(Family::F7);
  track_followers_of_target_ = spec_.uses(Family::F4) || spec_.uses(Family::F6);
  track_followees_of_tweeter_ = spec_.uses(Family::U2);
  track_tweeter_ = spec_.uses(Family::U1) || spec_.uses(Family::RelatedTweets);
  for (NodeIndex i = 0; i < node_count; ++i) recompute_row(i);
}

IncrementalCovariates::EdgeTerms IncrementalCovariates::fresh_terms(NodeIndex i, NodeIndex j) const {
  EdgeTerms t;
  t.followee_out = static_cast<std::uint32_t>(state_.out_degree(j));
  t.followee_in = static_cast<std::uint32_t>(state_.in_degree(j));
  t.shared_followers = static_cast<std::uint32_t>(state_.shared_followers(i, j));
  t.shared_followees = static_cast<std::uint32_t>(state_.shared_followees(i, j));
  t.reciprocal = state_.follows(j, i);
  return t;
}

IncrementalCovariates::EdgeTerms& IncrementalCovariates::terms(NodeIndex i, NodeIndex j) {
  auto followees = state_.followees(i);
  auto it = std::lower_bound(followees.begin(), followees.end(), j);
  if (it == followees.end() || *it != j) {
    throw NumericalError("covariate cache lost track of edge " + std::to_string(i) + " -> " +
                         std::to_string(j));
  }
  return edge_terms_[i][static_cast<std::size_t>(it - followees.begin())];
}

void IncrementalCovariates::mark(NodeIndex i) {
  if (!marked_[i]) {
    marked_[i] = 1;
    changed_.push_back(i);
  }
}

void IncrementalCovariates::mark_all(std::span<const NodeIndex> nodes) {
  for (NodeIndex i : nodes) mark(i);
}

void IncrementalCovariates::recompute_row(NodeIndex i) {
  const auto& terms_i = edge_terms_[i];
  NodeSums sums = accumulate(state_, i, track_followees_of_tweeter_,
                             [&](std::size_t k, NodeIndex) { return terms_i[k]; });
  fill(spec_, state_, i, sums,
       std::span<double>(values_.data() + static_cast<std::size_t>(i) * spec_.size(), spec_.size()));
}

std::span<const NodeIndex> IncrementalCovariates::apply(const Event& e) {
  changed_.clear();
  if (e.kind == EventKind::Tweet) {
    state_.apply(e);
    if (e.label == Label::Unrelated) return {};
    const NodeIndex j = e.actor;
    mark_all(state_.followers(j));
    if (track_followees_of_tweeter_) mark_all(state_.followees(j));
    if (track_tweeter_) mark(j);
  } else {
    const NodeIndex a = e.actor;
    const NodeIndex b = e.target;
    if (!state_.apply(e)) return {};

    auto followees_a = state_.followees(a);
    const auto pos_b = static_cast<std::size_t>(
        std::lower_bound(followees_a.begin(), followees_a.end(), b) - followees_a.begin());
    edge_terms_[a].insert(edge_terms_[a].begin() + static_cast<std::ptrdiff_t>(pos_b),
                          fresh_terms(a, b));

    // followees(a) gained b.
    for (std::size_t k = 0; k < followees_a.size(); ++k) {
      if (k == pos_b) continue;
      if (state_.follows(followees_a[k], b)) ++edge_terms_[a][k].shared_followees;
    }
    for (NodeIndex i : state_.followers(a)) {
      EdgeTerms& t = terms(i, a);
      ++t.followee_out;
      if (state_.follows(i, b)) ++t.shared_followees;
    }
    // followers(b) gained a.
    auto followees_b = state_.followees(b);
    for (std::size_t k = 0; k < followees_b.size(); ++k) {
      const NodeIndex j = followees_b[k];
      EdgeTerms& t = edge_terms_[b][k];
      if (state_.follows(a, j)) ++t.shared_followers;
      if (j == a) t.reciprocal = true;
    }
    for (NodeIndex i : state_.followers(b)) {
      if (i == a) continue;
      EdgeTerms& t = terms(i, b);
      ++t.followee_in;
      if (state_.follows(a, i)) ++t.shared_followers;
    }

    mark(a);
    mark(b);
    if (track_followers_of_actor_) mark_all(state_.followers(a));
    if (track_followers_of_target_) mark_all(state_.followers(b));
  }
  std::sort(changed_.begin(), changed_.end());
  for (NodeIndex i : changed_) {
    recompute_row(i);
    marked_[i] = 0;
  }
  return changed_;
}

double IncrementalCovariates::max_discrepancy() const {
  double worst = 0.0;
  std::vector<double> reference(spec_.size());
  for (NodeIndex i = 0; i < state_.size(); ++i) {
    auto followees = state_.followees(i);
    if (edge_terms_[i].size() != followees.size()) return std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < followees.size(); ++k) {
      if (!(edge_terms_[i][k] == fresh_terms(i, followees[k]))) {
        return std::numeric_limits<double>::infinity();
      }
    }
    covariate_vector(state_, i, spec_, reference);
    auto cached = row(i);
    for (std::size_t k = 0; k < spec_.size(); ++k) {
      worst = std::max(worst, relative_difference(cached[k], reference[k]));
    }
  }
  return worst;
}

void IncrementalCovariates::verify(double tolerance) const {
  const double d = max_discrepancy();
  if (!(d <= tolerance)) {
    throw NumericalError("covariate cache out of sync with network state (discrepancy " +
                         std::to_string(d) + ")");
  }
}

}  // namespace coxnet
