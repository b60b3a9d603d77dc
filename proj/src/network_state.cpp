#include "coxnet/network_state.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "coxnet/error.hpp"

namespace coxnet {

namespace {

// Inserts into a sorted vector; false if already present.
bool sorted_insert(std::vector<NodeIndex>& v, NodeIndex x) {
  auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it != v.end() && *it == x) return false;
  v.insert(it, x);
  return true;
}

}  // namespace

std::size_t sorted_intersection_size(std::span<const NodeIndex> a, std::span<const NodeIndex> b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

NetworkState::NetworkState(std::size_t node_count)
    : followees_(node_count), followers_(node_count), counters_(node_count) {}

void NetworkState::check(NodeIndex i) const {
  if (i >= size()) throw InvalidArgument("unknown node index " + std::to_string(i));
}

bool NetworkState::apply(const Event& e) {
  if (e.time < clock_) {
    throw InvalidArgument("event time " + std::to_string(e.time) + " precedes state clock " +
                          std::to_string(clock_));
  }
  check(e.actor);
  clock_ = e.time;
  if (e.kind == EventKind::Tweet) {
    TweetCounters& c = counters_[e.actor];
    switch (e.label) {
      case Label::Positive: ++c.positive; break;
      case Label::Negative: ++c.negative; break;
      case Label::Neutral: ++c.neutral; break;
      case Label::Unrelated: ++c.unrelated; return true;
    }
    ++related_tweets_;
    return true;
  }
  check(e.target);
  if (e.actor == e.target) throw InvalidArgument("FOLLOW self-loop");
  if (!sorted_insert(followees_[e.actor], e.target)) return false;
  sorted_insert(followers_[e.target], e.actor);
  ++edges_;
  return true;
}

bool NetworkState::follows(NodeIndex follower, NodeIndex followee) const {
  const auto& v = followees_.at(follower);
  return std::binary_search(v.begin(), v.end(), followee);
}

std::vector<NodeIndex> NetworkState::reciprocal_followees(NodeIndex i) const {
  check(i);
  std::vector<NodeIndex> out;
  std::set_intersection(followees_[i].begin(), followees_[i].end(), followers_[i].begin(),
                        followers_[i].end(), std::back_inserter(out));
  return out;
}

std::size_t NetworkState::reciprocal_count(NodeIndex i) const {
  check(i);
  return sorted_intersection_size(followees_[i], followers_[i]);
}

std::size_t NetworkState::shared_followers(NodeIndex i, NodeIndex j) const {
  check(i);
  check(j);
  return sorted_intersection_size(followers_[i], followers_[j]);
}

std::size_t NetworkState::shared_followees(NodeIndex i, NodeIndex j) const {
  check(i);
  check(j);
  return sorted_intersection_size(followees_[i], followees_[j]);
}

void NetworkState::write_edge_list(std::ostream& out, const NodeRegistry& registry) const {
  for (NodeIndex i = 0; i < size(); ++i) {
    for (NodeIndex j : followees_[i]) out << registry.name(i) << ' ' << registry.name(j) << '\n';
  }
}

}  // namespace coxnet
