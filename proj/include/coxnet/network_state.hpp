#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "coxnet/event_stream.hpp"

namespace coxnet {

// Per-node tweet tallies. `unrelated` is a shadow counter that feeds none of
// the covariates.
struct TweetCounters {
  std::uint32_t positive = 0;
  std::uint32_t negative = 0;
  std::uint32_t neutral = 0;
  std::uint32_t unrelated = 0;

  std::uint32_t all() const noexcept { return positive + negative + neutral; }
  std::uint32_t of(Sentiment s) const noexcept {
    return s == Sentiment::Positive ? positive : negative;
  }
  // N^s / N^a, zero for a node with no related tweets.
  double fraction(Sentiment s) const noexcept {
    const std::uint32_t a = all();
    return a == 0 ? 0.0 : static_cast<double>(of(s)) / static_cast<double>(a);
  }

  bool operator==(const TweetCounters&) const = default;
};

// The network history H_t-: follow edges plus tweet counters, replayed one
// event at a time. Neighbour lists are sorted dense-index vectors.
//
// An edge i -> j means i follows j: j is in followees(i), i is in
// followers(j), and information flows from j to i.
class NetworkState {
 public:
  NetworkState() = default;
  explicit NetworkState(std::size_t node_count);

  std::size_t size() const noexcept { return followees_.size(); }
  double clock() const noexcept { return clock_; }

  // Returns false when the event changed nothing (duplicate edge). Throws
  // InvalidArgument on time regression or an unknown node.
  bool apply(const Event& e);

  std::span<const NodeIndex> followees(NodeIndex i) const { return followees_.at(i); }
  std::span<const NodeIndex> followers(NodeIndex i) const { return followers_.at(i); }
  std::size_t out_degree(NodeIndex i) const { return followees_.at(i).size(); }
  std::size_t in_degree(NodeIndex i) const { return followers_.at(i).size(); }

  // True when `follower` follows `followee`.
  bool follows(NodeIndex follower, NodeIndex followee) const;

  const TweetCounters& counters(NodeIndex i) const { return counters_.at(i); }

  std::vector<NodeIndex> reciprocal_followees(NodeIndex i) const;
  std::size_t reciprocal_count(NodeIndex i) const;
  std::size_t shared_followers(NodeIndex i, NodeIndex j) const;
  std::size_t shared_followees(NodeIndex i, NodeIndex j) const;

  std::size_t edge_count() const noexcept { return edges_; }
  // Sum of N^a over all nodes.
  std::uint64_t related_tweet_total() const noexcept { return related_tweets_; }

  void write_edge_list(std::ostream& out, const NodeRegistry& registry) const;

 private:
  void check(NodeIndex i) const;

  std::vector<std::vector<NodeIndex>> followees_;
  std::vector<std::vector<NodeIndex>> followers_;
  std::vector<TweetCounters> counters_;
  double clock_ = -std::numeric_limits<double>::infinity();
  std::size_t edges_ = 0;
  std::uint64_t related_tweets_ = 0;
};

// Number of common elements of two sorted ranges.
std::size_t sorted_intersection_size(std::span<const NodeIndex> a, std::span<const NodeIndex> b);

}  // namespace coxnet
