#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace coxnet {

using NodeIndex = std::uint32_t;

enum class Label : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2, Unrelated = 3 };
inline constexpr std::size_t kLabelCount = 4;

enum class EventKind : std::uint8_t { Tweet, Follow };

// The two modelled intensity streams.
enum class Sentiment : std::uint8_t { Positive, Negative };

std::string_view label_token(Label label);  // POS, NEG, NEU, UNR
std::optional<Label> parse_label(std::string_view token);
std::string_view sentiment_name(Sentiment s);  // "pos" / "neg"
Label sentiment_label(Sentiment s);

// A TWEET by `actor`, or a FOLLOW where `actor` starts following `target`
// (actor receives target's messages).
struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Tweet;
  NodeIndex actor = 0;
  NodeIndex target = 0;
  Label label = Label::Neutral;

  static Event tweet(double t, NodeIndex who, Label l) {
    return Event{t, EventKind::Tweet, who, 0, l};
  }
  static Event follow(double t, NodeIndex follower, NodeIndex followee) {
    return Event{t, EventKind::Follow, follower, followee, Label::Neutral};
  }

  bool operator==(const Event&) const = default;
};

// Interns external node tokens to dense indices in first-seen order.
class NodeRegistry {
 public:
  NodeIndex intern(std::string_view name);
  std::optional<NodeIndex> find(std::string_view name) const;
  const std::string& name(NodeIndex index) const { return names_.at(index); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeIndex> index_;
};

struct EventCounts {
  std::size_t tweets = 0;
  std::size_t follows = 0;
  std::array<std::size_t, kLabelCount> by_label{};
  std::size_t duplicate_follows_dropped = 0;
};

// Immutable, validated, time-ordered event sequence over a shared registry.
class EventLog {
 public:
  EventLog();

  // Validates ordering, self-loops and node indices, and drops FOLLOW events
  // for edges that already exist (counted in `counts().duplicate_follows_dropped`).
  EventLog(std::shared_ptr<const NodeRegistry> registry, std::vector<Event> events);

  const std::vector<Event>& events() const noexcept { return events_; }
  const NodeRegistry& registry() const noexcept { return *registry_; }
  std::shared_ptr<const NodeRegistry> shared_registry() const noexcept { return registry_; }
  std::size_t node_count() const noexcept { return registry_->size(); }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }
  const EventCounts& counts() const noexcept { return counts_; }

  // Same registry, new events; re-validated.
  EventLog with_events(std::vector<Event> events) const;

  bool operator==(const EventLog& other) const { return events_ == other.events_; }

 private:
  std::shared_ptr<const NodeRegistry> registry_;
  std::vector<Event> events_;
  EventCounts counts_;
};

// Reads the line-oriented event format. Lines may appear in any order; they
// are stably sorted by (time, line number).
EventLog parse_log(std::istream& in);
EventLog parse_log_text(std::string_view text);
EventLog read_log_file(const std::string& path);

// Writes one event per line. `header` lines (if any) are emitted as comments.
void write_log(std::ostream& out, const EventLog& log,
               const std::vector<std::string>& header = {});
void write_log_file(const std::string& path, const EventLog& log,
                    const std::vector<std::string>& header = {});

struct WindowedLog {
  EventLog history;   // time < t_start
  EventLog analysis;  // t_start <= time <= t_end
};

WindowedLog window(const EventLog& log,
                   double t_start = -std::numeric_limits<double>::infinity(),
                   double t_end = std::numeric_limits<double>::infinity());

inline constexpr double kSecondsPerDay = 86400.0;

}  // namespace coxnet
