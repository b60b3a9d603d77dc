#include "coxnet/event_stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "coxnet/error.hpp"
#include "text_util.hpp"

namespace coxnet {

namespace {

constexpr std::array<std::string_view, kLabelCount> kLabelTokens{"POS", "NEG", "NEU", "UNR"};

std::uint64_t edge_key(NodeIndex a, NodeIndex b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

struct RawRecord {
  double time;
  EventKind kind;
  std::string actor;
  std::string target;
  Label label;
  std::size_t line;
};

}  // namespace

std::string_view label_token(Label label) {
  return kLabelTokens[static_cast<std::size_t>(label)];
}

std::optional<Label> parse_label(std::string_view token) {
  for (std::size_t k = 0; k < kLabelCount; ++k) {
    if (kLabelTokens[k] == token) return static_cast<Label>(k);
  }
  return std::nullopt;
}

std::string_view sentiment_name(Sentiment s) {
  return s == Sentiment::Positive ? "pos" : "neg";
}

Label sentiment_label(Sentiment s) {
  return s == Sentiment::Positive ? Label::Positive : Label::Negative;
}

NodeIndex NodeRegistry::intern(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it != index_.end()) return it->second;
  auto idx = static_cast<NodeIndex>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), idx);
  return idx;
}

std::optional<NodeIndex> NodeRegistry::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EventLog::EventLog() : registry_(std::make_shared<NodeRegistry>()) {}

EventLog::EventLog(std::shared_ptr<const NodeRegistry> registry, std::vector<Event> events)
    : registry_(std::move(registry)) {
  if (!registry_) throw InvalidArgument("event log requires a node registry");
  const std::size_t n = registry_->size();
  std::unordered_set<std::uint64_t> edges;
  events_.reserve(events.size());
  double previous = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < events.size(); ++k) {
    const Event& e = events[k];
    if (!std::isfinite(e.time)) {
      throw InvalidArgument("event " + std::to_string(k) + " has a non-finite time");
    }
    if (e.time < previous) {
      throw InvalidArgument("event " + std::to_string(k) + " is out of time order");
    }
    previous = e.time;
    if (e.actor >= n || (e.kind == EventKind::Follow && e.target >= n)) {
      throw InvalidArgument("event " + std::to_string(k) + " references an unregistered node");
    }
    if (e.kind == EventKind::Follow) {
      if (e.actor == e.target) {
        throw InvalidArgument("event " + std::to_string(k) + " is a FOLLOW self-loop");
      }
      if (!edges.insert(edge_key(e.actor, e.target)).second) {
        ++counts_.duplicate_follows_dropped;
        continue;
      }
      ++counts_.follows;
    } else {
      ++counts_.tweets;
      ++counts_.by_label[static_cast<std::size_t>(e.label)];
    }
    events_.push_back(e);
  }
}

EventLog EventLog::with_events(std::vector<Event> events) const {
  return EventLog(registry_, std::move(events));
}

EventLog parse_log(std::istream& in) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_ws(view);
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    auto time = detail::parse_double(fields[0]);
    if (!time) throw ParseError(line_no, "invalid time '" + std::string(fields[0]) + "'");
    if (!std::isfinite(*time)) throw ParseError(line_no, "time must be finite");
    RawRecord rec{*time, EventKind::Tweet, std::string(fields[2]), {}, Label::Neutral, line_no};
    if (fields[1] == "TWEET") {
      auto label = parse_label(fields[3]);
      if (!label) throw ParseError(line_no, "unknown label '" + std::string(fields[3]) + "'");
      rec.label = *label;
    } else if (fields[1] == "FOLLOW") {
      rec.kind = EventKind::Follow;
      rec.target = std::string(fields[3]);
      if (rec.target == rec.actor) throw ParseError(line_no, "FOLLOW self-loop on '" + rec.actor + "'");
    } else {
      throw ParseError(line_no, "unknown event kind '" + std::string(fields[1]) + "'");
    }
    records.push_back(std::move(rec));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.time < b.time; });

  auto registry = std::make_shared<NodeRegistry>();
  std::vector<Event> events;
  events.reserve(records.size());
  for (const auto& rec : records) {
    NodeIndex actor = registry->intern(rec.actor);
    if (rec.kind == EventKind::Tweet) {
      events.push_back(Event::tweet(rec.time, actor, rec.label));
    } else {
      events.push_back(Event::follow(rec.time, actor, registry->intern(rec.target)));
    }
  }
  return EventLog(std::move(registry), std::move(events));
}

EventLog parse_log_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_log(in);
}

EventLog read_log_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open event log '" + path + "'");
  return parse_log(in);
}

void write_log(std::ostream& out, const EventLog& log, const std::vector<std::string>& header) {
  for (const auto& h : header) out << "# " << h << '\n';
  const NodeRegistry& reg = log.registry();
  for (const Event& e : log.events()) {
    out << detail::format_double(e.time);
    if (e.kind == EventKind::Tweet) {
      out << " TWEET " << reg.name(e.actor) << ' ' << label_token(e.label) << '\n';
    } else {
      out << " FOLLOW " << reg.name(e.actor) << ' ' << reg.name(e.target) << '\n';
    }
  }
}

void write_log_file(const std::string& path, const EventLog& log,
                    const std::vector<std::string>& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write event log '" + path + "'");
  write_log(out, log, header);
}

WindowedLog window(const EventLog& log, double t_start, double t_end) {
  if (std::isnan(t_start) || std::isnan(t_end) || t_start > t_end) {
    throw InvalidArgument("window start must not exceed window end");
  }
  const auto& events = log.events();
  auto first_analysis = std::lower_bound(events.begin(), events.end(), t_start,
                                         [](const Event& e, double t) { return e.time < t; });
  auto past_end = std::upper_bound(first_analysis, events.end(), t_end,
                                   [](double t, const Event& e) { return t < e.time; });
  return WindowedLog{
      log.with_events(std::vector<Event>(events.begin(), first_analysis)),
      log.with_events(std::vector<Event>(first_analysis, past_end)),
  };
}

}  // namespace coxnet
