#include "coxnet/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "coxnet/error.hpp"
#include "text_util.hpp"

namespace coxnet {

using detail::format_double;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_fit_table(std::ostream& out, const FitResult& r, const Metadata& extra) {
  out << "# sentiment: " << sentiment_name(r.sentiment) << '\n';
  out << "# converged: " << (r.converged ? "true" : "false") << '\n';
  out << "# iterations: " << r.iterations << '\n';
  out << "# loglik: " << format_double(r.loglik) << '\n';
  out << "# gradient_max_norm: " << format_double(r.gradient_norm) << '\n';
  out << "# events: " << r.events << '\n';
  out << "# ridge_applied: " << (r.ridge_applied ? "true" : "false") << '\n';
  out << "# separation: " << (r.separation ? "true" : "false") << '\n';
  out << "# risk_set: " << to_string(r.policy.mode) << '\n';
  out << "# ties: " << to_string(r.policy.ties) << '\n';
  out << "# scaling: " << (r.scaling.enabled ? "zscore" : "raw") << '\n';
  out << "# confidence_level: " << format_double(r.config.confidence_level) << '\n';
  for (const auto& [key, value] : extra) out << "# " << key << ": " << value << '\n';
  out << "covariate\testimate\tse\tci_lo\tci_hi\tsignificance\n";
  const auto sig = wald_significance(r);
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << r.names[k] << '\t' << format_double(r.beta[i]) << '\t' << format_double(r.se[i]) << '\t'
        << format_double(r.ci_lower[i]) << '\t' << format_double(r.ci_upper[i]) << '\t'
        << to_string(sig[k]) << '\n';
  }
}

void write_baseline(std::ostream& out, const std::vector<BaselineStep>& steps) {
  out << "time\tcumulative_hazard\n";
  for (const auto& s : steps) out << format_double(s.time) << '\t' << format_double(s.cumulative_hazard) << '\n';
}

void write_profile_table(std::ostream& out, const RealizationProfile& profile) {
  out << "# sentiment: " << sentiment_name(profile.sentiment) << '\n';
  out << "# realizations: " << profile.realization_count() << '\n';
  out << "covariate\trealization\tseed\tconverged\testimate\tse\tci_lo\tci_hi\tsignificance\n";
  for (std::size_t k = 0; k < profile.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    for (const auto& r : profile.realizations) {
      out << profile.names[k] << '\t' << r.index << '\t' << r.seed << '\t'
          << (r.converged ? 1 : 0) << '\t' << format_double(r.estimate[i]) << '\t'
          << format_double(r.se[i]) << '\t' << format_double(r.ci_lower[i]) << '\t'
          << format_double(r.ci_upper[i]) << '\t'
          << (r.converged ? to_string(classify(r.ci_lower[i], r.ci_upper[i])) : "EXCLUDED")
          << '\n';
    }
  }
}

RealizationProfile read_profile_table(std::istream& in) {
  RealizationProfile profile;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  bool sentiment_seen = false;
  std::map<std::size_t, std::size_t> slot;  // realization index -> position
  struct Row {
    std::size_t coefficient;
    std::size_t realization;
    std::uint64_t seed;
    bool converged;
    std::array<double, 4> values;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (view.starts_with("# sentiment:")) {
        auto v = detail::trim(view.substr(12));
        if (v == "pos") {
          profile.sentiment = Sentiment::Positive;
        } else if (v == "neg") {
          profile.sentiment = Sentiment::Negative;
        } else {
          throw ParseError(line_no, "unknown sentiment '" + std::string(v) + "'");
        }
        sentiment_seen = true;
      }
      continue;
    }
    auto fields = detail::split(view, '\t');
    if (!header_seen) {
      if (fields.size() != 9 || fields[0] != "covariate") throw ParseError(line_no, "missing profile table header");
      header_seen = true;
      continue;
    }
    if (fields.size() != 9) throw ParseError(line_no, "expected 9 columns");
    Row row{};
    const std::string name(fields[0]);
    auto it = std::find(profile.names.begin(), profile.names.end(), name);
    row.coefficient = static_cast<std::size_t>(it - profile.names.begin());
    if (it == profile.names.end()) profile.names.push_back(name);
    auto index = detail::parse_double(fields[1]);
    auto converged = detail::parse_double(fields[3]);
    if (!index || !converged) throw ParseError(line_no, "invalid realization fields");
    row.realization = static_cast<std::size_t>(*index);
    row.seed = std::stoull(std::string(fields[2]));
    row.converged = *converged != 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      auto v = detail::parse_double(fields[4 + c]);
      if (!v) throw ParseError(line_no, "invalid number '" + std::string(fields[4 + c]) + "'");
      row.values[c] = *v;
    }
    slot.emplace(row.realization, slot.size());
    rows.push_back(row);
  }
  if (!header_seen || !sentiment_seen) throw ParseError(0, "not a profile table");
  const auto p = static_cast<Eigen::Index>(profile.names.size());
  profile.realizations.resize(slot.size());
  std::size_t position = 0;
  for (auto& [index, pos] : slot) {
    pos = position++;
    auto& r = profile.realizations[pos];
    r.index = index;
    r.estimate = r.se = r.ci_lower = r.ci_upper = Eigen::VectorXd::Zero(p);
  }
  for (const Row& row : rows) {
    auto& r = profile.realizations[slot.at(row.realization)];
    r.seed = row.seed;
    r.converged = row.converged;
    const auto k = static_cast<Eigen::Index>(row.coefficient);
    r.estimate[k] = row.values[0];
    r.se[k] = row.values[1];
    r.ci_lower[k] = row.values[2];
    r.ci_upper[k] = row.values[3];
  }
  summarize(profile);
  return profile;
}

std::string format_percent(double fraction) { return fixed(100.0 * fraction, 2); }

void write_profile_summary(std::ostream& out, const std::vector<const RealizationProfile*>& profiles) {
  for (const RealizationProfile* profile : profiles) {
    out << "# " << sentiment_name(profile->sentiment) << ": realizations " << profile->realization_count()
        << ", included " << profile->included << ", excluded " << profile->excluded << '\n';
  }
  out << "sentiment\tcovariate\tmean_estimate\tsig_pos_pct\tsig_neg_pct\tnot_sig_pct\tincluded\texcluded\n";
  for (const RealizationProfile* profile : profiles) {
    for (std::size_t k = 0; k < profile->names.size(); ++k) {
      const auto& f = profile->fractions[k];
      out << sentiment_name(profile->sentiment) << '\t' << profile->names[k] << '\t'
          << format_double(profile->mean_estimate[k]) << '\t' << format_percent(f.positive) << '\t'
          << format_percent(f.negative) << '\t' << format_percent(f.not_significant) << '\t'
          << profile->included << '\t' << profile->excluded << '\n';
    }
  }
}

std::string profile_plot_name(const RealizationProfile& profile, std::size_t coefficient) {
  return "profile_" + std::string(sentiment_name(profile.sentiment)) + "_" +
         profile.names.at(coefficient) + ".svg";
}

std::string render_profile_svg(const RealizationProfile& profile, std::size_t coefficient,
                               bool deterministic) {
  const auto k = static_cast<Eigen::Index>(coefficient);
  if (coefficient >= profile.names.size()) throw InvalidArgument("coefficient index out of range");

  struct Segment {
    double estimate, lo, hi;
    Significance sig;
  };
  std::vector<Segment> segments;
  for (const auto& r : profile.realizations) {
    if (!r.converged) continue;
    segments.push_back({r.estimate[k], r.ci_lower[k], r.ci_upper[k], classify(r.ci_lower[k], r.ci_upper[k])});
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment& a, const Segment& b) { return a.estimate < b.estimate; });

  double lo = 0.0, hi = 0.0;
  for (const auto& s : segments) {
    lo = std::min(lo, s.lo);
    hi = std::max(hi, s.hi);
  }
  if (hi - lo <= 0.0) {
    lo = -1.0;
    hi = 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double width = 520.0, left = 40.0, right = 20.0, top = 56.0, bottom = 40.0;
  const std::size_t rows = std::max<std::size_t>(segments.size(), 1);
  const double row_h = std::clamp(600.0 / static_cast<double>(rows), 2.0, 12.0);
  const double plot_h = row_h * static_cast<double>(rows);
  const double height = top + plot_h + bottom;
  auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * (width - left - right); };

  const char* colors[] = {"#1a9850", "#d73027", "#7f7f7f"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0)
      << "\">\n";
  if (!deterministic) svg << "<!-- rendered " << utc_now() << " -->\n";
  const auto& frac = profile.fractions.at(coefficient);
  svg << "<title>" << xml_escape(profile.names[coefficient]) << " ("
      << sentiment_name(profile.sentiment) << " expression)</title>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left, 1) << "\" y=\"18\" font-size=\"13\" font-family=\"sans-serif\">"
      << xml_escape(profile.names[coefficient]) << " (" << sentiment_name(profile.sentiment)
      << " expression)</text>\n";
  svg << "<text class=\"sig-pos\" x=\"" << fixed(left, 1)
      << "\" y=\"38\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << colors[0] << "\">"
      << format_percent(frac.positive) << "%</text>\n";
  svg << "<text class=\"sig-neg\" x=\"" << fixed(left + 70.0, 1)
      << "\" y=\"38\" font-size=\"12\" font-family=\"sans-serif\" fill=\"" << colors[1] << "\">"
      << format_percent(frac.negative) << "%</text>\n";
  for (std::size_t r = 0; r < segments.size(); ++r) {
    const auto& s = segments[r];
    const double y = top + (static_cast<double>(r) + 0.5) * row_h;
    const char* color = colors[static_cast<std::size_t>(s.sig)];
    svg << "<line class=\"ci\" x1=\"" << fixed(sx(s.lo), 3) << "\" y1=\"" << fixed(y, 3)
        << "\" x2=\"" << fixed(sx(s.hi), 3) << "\" y2=\"" << fixed(y, 3) << "\" stroke=\"" << color
        << "\" stroke-width=\"1\"/>\n";
    svg << "<circle class=\"est\" cx=\"" << fixed(sx(s.estimate), 3) << "\" cy=\"" << fixed(y, 3)
        << "\" r=\"" << fixed(std::min(2.5, 0.45 * row_h + 0.5), 2) << "\" fill=\"" << color << "\"/>\n";
  }
  svg << "<line class=\"zero\" x1=\"" << fixed(sx(0.0), 3) << "\" y1=\"" << fixed(top, 3)
      << "\" x2=\"" << fixed(sx(0.0), 3) << "\" y2=\"" << fixed(top + plot_h, 3)
      << "\" stroke=\"black\" stroke-dasharray=\"2,3\"/>\n";
  const double axis_y = top + plot_h + 6.0;
  svg << "<path class=\"axis\" d=\"M" << fixed(left, 3) << ' ' << fixed(axis_y, 3) << " H"
      << fixed(width - right, 3) << "\" stroke=\"black\" fill=\"none\"/>\n";
  for (double tick : {lo + pad, 0.0, hi - pad}) {
    svg << "<text x=\"" << fixed(sx(tick), 3) << "\" y=\"" << fixed(axis_y + 16.0, 3)
        << "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\">" << fixed(tick, 3)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_covariate_trace(std::ostream& out, const WindowedData& data,
                           const NodeRegistry& registry, RiskSetPolicy policy, bool actors_only) {
  IncrementalCovariates cov = data.checkpoint();
  const std::size_t n = cov.node_count();
  std::vector<std::uint8_t> active(n, 0);
  for (NodeIndex i = 0; i < n; ++i) active[i] = cov.state().counters(i).all() > 0;

  out << "time\tnode\tevent";
  for (const auto& name : data.spec().names()) out << '\t' << name;
  out << '\n';
  auto write_row = [&](double t, NodeIndex i, std::string_view event) {
    out << format_double(t) << '\t' << registry.name(i) << '\t' << event;
    for (double v : cov.row(i)) out << '\t' << format_double(v);
    out << '\n';
  };

  const auto& events = data.analysis();
  std::vector<std::string_view> event_of(n);
  for (std::size_t g = 0; g < events.size();) {
    const double t = events[g].time;
    std::size_t h = g;
    bool opinionated = false;
    std::vector<NodeIndex> actors;
    for (; h < events.size() && events[h].time == t; ++h) {
      const Event& e = events[h];
      if (e.kind == EventKind::Tweet && (e.label == Label::Positive || e.label == Label::Negative)) {
        opinionated = true;
        event_of[e.actor] = label_token(e.label);
        actors.push_back(e.actor);
      }
    }
    if (opinionated) {
      if (actors_only) {
        std::sort(actors.begin(), actors.end());
        actors.erase(std::unique(actors.begin(), actors.end()), actors.end());
        for (NodeIndex i : actors) write_row(t, i, event_of[i]);
      } else {
        for (NodeIndex i = 0; i < n; ++i) {
          if (policy.mode == RiskSetMode::EverActive && !active[i]) continue;
          write_row(t, i, event_of[i].empty() ? std::string_view("-") : event_of[i]);
        }
      }
      for (NodeIndex i : actors) event_of[i] = {};
    }
    for (; g < h; ++g) {
      const Event& e = events[g];
      cov.apply(e);
      if (e.kind == EventKind::Tweet && e.label != Label::Unrelated) active[e.actor] = 1;
    }
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

}  // namespace coxnet
