// coxnet command-line front end. Links only the C API.
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coxnet/coxnet.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
  coxnet_status status;
  std::string message;
};

void check(coxnet_status status) {
  if (status != COXNET_OK) throw Failure{status, coxnet_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{COXNET_ERR_USAGE, message}; }

struct LogDeleter {
  void operator()(coxnet_log* p) const { coxnet_log_free(p); }
};
struct FitDeleter {
  void operator()(coxnet_fit* p) const { coxnet_fit_free(p); }
};
struct ProfileDeleter {
  void operator()(coxnet_profile* p) const { coxnet_profile_free(p); }
};
using LogHandle = std::unique_ptr<coxnet_log, LogDeleter>;
using FitHandle = std::unique_ptr<coxnet_fit, FitDeleter>;
using ProfileHandle = std::unique_ptr<coxnet_profile, ProfileDeleter>;

LogHandle read_log(const std::string& path) {
  coxnet_log* raw = nullptr;
  check(coxnet_log_read(path.c_str(), &raw));
  return LogHandle(raw);
}

std::string sha256(const std::string& path) {
  char hex[65];
  check(coxnet_file_sha256(path.c_str(), hex));
  return hex;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<double> parse_csv_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  if (text.empty()) return values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error(flag + ": invalid number '" + item + "'");
    }
  }
  return values;
}

std::string prepare_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) usage_error("cannot create output directory '" + dir + "'");
  return dir;
}

std::string in_dir(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

// Options shared by every subcommand that fits models.
struct FitFlags {
  std::string covariates = "full";
  std::string risk_set = "all_nodes";
  bool standardize = false;
  std::optional<double> window_days;
  std::optional<double> t_start;
  std::optional<double> t_end;
  int max_iterations = 0;
  double tolerance = 0;
  int step_halving = 0;
  double ridge = 0;
  double confidence = 0;

  void add_to(CLI::App& app) {
    coxnet_fit_options d;
    coxnet_fit_options_init(&d);
    max_iterations = d.max_iterations;
    tolerance = d.gradient_tolerance;
    step_halving = d.step_halving_limit;
    ridge = d.ridge;
    confidence = d.confidence_level;
    app.add_option("--covariates", covariates, "focal, full, or comma-separated covariate names")
        ->capture_default_str();
    app.add_option("--risk-set", risk_set, "all_nodes or ever_active")
        ->check(CLI::IsMember({"all_nodes", "ever_active"}))
        ->capture_default_str();
    app.add_flag("--standardize", standardize, "z-score covariates before fitting");
    app.add_option("--window-days", window_days, "analysis window length in days, ending at the last event (or --t-end)")
        ->check(CLI::PositiveNumber);
    app.add_option("--t-start", t_start, "analysis window start time (seconds)");
    app.add_option("--t-end", t_end, "analysis window end time (seconds)");
    app.add_option("--max-iterations", max_iterations, "Newton iteration limit")->capture_default_str();
    app.add_option("--tolerance", tolerance, "max-norm gradient tolerance")->capture_default_str();
    app.add_option("--step-halving", step_halving, "step-halving limit per iteration")->capture_default_str();
    app.add_option("--ridge", ridge, "initial ridge added on a singular Hessian")->capture_default_str();
    app.add_option("--confidence", confidence, "Wald confidence level")->capture_default_str();
  }

  coxnet_fit_options resolve(const coxnet_log* log) const {
    coxnet_fit_options o;
    coxnet_fit_options_init(&o);
    o.covariates = covariates.c_str();
    o.risk_set = risk_set == "ever_active" ? COXNET_RISK_EVER_ACTIVE : COXNET_RISK_ALL_NODES;
    o.standardize = standardize ? 1 : 0;
    o.max_iterations = max_iterations;
    o.gradient_tolerance = tolerance;
    o.step_halving_limit = step_halving;
    o.ridge = ridge;
    o.confidence_level = confidence;
    if (t_start) o.t_start = *t_start;
    if (t_end) o.t_end = *t_end;
    if (window_days) {
      if (t_start) usage_error("--window-days cannot be combined with --t-start");
      double end = o.t_end;
      if (!t_end) {
        coxnet_log_stats stats;
        check(coxnet_log_stats_get(log, &stats));
        if (stats.events == 0) usage_error("--window-days needs a non-empty log");
        end = stats.last_time;
        o.t_end = end;
      }
      o.t_start = end - *window_days * 86400.0;
    }
    return o;
  }
};

void describe_window(json& manifest, const coxnet_fit_options& o) {
  manifest["window"] = {{"t_start", format_double(o.t_start)}, {"t_end", format_double(o.t_end)}};
}

// Run record written next to every output set.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args, bool deterministic)
      : deterministic_(deterministic), start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["args"] = args;
    doc_["version"] = coxnet_version();
    doc_["deterministic"] = deterministic;
  }

  void snapshot(const CLI::App& app) {
    json config = json::object();
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& results = opt->results();
        std::string joined;
        for (std::size_t k = 0; k < results.size(); ++k) joined += (k ? "," : "") + results[k];
        config[name] = joined;
      } else {
        config[name] = opt->get_default_str();
      }
    }
    doc_["config"] = std::move(config);
  }

  json& operator[](const char* key) { return doc_[key]; }

  void input(const std::string& role, const std::string& path) {
    doc_["inputs"][role] = {{"path", path}, {"sha256", sha256(path)}};
  }

  void output(const std::string& name) { outputs_.push_back(name); }

  void write(const std::string& dir, const std::string& file_name) {
    json outputs = json::object();
    for (const auto& name : outputs_) outputs[name] = sha256(in_dir(dir, name));
    doc_["outputs"] = std::move(outputs);
    const double seconds =
        deterministic_ ? 0.0
                       : std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    doc_["wall_clock_seconds"] = seconds;
    std::ofstream out(in_dir(dir, file_name), std::ios::binary);
    if (!out) usage_error("cannot write manifest in '" + dir + "'");
    out << doc_.dump(2) << '\n';
  }

 private:
  json doc_;
  bool deterministic_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
};

std::vector<std::string> header_comments(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line) && !line.empty() && line.front() == '#') lines.push_back(line);
  return lines;
}

// "# key: value" lines written by `simulate` carry the generating coefficients.
std::vector<std::pair<std::string, std::string>> true_beta_echo(const std::string& log_path) {
  std::vector<std::pair<std::string, std::string>> echo;
  for (const auto& line : header_comments(log_path)) {
    for (const char* key : {"covariates", "beta_pos", "beta_neg"}) {
      const std::string prefix = std::string("# ") + key + ": ";
      if (line.rfind(prefix, 0) == 0) echo.emplace_back(std::string("true_") + key, line.substr(prefix.size()));
    }
  }
  return echo;
}

std::vector<int> sentiments_of(const std::string& which) {
  if (which == "pos") return {COXNET_SENTIMENT_POS};
  if (which == "neg") return {COXNET_SENTIMENT_NEG};
  return {COXNET_SENTIMENT_POS, COXNET_SENTIMENT_NEG};
}

const char* sentiment_suffix(int s) { return s == COXNET_SENTIMENT_POS ? "pos" : "neg"; }

const char* significance_name(int s) {
  switch (s) {
    case COXNET_SIG_POS: return "SIG_POS";
    case COXNET_SIG_NEG: return "SIG_NEG";
    default: return "NOT_SIG";
  }
}

// ---- subcommands ----------------------------------------------------------

struct IngestCmd {
  std::string log_path;
  std::string out_dir;
  bool trace = false;
  bool actors_only = false;
  FitFlags fit;

  void add_to(CLI::App& app) {
    app.add_option("log", log_path, "event log")->required();
    app.add_option("--out", out_dir, "write stats, optional trace and manifest here");
    app.add_flag("--trace", trace, "also write covariate rows at each opinionated event (needs --out)");
    app.add_flag("--actors-only", actors_only, "trace only the acting node's row");
    fit.add_to(app);
  }

  int run(const CLI::App& app, Manifest& manifest) {
    auto log = read_log(log_path);
    coxnet_log_stats s;
    check(coxnet_log_stats_get(log.get(), &s));
    std::ostringstream text;
    text << "events\t" << s.events << '\n'
         << "nodes\t" << s.nodes << '\n'
         << "tweets\t" << s.tweets << '\n'
         << "follows\t" << s.follows << '\n'
         << "tweets_pos\t" << s.labels[COXNET_LABEL_POS] << '\n'
         << "tweets_neg\t" << s.labels[COXNET_LABEL_NEG] << '\n'
         << "tweets_neu\t" << s.labels[COXNET_LABEL_NEU] << '\n'
         << "tweets_unr\t" << s.labels[COXNET_LABEL_UNR] << '\n'
         << "duplicate_follows_dropped\t" << s.duplicate_follows_dropped << '\n'
         << "first_time\t" << format_double(s.first_time) << '\n'
         << "last_time\t" << format_double(s.last_time) << '\n';
    std::cout << text.str();
    if (trace && out_dir.empty()) usage_error("--trace needs --out");
    if (out_dir.empty()) return 0;
    prepare_directory(out_dir);
    manifest.snapshot(app);
    manifest.input("log", log_path);
    {
      std::ofstream out(in_dir(out_dir, "stats.tsv"), std::ios::binary);
      out << text.str();
    }
    manifest.output("stats.tsv");
    if (trace) {
      const auto options = fit.resolve(log.get());
      check(coxnet_trace_write(log.get(), &options, in_dir(out_dir, "trace.tsv").c_str(), actors_only));
      manifest.output("trace.tsv");
    }
    manifest.write(out_dir, "manifest.json");
    return 0;
  }
};

struct SimulateCmd {
  std::string out_dir;
  std::size_t nodes = 0;
  double p_edge = 0, p_reciprocal = 0;
  std::string edges_path;
  std::string covariates = "focal";
  std::string beta_pos, beta_neg;
  double baseline_pos = 0, baseline_neg = 0, neutral_rate = 0, follow_rate = 0, horizon = 0;
  std::uint64_t seed = 0;

  void add_to(CLI::App& app) {
    coxnet_sim_options d;
    coxnet_sim_options_init(&d);
    nodes = d.nodes;
    p_edge = d.p_edge;
    p_reciprocal = d.p_reciprocal;
    baseline_pos = d.baseline_pos;
    baseline_neg = d.baseline_neg;
    neutral_rate = d.neutral_rate;
    follow_rate = d.follow_rate;
    horizon = d.horizon;
    seed = d.seed;
    app.add_option("--out", out_dir, "output directory (events.log, manifest.json)")->required();
    app.add_option("--nodes", nodes, "number of nodes")->capture_default_str();
    app.add_option("--p-edge", p_edge, "Erdos-Renyi edge probability")->capture_default_str();
    app.add_option("--p-reciprocal", p_reciprocal, "probability an edge is reciprocated")->capture_default_str();
    app.add_option("--edges", edges_path, "fixed '<follower> <followee>' edge list instead of Erdos-Renyi");
    app.add_option("--covariates", covariates, "covariate spec driving the intensities")->capture_default_str();
    app.add_option("--beta-pos", beta_pos, "comma-separated coefficients for the positive stream");
    app.add_option("--beta-neg", beta_neg, "comma-separated coefficients for the negative stream");
    app.add_option("--baseline-pos", baseline_pos, "positive baseline rate per node")->capture_default_str();
    app.add_option("--baseline-neg", baseline_neg, "negative baseline rate per node")->capture_default_str();
    app.add_option("--neutral-rate", neutral_rate, "neutral tweet rate per node")->capture_default_str();
    app.add_option("--follow-rate", follow_rate, "network-wide rate of new follow edges")->capture_default_str();
    app.add_option("--horizon", horizon, "simulated time span")->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
  }

  int run(const CLI::App& app, Manifest& manifest) {
    const auto pos = parse_csv_doubles(beta_pos, "--beta-pos");
    const auto neg = parse_csv_doubles(beta_neg, "--beta-neg");
    coxnet_sim_options o;
    coxnet_sim_options_init(&o);
    o.nodes = nodes;
    o.p_edge = p_edge;
    o.p_reciprocal = p_reciprocal;
    o.edge_list_path = edges_path.empty() ? nullptr : edges_path.c_str();
    o.covariates = covariates.c_str();
    o.beta_pos = pos.empty() ? nullptr : pos.data();
    o.beta_pos_length = pos.size();
    o.beta_neg = neg.empty() ? nullptr : neg.data();
    o.beta_neg_length = neg.size();
    o.baseline_pos = baseline_pos;
    o.baseline_neg = baseline_neg;
    o.neutral_rate = neutral_rate;
    o.follow_rate = follow_rate;
    o.horizon = horizon;
    o.seed = seed;
    coxnet_log* raw = nullptr;
    check(coxnet_simulate(&o, &raw));
    LogHandle log(raw);

    auto csv = [](const std::vector<double>& v) {
      std::string s;
      for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
      return s.empty() ? std::string("0") : s;
    };
    const std::vector<std::string> header = {
        "simulated event log",
        "seed: " + std::to_string(seed),
        "covariates: " + covariates,
        "beta_pos: " + csv(pos),
        "beta_neg: " + csv(neg),
    };
    std::vector<const char*> header_ptrs;
    for (const auto& h : header) header_ptrs.push_back(h.c_str());

    prepare_directory(out_dir);
    manifest.snapshot(app);
    if (!edges_path.empty()) manifest.input("edges", edges_path);
    manifest["seeds"] = {{"master", seed},
                         {"network", coxnet_derive_seed(seed, 0)},
                         {"events", coxnet_derive_seed(seed, 1)}};
    manifest["beta_pos"] = pos;
    manifest["beta_neg"] = neg;
    const std::string log_path = in_dir(out_dir, "events.log");
    check(coxnet_log_write(log.get(), log_path.c_str(), header_ptrs.data(), header_ptrs.size()));
    manifest.output("events.log");
    coxnet_log_stats s;
    check(coxnet_log_stats_get(log.get(), &s));
    manifest["events"] = s.events;
    std::cout << "wrote " << s.events << " events (" << s.labels[COXNET_LABEL_POS] << " pos, "
              << s.labels[COXNET_LABEL_NEG] << " neg, " << s.follows << " follows) to " << log_path << '\n';
    manifest.write(out_dir, "manifest.json");
    return 0;
  }
};

struct FitCmd {
  std::string log_path;
  std::string out_dir;
  std::string sentiment = "both";
  FitFlags fit;

  void add_to(CLI::App& app) {
    app.add_option("log", log_path, "event log")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--sentiment", sentiment, "pos, neg or both")
        ->check(CLI::IsMember({"pos", "neg", "both"}))
        ->capture_default_str();
    fit.add_to(app);
  }

  int run(const CLI::App& app, Manifest& manifest) {
    auto log = read_log(log_path);
    const auto options = fit.resolve(log.get());
    prepare_directory(out_dir);
    manifest.snapshot(app);
    manifest.input("log", log_path);
    describe_window(manifest["config"], options);
    auto metadata = true_beta_echo(log_path);
    metadata.emplace_back("window_start", format_double(options.t_start));
    metadata.emplace_back("window_end", format_double(options.t_end));
    std::vector<const char*> flat;
    for (const auto& [k, v] : metadata) {
      flat.push_back(k.c_str());
      flat.push_back(v.c_str());
    }

    int exit_code = 0;
    json fits = json::object();
    for (int s : sentiments_of(sentiment)) {
      coxnet_fit* raw = nullptr;
      const coxnet_status status = coxnet_fit_run(log.get(), &options, s, &raw);
      if (raw == nullptr) check(status);
      const std::string why = status == COXNET_OK ? "" : coxnet_last_error();
      FitHandle handle(raw);
      const std::string suffix = sentiment_suffix(s);
      const std::string table = "fit_" + suffix + ".tsv";
      const std::string baseline = "baseline_" + suffix + ".tsv";
      check(coxnet_fit_write_table(handle.get(), in_dir(out_dir, table).c_str(), flat.data(), metadata.size()));
      check(coxnet_fit_write_baseline(handle.get(), in_dir(out_dir, baseline).c_str()));
      manifest.output(table);
      manifest.output(baseline);

      coxnet_fit_summary summary;
      check(coxnet_fit_summary_get(handle.get(), &summary));
      fits[suffix] = {{"converged", summary.converged != 0},
                      {"iterations", summary.iterations},
                      {"events", summary.events}};
      std::cout << suffix << ": " << summary.events << " events, loglik " << format_double(summary.loglik)
                << ", " << summary.iterations << " iterations, "
                << (summary.converged ? "converged" : "NOT converged") << '\n';
      for (std::size_t k = 0; k < summary.dimension; ++k) {
        coxnet_coefficient c;
        check(coxnet_fit_coefficient(handle.get(), k, &c));
        std::cout << "  " << c.name << '\t' << format_double(c.estimate) << '\t' << significance_name(c.significance)
                  << '\n';
      }
      if (status != COXNET_OK) {
        std::cerr << "coxnet fit: " << suffix << ": " << why << '\n';
        exit_code = status;
      }
    }
    manifest["fits"] = std::move(fits);
    manifest.write(out_dir, "manifest.json");
    return exit_code;
  }
};

struct ResampleCmd {
  std::string log_path;
  std::string out_dir;
  std::size_t realizations = 0;
  std::uint64_t seed = 0;
  std::string confusion_path;
  std::string calibration_path;
  double smoothing = 1.0;
  unsigned threads = 0;
  bool all_coefficients = false;
  FitFlags fit;

  void add_to(CLI::App& app) {
    coxnet_resample_options d;
    coxnet_resample_options_init(&d);
    realizations = d.realizations;
    seed = d.master_seed;
    threads = d.threads;
    app.add_option("log", log_path, "event log")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--realizations,-K", realizations, "number of reclassified realizations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    auto* q = app.add_option("--confusion", confusion_path,
                             "4x4 matrix file Q[predicted][true], or 'identity'");
    auto* c = app.add_option("--calibration", calibration_path, "'<predicted> <true>' label pairs");
    q->excludes(c);
    app.add_option("--smoothing", smoothing, "additive smoothing for --calibration")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
    app.add_flag("--all-coefficients", all_coefficients, "plot every coefficient, not only the focal ones");
    fit.add_to(app);
  }

  int run(const CLI::App& app, Manifest& manifest, bool deterministic) {
    if (confusion_path.empty() && calibration_path.empty()) {
      usage_error("one of --confusion or --calibration is required");
    }
    auto log = read_log(log_path);
    coxnet_confusion model;
    if (confusion_path == "identity") {
      coxnet_confusion_identity(&model);
    } else if (!confusion_path.empty()) {
      check(coxnet_confusion_read(confusion_path.c_str(), &model));
    } else {
      check(coxnet_confusion_estimate(calibration_path.c_str(), smoothing, &model));
    }
    coxnet_resample_options o;
    coxnet_resample_options_init(&o);
    o.fit = fit.resolve(log.get());
    o.realizations = realizations;
    o.master_seed = seed;
    o.threads = threads;

    prepare_directory(out_dir);
    manifest.snapshot(app);
    manifest.input("log", log_path);
    if (!confusion_path.empty() && confusion_path != "identity") manifest.input("confusion", confusion_path);
    if (!calibration_path.empty()) manifest.input("calibration", calibration_path);
    describe_window(manifest["config"], o.fit);

    coxnet_profile* raw = nullptr;
    check(coxnet_resample_run(log.get(), &o, &model, &raw));
    ProfileHandle profile(raw);
    check(coxnet_confusion_write(&model, in_dir(out_dir, "confusion.txt").c_str()));
    check(coxnet_profile_write_tables(profile.get(), out_dir.c_str()));
    std::size_t plots = 0;
    check(coxnet_profile_render(profile.get(), out_dir.c_str(), all_coefficients, deterministic, &plots));
    for (const char* name : {"confusion.txt", "profile_pos.tsv", "profile_neg.tsv", "summary.tsv"}) {
      manifest.output(name);
    }
    coxnet_profile_summary summary;
    check(coxnet_profile_summary_get(profile.get(), &summary));
    manifest["seeds"] = {{"master", seed},
                         {"rule", "realization k uses derive_seed(master, k)"},
                         {"first", coxnet_derive_seed(seed, 1)}};
    manifest["excluded"] = {{"pos", summary.excluded[0]}, {"neg", summary.excluded[1]}};
    manifest["plots"] = plots;
    std::cout << summary.realizations << " realizations; excluded pos " << summary.excluded[0] << ", neg "
              << summary.excluded[1] << "; " << plots << " plots\n";
    manifest.write(out_dir, "manifest.json");
    return 0;
  }
};

struct ReportCmd {
  std::string profile_dir;
  std::string out_dir;
  bool all_coefficients = false;

  void add_to(CLI::App& app) {
    app.add_option("profile", profile_dir, "directory holding profile_pos.tsv and profile_neg.tsv")->required();
    app.add_option("--out", out_dir, "output directory (default: the profile directory)");
    app.add_flag("--all-coefficients", all_coefficients, "plot every coefficient, not only the focal ones");
  }

  int run(const CLI::App& app, Manifest& manifest, bool deterministic) {
    if (out_dir.empty()) out_dir = profile_dir;
    coxnet_profile* raw = nullptr;
    check(coxnet_profile_read(profile_dir.c_str(), &raw));
    ProfileHandle profile(raw);
    prepare_directory(out_dir);
    manifest.snapshot(app);
    manifest.input("profile_pos", in_dir(profile_dir, "profile_pos.tsv"));
    manifest.input("profile_neg", in_dir(profile_dir, "profile_neg.tsv"));
    // Tables round-trip byte for byte, so rewriting them in place is harmless.
    check(coxnet_profile_write_tables(profile.get(), out_dir.c_str()));
    for (const char* name : {"profile_pos.tsv", "profile_neg.tsv", "summary.tsv"}) manifest.output(name);
    std::size_t plots = 0;
    check(coxnet_profile_render(profile.get(), out_dir.c_str(), all_coefficients, deterministic, &plots));
    manifest["plots"] = plots;
    std::cout << "rendered " << plots << " plots into " << out_dir << '\n';
    manifest.write(out_dir, "report_manifest.json");
    return 0;
  }
};

// CLI11 only reads the root app's config file, so subcommand files are
// applied here: keys fill options that were not given on the command line.
void apply_config(CLI::App& sub, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError& e) {
    throw Failure{COXNET_ERR_INPUT, "cannot read config file '" + path + "'"};
  } catch (const CLI::ParseError& e) {
    throw Failure{COXNET_ERR_USAGE, "config file '" + path + "': " + e.what()};
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub.get_name())) continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw Failure{COXNET_ERR_USAGE, "config file '" + path + "': unknown key '" + item.name + "'"};
    }
    if (opt->count() > 0) continue;
    try {
      for (const auto& value : item.inputs) opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw Failure{COXNET_ERR_USAGE, "config file '" + path + "': " + item.name + ": " + e.what()};
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cox intensity models for sentiment-labelled event streams on directed networks", "coxnet"};
  app.set_version_flag("--version", coxnet_version());
  app.require_subcommand(1);

  bool deterministic = false;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file; command-line flags take precedence");
    sub->add_flag("--deterministic", deterministic, "omit timestamps and wall-clock times from outputs");
  };

  IngestCmd ingest;
  SimulateCmd simulate;
  FitCmd fit;
  ResampleCmd resample;
  ReportCmd report;
  auto* ingest_app = app.add_subcommand("ingest", "validate an event log and print statistics");
  auto* simulate_app = app.add_subcommand("simulate", "simulate an event log from known coefficients");
  auto* fit_app = app.add_subcommand("fit", "fit the per-sentiment Cox models");
  auto* resample_app = app.add_subcommand("resample", "refit under random label reclassification");
  auto* report_app = app.add_subcommand("report", "re-render summary and plots from saved profiles");
  for (auto* sub : {ingest_app, simulate_app, fit_app, resample_app, report_app}) add_common(sub);
  ingest.add_to(*ingest_app);
  simulate.add_to(*simulate_app);
  fit.add_to(*fit_app);
  resample.add_to(*resample_app);
  report.add_to(*report_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : COXNET_ERR_USAGE;
  }

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!config_path.empty()) apply_config(*app.get_subcommands().front(), config_path);
    if (*ingest_app) {
      Manifest m("ingest", args, deterministic);
      if (!config_path.empty()) m.input("config", config_path);
      return ingest.run(*ingest_app, m);
    }
    if (*simulate_app) {
      Manifest m("simulate", args, deterministic);
      if (!config_path.empty()) m.input("config", config_path);
      return simulate.run(*simulate_app, m);
    }
    if (*fit_app) {
      Manifest m("fit", args, deterministic);
      if (!config_path.empty()) m.input("config", config_path);
      return fit.run(*fit_app, m);
    }
    if (*resample_app) {
      Manifest m("resample", args, deterministic);
      if (!config_path.empty()) m.input("config", config_path);
      return resample.run(*resample_app, m, deterministic);
    }
    Manifest m("report", args, deterministic);
    if (!config_path.empty()) m.input("config", config_path);
    return report.run(*report_app, m, deterministic);
  } catch (const Failure& f) {
    std::cerr << "coxnet: " << f.message << '\n';
    return f.status;
  } catch (const std::exception& e) {
    std::cerr << "coxnet: " << e.what() << '\n';
    return COXNET_ERR_INTERNAL;
  }
}
