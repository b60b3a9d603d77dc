#include "coxnet/coxnet.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "coxnet/covariates.hpp"
#include "coxnet/error.hpp"
#include "coxnet/event_stream.hpp"
#include "coxnet/fitter.hpp"
#include "coxnet/likelihood.hpp"
#include "coxnet/report.hpp"
#include "coxnet/resampler.hpp"
#include "coxnet/simulator.hpp"
#include "text_util.hpp"

#ifndef COXNET_VERSION
#define COXNET_VERSION "0.0.0"
#endif

struct coxnet_log {
  coxnet::EventLog log;
};

struct coxnet_fit {
  std::shared_ptr<const coxnet::PartialLikelihood> model;
  coxnet::FitResult result;
};

struct coxnet_profile {
  coxnet::ProfilePair profiles;
};

namespace {

using namespace coxnet;

std::string& last_error() {
  thread_local std::string message;
  return message;
}

coxnet_status fail(coxnet_status status, const char* what) {
  last_error() = what;
  return status;
}

template <class Body>
coxnet_status guard(Body&& body) noexcept {
  try {
    last_error().clear();
    return body();
  } catch (const ParseError& e) {
    return fail(COXNET_ERR_INPUT, e.what());
  } catch (const InvalidArgument& e) {
    return fail(COXNET_ERR_USAGE, e.what());
  } catch (const NumericalError& e) {
    return fail(COXNET_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(COXNET_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(COXNET_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(COXNET_ERR_INTERNAL, "unknown error");
  }
}

template <class T>
void require(const T* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " must not be NULL");
}

Sentiment to_sentiment(int s) {
  if (s == COXNET_SENTIMENT_POS) return Sentiment::Positive;
  if (s == COXNET_SENTIMENT_NEG) return Sentiment::Negative;
  throw InvalidArgument("unknown sentiment " + std::to_string(s));
}

RiskSetPolicy to_policy(const coxnet_fit_options& o) {
  RiskSetPolicy policy;
  if (o.risk_set == COXNET_RISK_ALL_NODES) {
    policy.mode = RiskSetMode::AllNodes;
  } else if (o.risk_set == COXNET_RISK_EVER_ACTIVE) {
    policy.mode = RiskSetMode::EverActive;
  } else {
    throw InvalidArgument("unknown risk set mode " + std::to_string(o.risk_set));
  }
  return policy;
}

FitConfig to_fit_config(const coxnet_fit_options& o) {
  FitConfig c;
  c.max_iterations = o.max_iterations;
  c.gradient_tolerance = o.gradient_tolerance;
  c.step_halving_limit = o.step_halving_limit;
  c.ridge = o.ridge;
  c.confidence_level = o.confidence_level;
  c.validate();
  return c;
}

CovariateSpec to_spec(const char* text, const char* fallback) {
  return CovariateSpec::parse(text ? text : fallback);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  return out;
}

std::string join(const char* directory, const std::string& name) {
  return (std::filesystem::path(directory) / name).string();
}

NodeIndex parse_node_token(std::string_view token, std::size_t nodes, std::size_t line) {
  if (!token.empty() && token.front() == 'u') token.remove_prefix(1);
  auto v = detail::parse_double(token);
  if (!v || *v < 0 || *v != std::floor(*v) || *v >= static_cast<double>(nodes)) {
    throw ParseError(line, "invalid node '" + std::string(token) + "'");
  }
  return static_cast<NodeIndex>(*v);
}

std::vector<std::pair<NodeIndex, NodeIndex>> read_edge_list(const std::string& path, std::size_t nodes) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open edge list '" + path + "'");
  std::vector<std::pair<NodeIndex, NodeIndex>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto fields = detail::split_ws(view);
    if (fields.size() != 2) throw ParseError(line_no, "expected '<follower> <followee>'");
    edges.emplace_back(parse_node_token(fields[0], nodes, line_no),
                       parse_node_token(fields[1], nodes, line_no));
  }
  return edges;
}

Eigen::VectorXd to_vector(const double* data, std::size_t length) {
  if (data == nullptr) return {};
  return Eigen::Map<const Eigen::VectorXd>(data, static_cast<Eigen::Index>(length));
}

ConfusionModel to_model(const coxnet_confusion& c) {
  ConfusionModel m;
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    for (std::size_t b = 0; b < kLabelCount; ++b) m.q[a][b] = c.q[a][b];
  }
  return m;
}

void from_model(const ConfusionModel& m, coxnet_confusion* out) {
  for (std::size_t a = 0; a < kLabelCount; ++a) {
    for (std::size_t b = 0; b < kLabelCount; ++b) out->q[a][b] = m.q[a][b];
  }
}

}  // namespace

extern "C" {

const char* coxnet_version(void) { return COXNET_VERSION; }

const char* coxnet_last_error(void) { return last_error().c_str(); }

coxnet_status coxnet_log_read(const char* path, coxnet_log** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new coxnet_log{read_log_file(path)};
    return COXNET_OK;
  });
}

coxnet_status coxnet_log_parse(const char* text, size_t length, coxnet_log** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    if (text == nullptr && length != 0) throw InvalidArgument("text must not be NULL");
    *out = new coxnet_log{parse_log_text(std::string_view(text ? text : "", length))};
    return COXNET_OK;
  });
}

coxnet_status coxnet_log_write(const coxnet_log* log, const char* path,
                               const char* const* header_lines, size_t header_count) {
  return guard([&] {
    require(log, "log");
    require(path, "path");
    std::vector<std::string> header;
    for (size_t k = 0; k < header_count; ++k) header.emplace_back(header_lines[k]);
    write_log_file(path, log->log, header);
    return COXNET_OK;
  });
}

coxnet_status coxnet_log_stats_get(const coxnet_log* log, coxnet_log_stats* out) {
  return guard([&] {
    require(log, "log");
    require(out, "out");
    const auto& c = log->log.counts();
    *out = coxnet_log_stats{};
    out->events = log->log.size();
    out->nodes = log->log.node_count();
    out->tweets = c.tweets;
    out->follows = c.follows;
    for (size_t k = 0; k < kLabelCount; ++k) out->labels[k] = c.by_label[k];
    out->duplicate_follows_dropped = c.duplicate_follows_dropped;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out->first_time = log->log.empty() ? nan : log->log.events().front().time;
    out->last_time = log->log.empty() ? nan : log->log.events().back().time;
    return COXNET_OK;
  });
}

void coxnet_log_free(coxnet_log* log) { delete log; }

void coxnet_fit_options_init(coxnet_fit_options* o) {
  if (!o) return;
  const FitConfig defaults;
  o->covariates = nullptr;
  o->risk_set = COXNET_RISK_ALL_NODES;
  o->standardize = 0;
  o->t_start = -std::numeric_limits<double>::infinity();
  o->t_end = std::numeric_limits<double>::infinity();
  o->max_iterations = defaults.max_iterations;
  o->gradient_tolerance = defaults.gradient_tolerance;
  o->step_halving_limit = defaults.step_halving_limit;
  o->ridge = defaults.ridge;
  o->confidence_level = defaults.confidence_level;
}

coxnet_status coxnet_fit_run(const coxnet_log* log, const coxnet_fit_options* options, int sentiment,
                             coxnet_fit** out) {
  return guard([&] {
    require(log, "log");
    require(options, "options");
    require(out, "out");
    *out = nullptr;
    const FitConfig config = to_fit_config(*options);
    auto data = std::make_shared<const WindowedData>(log->log, to_spec(options->covariates, "full"),
                                                     options->t_start, options->t_end);
    auto model = std::make_shared<const PartialLikelihood>(
        std::move(data), to_sentiment(sentiment), to_policy(*options), options->standardize != 0);
    auto handle = std::make_unique<coxnet_fit>();
    handle->result = fit(*model, config);
    handle->model = std::move(model);
    const FitResult& r = handle->result;
    *out = handle.release();
    if (!r.converged) {
      std::string why = r.separation ? "coefficients diverged past the separation bound"
                                     : "Newton iterations did not reach the gradient tolerance";
      return fail(COXNET_ERR_NUMERIC, why.c_str());
    }
    return COXNET_OK;
  });
}

coxnet_status coxnet_fit_summary_get(const coxnet_fit* fit, coxnet_fit_summary* out) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    const FitResult& r = fit->result;
    out->dimension = r.names.size();
    out->events = r.events;
    out->converged = r.converged ? 1 : 0;
    out->iterations = r.iterations;
    out->ridge_applied = r.ridge_applied ? 1 : 0;
    out->separation = r.separation ? 1 : 0;
    out->loglik = r.loglik;
    out->gradient_norm = r.gradient_norm;
    return COXNET_OK;
  });
}

coxnet_status coxnet_fit_coefficient(const coxnet_fit* fit, size_t index, coxnet_coefficient* out) {
  return guard([&] {
    require(fit, "fit");
    require(out, "out");
    const FitResult& r = fit->result;
    if (index >= r.names.size()) throw InvalidArgument("coefficient index out of range");
    const auto k = static_cast<Eigen::Index>(index);
    out->name = r.names[index].c_str();
    out->estimate = r.beta[k];
    out->se = r.se[k];
    out->ci_lower = r.ci_lower[k];
    out->ci_upper = r.ci_upper[k];
    out->significance = static_cast<int>(classify(r.ci_lower[k], r.ci_upper[k]));
    return COXNET_OK;
  });
}

coxnet_status coxnet_fit_write_table(const coxnet_fit* fit, const char* path,
                                     const char* const* metadata, size_t pairs) {
  return guard([&] {
    require(fit, "fit");
    require(path, "path");
    Metadata extra;
    for (size_t k = 0; k < pairs; ++k) extra.emplace_back(metadata[2 * k], metadata[2 * k + 1]);
    auto out = open_output(path);
    write_fit_table(out, fit->result, extra);
    return COXNET_OK;
  });
}

coxnet_status coxnet_fit_write_baseline(const coxnet_fit* fit, const char* path) {
  return guard([&] {
    require(fit, "fit");
    require(path, "path");
    auto out = open_output(path);
    write_baseline(out, fit->model->cumulative_baseline(fit->result.beta));
    return COXNET_OK;
  });
}

void coxnet_fit_free(coxnet_fit* fit) { delete fit; }

coxnet_status coxnet_trace_write(const coxnet_log* log, const coxnet_fit_options* options,
                                 const char* path, int actors_only) {
  return guard([&] {
    require(log, "log");
    require(options, "options");
    require(path, "path");
    WindowedData data(log->log, to_spec(options->covariates, "full"), options->t_start, options->t_end);
    auto out = open_output(path);
    write_covariate_trace(out, data, log->log.registry(), to_policy(*options), actors_only != 0);
    return COXNET_OK;
  });
}

void coxnet_sim_options_init(coxnet_sim_options* o) {
  if (!o) return;
  const SimConfig defaults;
  *o = coxnet_sim_options{};
  o->nodes = defaults.nodes;
  o->p_edge = defaults.network.p_edge;
  o->p_reciprocal = defaults.network.p_reciprocal;
  o->baseline_pos = defaults.baseline_pos;
  o->baseline_neg = defaults.baseline_neg;
  o->neutral_rate = defaults.neutral_rate;
  o->follow_rate = defaults.follow_rate;
  o->horizon = defaults.horizon;
  o->seed = defaults.seed;
}

coxnet_status coxnet_simulate(const coxnet_sim_options* o, coxnet_log** out) {
  return guard([&] {
    require(o, "options");
    require(out, "out");
    *out = nullptr;
    SimConfig config;
    config.nodes = o->nodes;
    config.network.p_edge = o->p_edge;
    config.network.p_reciprocal = o->p_reciprocal;
    if (o->edge_list_path) {
      config.network.model = NetworkModel::Given;
      config.network.edges = read_edge_list(o->edge_list_path, o->nodes);
    }
    config.spec = to_spec(o->covariates, "focal");
    config.beta_pos = to_vector(o->beta_pos, o->beta_pos_length);
    config.beta_neg = to_vector(o->beta_neg, o->beta_neg_length);
    config.baseline_pos = o->baseline_pos;
    config.baseline_neg = o->baseline_neg;
    config.neutral_rate = o->neutral_rate;
    config.follow_rate = o->follow_rate;
    config.horizon = o->horizon;
    config.seed = o->seed;
    *out = new coxnet_log{simulate(config).log};
    return COXNET_OK;
  });
}

void coxnet_confusion_identity(coxnet_confusion* out) {
  if (out) from_model(ConfusionModel::identity(), out);
}

coxnet_status coxnet_confusion_read(const char* path, coxnet_confusion* out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path);
    if (!in) throw ParseError(0, std::string("cannot open confusion matrix '") + path + "'");
    from_model(read_confusion_matrix(in), out);
    return COXNET_OK;
  });
}

coxnet_status coxnet_confusion_estimate(const char* calibration_path, double smoothing,
                                        coxnet_confusion* out) {
  return guard([&] {
    require(calibration_path, "calibration_path");
    require(out, "out");
    std::ifstream in(calibration_path);
    if (!in) throw ParseError(0, std::string("cannot open calibration set '") + calibration_path + "'");
    auto pairs = read_calibration(in);
    from_model(estimate_confusion(pairs, smoothing), out);
    return COXNET_OK;
  });
}

coxnet_status coxnet_confusion_write(const coxnet_confusion* model, const char* path) {
  return guard([&] {
    require(model, "model");
    require(path, "path");
    auto out = open_output(path);
    write_confusion_matrix(out, to_model(*model));
    return COXNET_OK;
  });
}

void coxnet_resample_options_init(coxnet_resample_options* o) {
  if (!o) return;
  coxnet_fit_options_init(&o->fit);
  const ResampleConfig defaults;
  o->realizations = defaults.realizations;
  o->master_seed = defaults.master_seed;
  o->threads = defaults.threads;
}

coxnet_status coxnet_resample_run(const coxnet_log* log, const coxnet_resample_options* o,
                                  const coxnet_confusion* model, coxnet_profile** out) {
  return guard([&] {
    require(log, "log");
    require(o, "options");
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    ResampleConfig config;
    config.realizations = o->realizations;
    config.master_seed = o->master_seed;
    config.fit = to_fit_config(o->fit);
    config.policy = to_policy(o->fit);
    config.standardize = o->fit.standardize != 0;
    config.t_start = o->fit.t_start;
    config.t_end = o->fit.t_end;
    config.threads = o->threads;
    auto handle = std::make_unique<coxnet_profile>();
    handle->profiles =
        run_profile(log->log, to_spec(o->fit.covariates, "full"), to_model(*model), config);
    *out = handle.release();
    return COXNET_OK;
  });
}

coxnet_status coxnet_profile_summary_get(const coxnet_profile* profile, coxnet_profile_summary* out) {
  return guard([&] {
    require(profile, "profile");
    require(out, "out");
    const auto& pos = profile->profiles.positive;
    const auto& neg = profile->profiles.negative;
    out->realizations = pos.realization_count();
    out->dimension = pos.names.size();
    out->included[0] = pos.included;
    out->excluded[0] = pos.excluded;
    out->included[1] = neg.included;
    out->excluded[1] = neg.excluded;
    return COXNET_OK;
  });
}

coxnet_status coxnet_profile_fractions(const coxnet_profile* profile, int sentiment,
                                       size_t coefficient, double* sig_pos, double* sig_neg,
                                       double* not_sig) {
  return guard([&] {
    require(profile, "profile");
    const auto& p = to_sentiment(sentiment) == Sentiment::Positive ? profile->profiles.positive
                                                                     : profile->profiles.negative;
    if (coefficient >= p.fractions.size()) throw InvalidArgument("coefficient index out of range");
    const auto& f = p.fractions[coefficient];
    if (sig_pos) *sig_pos = f.positive;
    if (sig_neg) *sig_neg = f.negative;
    if (not_sig) *not_sig = f.not_significant;
    return COXNET_OK;
  });
}

coxnet_status coxnet_profile_write_tables(const coxnet_profile* profile, const char* directory) {
  return guard([&] {
    require(profile, "profile");
    require(directory, "directory");
    const auto& pair = profile->profiles;
    {
      auto out = open_output(join(directory, "profile_pos.tsv"));
      write_profile_table(out, pair.positive);
    }
    {
      auto out = open_output(join(directory, "profile_neg.tsv"));
      write_profile_table(out, pair.negative);
    }
    auto out = open_output(join(directory, "summary.tsv"));
    write_profile_summary(out, {&pair.positive, &pair.negative});
    return COXNET_OK;
  });
}

coxnet_status coxnet_profile_read(const char* directory, coxnet_profile** out) {
  return guard([&] {
    require(directory, "directory");
    require(out, "out");
    *out = nullptr;
    auto handle = std::make_unique<coxnet_profile>();
    for (const char* name : {"profile_pos.tsv", "profile_neg.tsv"}) {
      const std::string path = join(directory, name);
      std::ifstream in(path);
      if (!in) throw ParseError(0, "cannot open profile table '" + path + "'");
      RealizationProfile p = read_profile_table(in);
      (p.sentiment == Sentiment::Positive ? handle->profiles.positive : handle->profiles.negative) =
          std::move(p);
    }
    if (handle->profiles.positive.names.empty() || handle->profiles.negative.names.empty()) {
      throw ParseError(0, "profile tables must cover both sentiments");
    }
    *out = handle.release();
    return COXNET_OK;
  });
}

coxnet_status coxnet_profile_render(const coxnet_profile* profile, const char* directory,
                                    int all_coefficients, int deterministic, size_t* plots_written) {
  return guard([&] {
    require(profile, "profile");
    require(directory, "directory");
    size_t written = 0;
    for (const RealizationProfile* p : {&profile->profiles.positive, &profile->profiles.negative}) {
      for (size_t k = 0; k < p->names.size(); ++k) {
        auto d = CovariateDescriptor::from_name(p->names[k]);
        if (!all_coefficients && !(d && is_focal(*d))) continue;
        auto out = open_output(join(directory, profile_plot_name(*p, k)));
        out << render_profile_svg(*p, k, deterministic != 0);
        ++written;
      }
    }
    if (plots_written) *plots_written = written;
    return COXNET_OK;
  });
}

void coxnet_profile_free(coxnet_profile* profile) { delete profile; }

coxnet_status coxnet_file_sha256(const char* path, char* out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    const std::string hex = sha256_file(path);
    hex.copy(out, 64);
    out[64] = '\0';
    return COXNET_OK;
  });
}

uint64_t coxnet_derive_seed(uint64_t master, uint64_t counter) { return derive_seed(master, counter); }

}  // extern "C"
