#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "coxnet/coxnet.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coxnet_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

coxnet_log* parse(const std::string& text) {
  coxnet_log* log = nullptr;
  EXPECT_EQ(coxnet_log_parse(text.data(), text.size(), &log), COXNET_OK) << coxnet_last_error();
  return log;
}

coxnet_log* simulated(std::uint64_t seed) {
  coxnet_sim_options o;
  coxnet_sim_options_init(&o);
  o.nodes = 60;
  o.p_edge = 0.08;
  o.baseline_pos = o.baseline_neg = o.neutral_rate = 0.02;
  o.horizon = 300;
  o.seed = seed;
  coxnet_log* log = nullptr;
  EXPECT_EQ(coxnet_simulate(&o, &log), COXNET_OK) << coxnet_last_error();
  return log;
}

}  // namespace

TEST(CApi, VersionAndSeeds) {
  EXPECT_STREQ(coxnet_version(), "0.1.0");
  EXPECT_NE(coxnet_derive_seed(1, 0), coxnet_derive_seed(1, 1));
  EXPECT_EQ(coxnet_derive_seed(7, 3), coxnet_derive_seed(7, 3));
}

TEST(CApi, ParseErrorMapsToInputStatus) {
  coxnet_log* log = reinterpret_cast<coxnet_log*>(0x1);
  const std::string text = "1.0 TWEET u0 POS\n2.0 TWEET u1 MAYBE\n";
  EXPECT_EQ(coxnet_log_parse(text.data(), text.size(), &log), COXNET_ERR_INPUT);
  EXPECT_EQ(log, nullptr);
  EXPECT_NE(std::string(coxnet_last_error()).find("2"), std::string::npos);
}

TEST(CApi, MissingFileMapsToInputStatus) {
  coxnet_log* log = nullptr;
  EXPECT_EQ(coxnet_log_read("/nonexistent/coxnet/events.log", &log), COXNET_ERR_INPUT);
  EXPECT_EQ(log, nullptr);
  EXPECT_STRNE(coxnet_last_error(), "");
}

TEST(CApi, NullArgumentsAreUsageErrors) {
  EXPECT_EQ(coxnet_log_parse(nullptr, 0, nullptr), COXNET_ERR_USAGE);
  coxnet_log_stats stats;
  EXPECT_EQ(coxnet_log_stats_get(nullptr, &stats), COXNET_ERR_USAGE);
  coxnet_log_free(nullptr);
  coxnet_fit_free(nullptr);
  coxnet_profile_free(nullptr);
}

TEST(CApi, LogStats) {
  coxnet_log* log = parse("0 FOLLOW u0 u1\n0 FOLLOW u0 u1\n1 TWEET u1 POS\n2 TWEET u0 UNR\n");
  coxnet_log_stats s;
  ASSERT_EQ(coxnet_log_stats_get(log, &s), COXNET_OK);
  EXPECT_EQ(s.events, 3u);
  EXPECT_EQ(s.nodes, 2u);
  EXPECT_EQ(s.tweets, 2u);
  EXPECT_EQ(s.follows, 1u);
  EXPECT_EQ(s.labels[COXNET_LABEL_POS], 1u);
  EXPECT_EQ(s.labels[COXNET_LABEL_UNR], 1u);
  EXPECT_EQ(s.duplicate_follows_dropped, 1u);
  EXPECT_EQ(s.first_time, 0.0);
  EXPECT_EQ(s.last_time, 2.0);
  coxnet_log_free(log);

  log = parse("");
  ASSERT_EQ(coxnet_log_stats_get(log, &s), COXNET_OK);
  EXPECT_TRUE(std::isnan(s.first_time));
  coxnet_log_free(log);
}

TEST(CApi, InvalidSimulationIsUsageError) {
  coxnet_sim_options o;
  coxnet_sim_options_init(&o);
  o.nodes = 0;
  coxnet_log* log = nullptr;
  EXPECT_EQ(coxnet_simulate(&o, &log), COXNET_ERR_USAGE);
  EXPECT_EQ(log, nullptr);
}

TEST(CApi, FitLifecycle) {
  coxnet_log* log = simulated(3);
  coxnet_fit_options o;
  coxnet_fit_options_init(&o);
  o.covariates = "focal";
  coxnet_fit* fit = nullptr;
  ASSERT_EQ(coxnet_fit_run(log, &o, COXNET_SENTIMENT_POS, &fit), COXNET_OK) << coxnet_last_error();
  coxnet_fit_summary s;
  ASSERT_EQ(coxnet_fit_summary_get(fit, &s), COXNET_OK);
  EXPECT_EQ(s.dimension, 6u);
  EXPECT_TRUE(s.converged);
  EXPECT_GT(s.events, 0u);
  coxnet_coefficient c;
  ASSERT_EQ(coxnet_fit_coefficient(fit, 0, &c), COXNET_OK);
  EXPECT_STREQ(c.name, "f1_pos");
  EXPECT_LE(c.ci_lower, c.estimate);
  EXPECT_GE(c.ci_upper, c.estimate);
  EXPECT_EQ(coxnet_fit_coefficient(fit, 6, &c), COXNET_ERR_USAGE);

  auto dir = scratch("fit");
  const char* meta[] = {"source", "unit"};
  EXPECT_EQ(coxnet_fit_write_table(fit, (dir / "fit.tsv").c_str(), meta, 1), COXNET_OK);
  EXPECT_EQ(coxnet_fit_write_baseline(fit, (dir / "baseline.tsv").c_str()), COXNET_OK);
  EXPECT_EQ(coxnet_fit_write_table(fit, "/nonexistent/dir/fit.tsv", nullptr, 0), COXNET_ERR_USAGE);
  std::ifstream in(dir / "fit.tsv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(all.find("# source: unit\n"), std::string::npos);
  char digest[65];
  EXPECT_EQ(coxnet_file_sha256((dir / "fit.tsv").c_str(), digest), COXNET_OK);
  EXPECT_EQ(std::strlen(digest), 64u);
  coxnet_fit_free(fit);
  coxnet_log_free(log);
}

TEST(CApi, NonConvergenceStillReturnsFit) {
  coxnet_log* log = simulated(4);
  coxnet_fit_options o;
  coxnet_fit_options_init(&o);
  o.covariates = "focal";
  o.max_iterations = 1;
  o.gradient_tolerance = 1e-14;
  coxnet_fit* fit = nullptr;
  EXPECT_EQ(coxnet_fit_run(log, &o, COXNET_SENTIMENT_NEG, &fit), COXNET_ERR_NUMERIC);
  ASSERT_NE(fit, nullptr);
  coxnet_fit_summary s;
  ASSERT_EQ(coxnet_fit_summary_get(fit, &s), COXNET_OK);
  EXPECT_FALSE(s.converged);
  coxnet_fit_free(fit);
  coxnet_log_free(log);
}

TEST(CApi, BadFitOptions) {
  coxnet_log* log = simulated(5);
  coxnet_fit_options o;
  coxnet_fit_options_init(&o);
  coxnet_fit* fit = nullptr;
  o.covariates = "f9_pos";
  EXPECT_EQ(coxnet_fit_run(log, &o, COXNET_SENTIMENT_POS, &fit), COXNET_ERR_USAGE);
  coxnet_fit_options_init(&o);
  o.confidence_level = 1.5;
  EXPECT_EQ(coxnet_fit_run(log, &o, COXNET_SENTIMENT_POS, &fit), COXNET_ERR_USAGE);
  coxnet_fit_options_init(&o);
  EXPECT_EQ(coxnet_fit_run(log, &o, 7, &fit), COXNET_ERR_USAGE);
  EXPECT_EQ(fit, nullptr);
  coxnet_log_free(log);
}

TEST(CApi, ProfileRoundTripThroughFiles) {
  coxnet_log* log = simulated(6);
  coxnet_resample_options o;
  coxnet_resample_options_init(&o);
  o.fit.covariates = "focal";
  o.realizations = 3;
  o.master_seed = 11;
  coxnet_confusion q;
  coxnet_confusion_identity(&q);
  coxnet_profile* profile = nullptr;
  ASSERT_EQ(coxnet_resample_run(log, &o, &q, &profile), COXNET_OK) << coxnet_last_error();
  coxnet_profile_summary s;
  ASSERT_EQ(coxnet_profile_summary_get(profile, &s), COXNET_OK);
  EXPECT_EQ(s.realizations, 3u);
  EXPECT_EQ(s.dimension, 6u);

  auto dir = scratch("profile");
  ASSERT_EQ(coxnet_profile_write_tables(profile, dir.c_str()), COXNET_OK);
  size_t plots = 0;
  ASSERT_EQ(coxnet_profile_render(profile, dir.c_str(), 0, 1, &plots), COXNET_OK);
  EXPECT_EQ(plots, 12u);
  coxnet_profile* back = nullptr;
  ASSERT_EQ(coxnet_profile_read(dir.c_str(), &back), COXNET_OK) << coxnet_last_error();
  for (int sent : {COXNET_SENTIMENT_POS, COXNET_SENTIMENT_NEG}) {
    for (size_t k = 0; k < 6; ++k) {
      double a[3], b[3];
      ASSERT_EQ(coxnet_profile_fractions(profile, sent, k, &a[0], &a[1], &a[2]), COXNET_OK);
      ASSERT_EQ(coxnet_profile_fractions(back, sent, k, &b[0], &b[1], &b[2]), COXNET_OK);
      for (int j = 0; j < 3; ++j) EXPECT_EQ(a[j], b[j]);
      // Identity relabelling: every realization agrees, so fractions are 0 or 1.
      for (int j = 0; j < 3; ++j) EXPECT_TRUE(a[j] == 0.0 || a[j] == 1.0);
    }
  }
  coxnet_profile* missing = nullptr;
  EXPECT_EQ(coxnet_profile_read("/nonexistent/coxnet", &missing), COXNET_ERR_INPUT);
  coxnet_profile_free(back);
  coxnet_profile_free(profile);
  coxnet_log_free(log);
}

TEST(CApi, ConfusionEstimateAndRead) {
  auto dir = scratch("confusion");
  {
    std::ofstream cal(dir / "cal.tsv");
    cal << "POS POS\nPOS NEG\nNEG NEG\nNEU NEU\nUNR UNR\n";
  }
  coxnet_confusion q;
  ASSERT_EQ(coxnet_confusion_estimate((dir / "cal.tsv").c_str(), 0.0, &q), COXNET_OK) << coxnet_last_error();
  EXPECT_EQ(q.q[COXNET_LABEL_POS][COXNET_LABEL_POS], 0.5);
  EXPECT_EQ(q.q[COXNET_LABEL_POS][COXNET_LABEL_NEG], 0.5);
  ASSERT_EQ(coxnet_confusion_write(&q, (dir / "q.txt").c_str()), COXNET_OK);
  coxnet_confusion r;
  ASSERT_EQ(coxnet_confusion_read((dir / "q.txt").c_str(), &r), COXNET_OK);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_EQ(q.q[a][b], r.q[a][b]);
  {
    std::ofstream bad(dir / "bad.txt");
    bad << "0.5 0.5 0 0\n1 0 0 0\n";
  }
  EXPECT_EQ(coxnet_confusion_read((dir / "bad.txt").c_str(), &r), COXNET_ERR_INPUT);
}
