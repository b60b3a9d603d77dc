#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coxnet/fitter.hpp"
#include "coxnet/resampler.hpp"

namespace coxnet {

using Metadata = std::vector<std::pair<std::string, std::string>>;

// "# key: value" header block followed by a tab-separated table with columns
// covariate, estimate, se, ci_lo, ci_hi, significance.
void write_fit_table(std::ostream& out, const FitResult& result, const Metadata& extra = {});
void write_baseline(std::ostream& out, const std::vector<BaselineStep>& steps);

// One row per coefficient x realization, coefficient-major.
void write_profile_table(std::ostream& out, const RealizationProfile& profile);
// Reads a table written by write_profile_table and re-summarizes it.
RealizationProfile read_profile_table(std::istream& in);
// One row per sentiment x coefficient: sentiment, covariate, mean_estimate,
// sig_pos_pct, sig_neg_pct, not_sig_pct, included, excluded.
void write_profile_summary(std::ostream& out, const std::vector<const RealizationProfile*>& profiles);
std::string format_percent(double fraction);  // two decimals, no sign

// Vector-graphics CI profile for one coefficient: one horizontal segment per
// included realization, a marker at each estimate, a dotted zero line, and
// the significance percentages in the top-left corner.
std::string render_profile_svg(const RealizationProfile& profile, std::size_t coefficient,
                               bool deterministic);
std::string profile_plot_name(const RealizationProfile& profile, std::size_t coefficient);

// Covariate rows at every opinionated event time inside the window, for each
// node at risk (or only the event actors).
void write_covariate_trace(std::ostream& out, const WindowedData& data,
                           const NodeRegistry& registry, RiskSetPolicy policy, bool actors_only);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace coxnet
