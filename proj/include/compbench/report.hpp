#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "compbench/stats.hpp"

namespace compbench {

/// Per-item scores of one metric for one encoder, with the matching diversity values.
struct MetricScores {
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::vector<double> entropy;  // H^quad for A-COAT, H for A-TRE
  std::size_t n_degenerate = 0;
};

struct EncoderScores {
  std::string name;
  std::optional<MetricScores> coat;
  std::optional<MetricScores> tre;
  /// Provenance key/value pairs (pool and balance hashes) the scores were computed from.
  std::map<std::string, std::string> provenance;
};

struct EncoderRow {
  std::string name;
  std::optional<double> coat_mean, coat_std, tre_mean, tre_std;
  std::size_t coat_n = 0, tre_n = 0;
};

struct PairwiseRow {
  std::string metric;
  stats::PairedTestResult test;
  std::size_t n = 0;
};

struct RegressionRow {
  std::string model, metric;
  std::optional<stats::RegressionFit> fit;
};

struct BoxRow {
  std::string model, metric;
  stats::BoxSummary box;
};

struct RunReport {
  std::vector<EncoderRow> rows;
  std::vector<PairwiseRow> pairwise;
  std::vector<RegressionRow> regressions;
  std::vector<BoxRow> boxes;
  std::map<std::string, std::string> provenance;
};

/// Baselines first (downsample, random), then the rest alphabetically.
std::vector<std::string> report_order(std::vector<std::string> names);

/// Builds the report in memory. Throws IntegrityError if encoders disagree on provenance.
RunReport build_report(const std::vector<EncoderScores>& encoders,
                       const std::map<std::string, std::string>& run_provenance);

/// Writes table.csv, table.md, pairwise_tests.csv, regressions.csv, box_summaries.csv,
/// fig_box_coat.svg, fig_box_tre.svg, fig_reg_<model>_<metric>.svg and report.json.
void write_report(const std::filesystem::path& dir, const RunReport& report,
                  const std::vector<EncoderScores>& encoders);

/// Loads per-encoder score files written by the pipeline (coat_scores.csv, tre_scores.csv and
/// their summaries) from `dir`.
EncoderScores load_encoder_scores(const std::filesystem::path& dir, const std::string& name);

}  // namespace compbench
