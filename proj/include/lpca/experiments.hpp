#pragma once

#include "lpca/evaluate.hpp"
#include "lpca/io.hpp"
#include "lpca/selection.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lpca {

struct CompareConfig {
  Index exact_rank = 5;
  std::vector<double> tolerances{1e-6, 1e-8};
  int max_iter = 10000;
  double gamma = 1.0;
  int n_lambda = 30;
  double fraction = 0.1;
  int path_max_iter = 500;
  int extend_max_iter = 10000;
  PathStart path_start = PathStart::Auto;
  std::uint64_t seed = 0;
  Link link = Link::Logit;
  Index sigma_components = 10;
};

struct CompareRow {
  std::string penalty;
  double eps_f = 0.0;  // NaN for the full-information baseline
  MetricsReport metrics;
  int iterations = 0;
  bool converged = true;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::vector<std::string> sigma_columns;
  /// sigma_components × sigma_columns.size(); missing components are 0.
  Eigen::MatrixXd sigma_table;
  std::optional<SelectionPath> gdp_path;
  std::optional<SelectionPath> nuclear_path;
};

/// Exact-rank, GDP and nuclear fits at every tolerance plus the
/// full-information baseline, scored against the dataset's ground truth.
CompareResult run_compare(const io::LoadedDataset& data, const CompareConfig& cfg);

struct SweepConfig {
  std::vector<double> snrs;
  int repeats = 3;
  bool balanced = true;
  Index rows = 160;
  Index cols = 410;
  Index rank = 5;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  int n_lambda = 30;
  double fraction = 0.1;
  double eps_f = 1e-6;
  int max_iter = 500;
  int extend_max_iter = 10000;
  PathStart path_start = PathStart::Auto;
  Index max_full_rank = 10;
  Link link = Link::Logit;
  /// 0 means LPCA_THREADS or the hardware concurrency.
  int threads = 0;
};

struct SweepRow {
  double snr = 0.0;
  int repeat = 0;
  std::string model;
  double rmse_z = 0.0;
  double rmse_theta = 0.0;
  double mhd_pi = 0.0;
  Index rank = 0;
  std::string error;  // empty on success
};

/// Dataset seed of repeat r is seed + r for every SNR, so datasets in one
/// repeat differ only by the scale of Z.
std::vector<SweepRow> run_snr_sweep(const SweepConfig& cfg);

/// Worker count honoring LPCA_THREADS, capped at `work_items`.
int sweep_threads(int requested, std::size_t work_items);

}  // namespace lpca
