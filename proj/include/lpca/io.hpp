#pragma once

#include "lpca/binary_matrix.hpp"
#include "lpca/evaluate.hpp"
#include "lpca/simulator.hpp"
#include "lpca/solver.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace lpca::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Comma-separated matrix, one row per line, no header. Non-finite entries
/// are written as NA.
void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);
void write_vector_csv(const fs::path& path, const Eigen::VectorXd& v);

/// Numeric CSV. A first line containing a non-numeric token is treated as a
/// header; empty fields and NA read as NaN.
Eigen::MatrixXd read_matrix_csv(const fs::path& path);
Eigen::VectorXd read_vector_csv(const fs::path& path);

/// Binary CSV with entries in {0, 1, NA, empty}. Rejects other values and
/// columns with no observed entry.
BinaryMatrix read_binary_csv(const fs::path& path);
void write_binary_csv(const fs::path& path, const BinaryMatrix& X);

json model_to_json(const LpcaModel& model);
LpcaModel model_from_json(const json& doc);
void save_model(const fs::path& path, const LpcaModel& model);
LpcaModel load_model(const fs::path& path);

json metrics_to_json(const MetricsReport& report);

/// Writes X.csv, theta.csv, z.csv, mu.csv, pi.csv, xstar.csv and meta.json.
void write_dataset_dir(const fs::path& dir, const SimulatedDataset& ds, const json& config);

struct LoadedDataset {
  BinaryMatrix X;
  GroundTruth truth;
  Eigen::MatrixXd Xstar;
  json meta;
};

/// Reads a directory produced by `write_dataset_dir`. Throws naming the first
/// missing file.
LoadedDataset load_dataset_dir(const fs::path& dir);
GroundTruth load_truth_dir(const fs::path& dir);

void write_json(const fs::path& path, const json& doc);
json read_json(const fs::path& path);

}  // namespace lpca::io
