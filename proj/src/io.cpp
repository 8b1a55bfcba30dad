#include "lpca/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace lpca::io {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return in;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                            : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool is_missing_token(std::string_view t) { return t.empty() || t == "NA" || t == "NaN" || t == "nan"; }

bool parse_number(std::string_view t, double& out) {
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

// Rows of parsed fields with NaN for missing tokens; skips a header line.
std::vector<std::vector<double>> read_numeric_rows(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool header = false;
    for (std::string_view f : fields) {
      double v = 0.0;
      if (is_missing_token(f)) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else if (parse_number(f, v)) {
        row.push_back(v);
      } else if (first) {
        header = true;
        break;
      } else {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": cannot parse field '" + std::string(f) + "'");
      }
    }
    first = false;
    if (header) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(rows.front().size()) + " fields, found " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index cols_if_empty) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  Eigen::Index c = cols_if_empty;
  if (r > 0) c = static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != c) throw std::runtime_error("ragged matrix in model JSON");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = values.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

// NaN does not survive JSON; store it as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out = open_out(path);
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(m(i, j));
    }
    out << line << '\n';
  }
}

void write_vector_csv(const fs::path& path, const Eigen::VectorXd& v) {
  write_matrix_csv(path, Eigen::MatrixXd(v));
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) { return to_matrix(read_numeric_rows(path)); }

Eigen::VectorXd read_vector_csv(const fs::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error("'" + path.string() + "' is not a single row or column");
}

BinaryMatrix read_binary_csv(const fs::path& path) {
  const Eigen::MatrixXd raw = read_matrix_csv(path);
  if (raw.size() == 0) throw std::runtime_error("'" + path.string() + "' contains no data");
  BinaryMatrix X;
  try {
    X = BinaryMatrix::from_dense(raw);
    X.require_observed_columns();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return X;
}

void write_binary_csv(const fs::path& path, const BinaryMatrix& X) {
  std::ofstream out = open_out(path);
  std::string line;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j > 0) line += ',';
      line += X.observed(i, j) ? (X.value(i, j) != 0.0 ? "1" : "0") : "NA";
    }
    out << line << '\n';
  }
}

json model_to_json(const LpcaModel& model) {
  json doc;
  doc["mu"] = vector_to_json(model.mu);
  doc["S"] = vector_to_json(model.S);
  doc["U"] = matrix_rows(model.U);
  doc["V"] = matrix_rows(model.V);
  doc["link"] = to_string(model.link);
  doc["penalty"] = {{"family", to_string(model.penalty.family)},
                    {"lambda", model.penalty.lambda},
                    {"gamma", model.penalty.gamma},
                    {"a", model.penalty.a},
                    {"q", model.penalty.q},
                    {"rank", model.penalty.rank}};
  const FitDiagnostics& d = model.diagnostics;
  doc["diagnostics"] = {{"objective_trace", d.objective_trace},
                        {"iterations", d.iterations},
                        {"converged", d.converged},
                        {"final_objective", d.final_objective},
                        {"capped", d.capped}};
  return doc;
}

LpcaModel model_from_json(const json& doc) {
  LpcaModel m;
  m.mu = vector_from_json(doc.at("mu"));
  m.S = vector_from_json(doc.at("S"));
  m.U = matrix_from_rows(doc.at("U"), m.S.size());
  m.V = matrix_from_rows(doc.at("V"), m.S.size());
  if (m.V.rows() == 0 && m.mu.size() > 0) m.V.resize(m.mu.size(), m.S.size());
  if (m.U.cols() != m.S.size() || m.V.cols() != m.S.size() || m.V.rows() != m.mu.size()) {
    throw std::runtime_error("model JSON has inconsistent factor shapes");
  }
  SingularSpectrum check(m.S);
  if (doc.contains("link")) m.link = parse_link(doc.at("link").get<std::string>());
  if (doc.contains("penalty")) {
    const json& p = doc.at("penalty");
    m.penalty.family = parse_penalty_family(p.value("family", std::string("gdp")));
    m.penalty.lambda = p.value("lambda", 0.0);
    m.penalty.gamma = p.value("gamma", 1.0);
    m.penalty.a = p.value("a", 3.7);
    m.penalty.q = p.value("q", 0.5);
    m.penalty.rank = p.value("rank", 0);
  }
  if (doc.contains("diagnostics")) {
    const json& d = doc.at("diagnostics");
    m.diagnostics.objective_trace = d.value("objective_trace", std::vector<double>{});
    m.diagnostics.iterations = d.value("iterations", 0);
    m.diagnostics.converged = d.value("converged", false);
    m.diagnostics.capped = d.value("capped", false);
    m.diagnostics.final_objective =
        d.value("final_objective", m.diagnostics.objective_trace.empty()
                                       ? 0.0
                                       : m.diagnostics.objective_trace.back());
  }
  return m;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("'" + path.string() + "': " + e.what());
  }
}

void save_model(const fs::path& path, const LpcaModel& model) { write_json(path, model_to_json(model)); }

LpcaModel load_model(const fs::path& path) {
  try {
    return model_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("'" + path.string() + "': " + e.what());
  }
}

json metrics_to_json(const MetricsReport& report) {
  return json{{"rmse_theta", number_or_null(report.rmse_theta)},
              {"rmse_z", number_or_null(report.rmse_z)},
              {"rmse_mu", number_or_null(report.rmse_mu)},
              {"mhd_pi", number_or_null(report.mhd_pi)},
              {"estimated_rank", report.estimated_rank},
              {"variation_explained", report.variation_explained},
              {"variation_explained_definition",
               "singular-value energy ratio S_r^2 / sum_j S_j^2 of the estimated Z; "
               "not a likelihood-based ratio"}};
}

void write_dataset_dir(const fs::path& dir, const SimulatedDataset& ds, const json& config) {
  fs::create_directories(dir);
  write_binary_csv(dir / "X.csv", ds.X);
  write_matrix_csv(dir / "theta.csv", ds.theta);
  write_matrix_csv(dir / "z.csv", ds.Z);
  write_vector_csv(dir / "mu.csv", ds.mu);
  write_matrix_csv(dir / "pi.csv", ds.Pi);
  write_matrix_csv(dir / "xstar.csv", ds.Xstar);
  json meta;
  meta["config"] = config;
  meta["realized_snr"] = ds.realized_snr;
  meta["singular_values"] = vector_to_json(ds.D);
  write_json(dir / "meta.json", meta);
}

GroundTruth load_truth_dir(const fs::path& dir) {
  for (const char* name : {"theta.csv", "z.csv", "mu.csv", "pi.csv"}) {
    if (!fs::exists(dir / name)) {
      throw std::runtime_error("ground truth file '" + (dir / name).string() + "' is missing");
    }
  }
  GroundTruth t;
  t.theta = read_matrix_csv(dir / "theta.csv");
  t.Z = read_matrix_csv(dir / "z.csv");
  t.mu = read_vector_csv(dir / "mu.csv");
  t.Pi = read_matrix_csv(dir / "pi.csv");
  return t;
}

LoadedDataset load_dataset_dir(const fs::path& dir) {
  for (const char* name : {"X.csv", "xstar.csv", "meta.json"}) {
    if (!fs::exists(dir / name)) {
      throw std::runtime_error("dataset file '" + (dir / name).string() + "' is missing");
    }
  }
  LoadedDataset ds;
  ds.X = read_binary_csv(dir / "X.csv");
  ds.truth = load_truth_dir(dir);
  ds.Xstar = read_matrix_csv(dir / "xstar.csv");
  ds.meta = read_json(dir / "meta.json");
  return ds;
}

}  // namespace lpca::io
