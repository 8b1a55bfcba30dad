#pragma once

#include "lpca/binary_matrix.hpp"
#include "lpca/evaluate.hpp"
#include "lpca/penalty.hpp"
#include "lpca/solver.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lpca {

struct TestEntry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

/// Missing-value cross-validation split: held-out entries are missing in
/// `train` and listed in `test`.
struct CvSplit {
  BinaryMatrix train;
  std::vector<TestEntry> test;
};

/// Holds out round(fraction·#ones) observed ones and round(fraction·#zeros)
/// observed zeros uniformly at random. A draw that leaves some column without
/// observed training entries is redrawn, up to 100 attempts.
CvSplit make_cv_split(const BinaryMatrix& X, double fraction, std::uint64_t seed);

/// Test-set negative log-likelihood of the model's θ̂.
double cv_error(const LpcaModel& model, const std::vector<TestEntry>& test, Link link);
double cv_error(const LpcaModel& model, const CvSplit& split, Link link);

struct LambdaRange {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
};

inline constexpr double kLambdaRangeRatio = 500.0;

/// λ_max is the smallest λ at which the Z-update from the null state
/// thresholds every singular value: L·s_1(J·H)/w(0), where w(0) is the
/// supergradient weight at σ = 0 and H is evaluated at μ = 0 and at the
/// null-model offset (the larger value is used, so the null state is a fixed
/// point). λ_min = λ_max / 500.
LambdaRange auto_lambda_range(const BinaryMatrix& X, const PenaltySpec& spec, Link link);

/// `count` values from λ_max down to λ_min, equally spaced in log λ.
std::vector<double> lambda_grid(const LambdaRange& range, int count);

/// How path fits are initialized. The λ_max fit always starts from Z = 0,
/// μ = 0. Warm: each later fit starts from its predecessor. Random: each
/// later fit starts from the same seeded random Z⁰, and an automatic λ_max is
/// doubled until that start also ends at rank 0. Auto picks Warm for the
/// nuclear norm and Random for the concave penalties, whose large-λ
/// solutions are unreachable from the null state.
enum class PathStart { Auto, Warm, Random };

std::string to_string(PathStart start);
PathStart parse_path_start(std::string_view name);
PathStart resolve_path_start(PathStart start, PenaltyFamily family);

struct PathRecord {
  double lambda = 0.0;
  double cv_error = 0.0;
  Index rank = 0;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  /// Continued past the path cap (random starts only).
  bool extended = false;
};

struct SelectionOptions {
  int n_lambda = 30;
  double fraction = 0.1;
  std::uint64_t seed = 0;
  double path_eps = 1e-6;
  int path_max_iter = 500;
  /// The refit is run once and snapshotted at each tolerance.
  std::vector<double> refit_tolerances{1e-6};
  int refit_max_iter = 500;
  /// With random starts, fits that hit path_max_iter are continued from
  /// large to small λ until one still fails to converge. This is the total
  /// number of extra iterations; 0 disables the continuation.
  int extend_max_iter = 10000;
  PathStart path_start = PathStart::Auto;
  Link link = Link::Logit;
  /// Optional explicit range; computed automatically when empty. An explicit
  /// range is never widened.
  std::optional<LambdaRange> range;
};

struct SelectionPath {
  std::vector<PathRecord> records;  // λ descending
  /// The training fit behind each record.
  std::vector<std::shared_ptr<const LpcaModel>> fits;
  std::size_t chosen_index = 0;
  double chosen_lambda = 0.0;
  LambdaRange range;
  PathStart path_start = PathStart::Warm;  // resolved
  int lambda_doublings = 0;
  PenaltySpec spec;  // with the chosen λ
  LpcaModel train_model;
  /// Full-data refits, one per requested tolerance.
  std::vector<LpcaModel> refits;

  const LpcaModel& model() const { return refits.front(); }
};

/// Split, λ path on the training part, minimum-CV choice among converged
/// fits, and a full-data refit initialized from the chosen training model.
SelectionPath select_and_refit(const BinaryMatrix& X, const PenaltySpec& family_template,
                               const SelectionOptions& options);

/// Same as above on a precomputed split.
SelectionPath select_and_refit(const BinaryMatrix& X, const CvSplit& split,
                               const PenaltySpec& family_template,
                               const SelectionOptions& options);

struct GammaStudyRow {
  double gamma = 0.0;
  double chosen_lambda = 0.0;
  Index rank = 0;
  double cv_error = 0.0;
  std::optional<MetricsReport> metrics;
  std::string error;  // empty on success
};

/// GDP selection for each γ on one shared split. Failures are recorded per
/// row.
std::vector<GammaStudyRow> gamma_study(const BinaryMatrix& X, const std::vector<double>& gammas,
                                       const SelectionOptions& options,
                                       const std::optional<GroundTruth>& truth = std::nullopt);

}  // namespace lpca
