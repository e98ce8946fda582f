#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqaug/cohort.hpp"
#include "seqaug/encoding.hpp"
#include "seqaug/projection.hpp"
#include "seqaug/schema.hpp"

namespace seqaug::metrics {

struct Histogram {
  /// Numeric variables: bins + 1 edges. Empty for discrete variables, whose
  /// bins are the schema categories in order.
  std::vector<double> edges;
  std::vector<double> probabilities;
  double epsilon = 0.0;
};

/// Histograms of two columns on a shared support, each smoothed with
/// `epsilon` and renormalised.
std::pair<Histogram, Histogram> shared_histograms(const std::vector<double>& real,
                                                  const std::vector<double>& syn,
                                                  const VariableSpec& spec, int bins,
                                                  double epsilon);

/// sum_i p_i log(p_i / q_i) after adding `epsilon` to every bin and
/// renormalising both vectors.
double kl_from_probabilities(const std::vector<double>& p, const std::vector<double>& q,
                             double epsilon);

/// KL(real || syn) in nats over 50 equal-width bins (numerics) or the
/// native categories (discrete).
double kl_divergence(const std::vector<double>& real, const std::vector<double>& syn,
                     const VariableSpec& spec, int bins = 50, double epsilon = 1e-8);

/// Biased MMD^2 with K(a, b) = exp(-|a - b|^2 / (2 sigma^2)); rows are points.
double mmd_rbf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma = 1.0);
/// Same statistic with per-point weights (weights need not be normalised).
double mmd_rbf_weighted(const Eigen::MatrixXd& x, const Eigen::VectorXd& wx,
                        const Eigen::MatrixXd& y, const Eigen::VectorXd& wy, double sigma);

/// Median of the pairwise Euclidean distances between rows.
double median_pairwise_distance(const Eigen::MatrixXd& x);

/// Kendall tau-b, O(n log n). NaN when either column is constant.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);
/// Pairwise tau-b of the columns of `data`; NaN marks undefined entries.
Eigen::MatrixXd kendall_matrix(const Eigen::MatrixXd& data);

/// Midpoint convention for even counts. Throws on an empty input.
double median(std::vector<double> values);
/// Linear interpolation between closest ranks; `sorted` ascending, p in [0, 100].
double percentile(const std::vector<double>& sorted, double p);

struct AuthenticityResult {
  double min_distance = 0.0;
  std::size_t nearest_syn = 0;
  std::size_t nearest_real = 0;
  /// Distance from each synthetic point to its nearest real point.
  std::vector<double> nearest;
  /// (percentile, distance) at 1, 5 and 50.
  std::vector<std::pair<double, double>> percentiles;
};

/// Exhaustive nearest-neighbour audit; rows are flattened samples.
AuthenticityResult authenticity_audit(const Eigen::MatrixXd& syn, const Eigen::MatrixXd& real);
/// Audit on flattened encoded sequences.
AuthenticityResult authenticity_audit(const Cohort& syn, const Cohort& real,
                                      const Encoding& encoding);

/// One row per patient: the encoded sequence flattened timestep-major.
Eigen::MatrixXd flatten_encoded(const Cohort& cohort, const Encoding& encoding);
/// Encoded channels of variable `v` pooled over patients and timesteps.
Eigen::MatrixXd variable_points(const Cohort& cohort, const Encoding& encoding, std::size_t v);

struct MetricsConfig {
  int kl_bins = 50;
  double kl_epsilon = 1e-8;
  /// Kernel width for the per-variable MMD on encoded values.
  double mmd_sigma = 1.0;
  /// Kernel width for the whole-sequence MMD; 0 picks the median pairwise
  /// distance of the real set.
  double sequence_mmd_sigma = 0.0;
  /// Larger pooled sets are subsampled (same draws for both sides).
  std::size_t mmd_max_points = 2000;
  std::uint64_t seed = 0;
  bool projection = true;
};

struct VariableFidelity {
  std::string name;
  double kl = 0.0;
  double mmd = 0.0;
};

struct FidelityReport {
  std::vector<VariableFidelity> variables;
  double kl_median = 0.0;
  double mmd_median = 0.0;
  double sequence_mmd = 0.0;
  double sequence_mmd_sigma = 1.0;
  Eigen::MatrixXd kendall_real;
  Eigen::MatrixXd kendall_syn;
  AuthenticityResult authenticity;
  std::optional<Projection> projection;
  MetricsConfig config;
};

/// Per-variable MMD on pooled encoded points, with unique points collapsed
/// into weights.
double variable_mmd(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn, double sigma,
                    std::size_t max_points, std::uint64_t seed);

FidelityReport fidelity_report(const Cohort& real, const Cohort& syn, const Encoding& encoding,
                               const MetricsConfig& cfg = {});

/// `variable,kl,mmd` per variable plus a `median` row.
std::string fidelity_csv(const FidelityReport& report);
/// Square matrix with a header row and column of names; NaN prints as NA.
std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names);
/// Summary scalars: min distance, percentiles, sequence MMD.
std::string summary_csv(const FidelityReport& report);

}  // namespace seqaug::metrics
