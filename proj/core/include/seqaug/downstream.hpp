#pragma once

// Utility probe: a one-layer bidirectional recurrent regressor forecasting
// the next hour from a sliding window, trained under different data
// regimes and scored on the held-out minority patients.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqaug/cohort.hpp"
#include "seqaug/encoding.hpp"
#include "seqaug/nn.hpp"

namespace seqaug::downstream {

struct WindowedSample {
  Eigen::MatrixXd input;         // w_in x encoding width
  Eigen::RowVectorXd target;     // encoded target channels, w_out rows concatenated
  Eigen::RowVectorXd target_raw; // physical target values, w_out rows concatenated
  std::string source_patient;
  std::size_t start = 0;
};

/// Forecast targets: every non-binary variable, in schema order.
std::vector<std::size_t> target_variables(const CohortSchema& schema);

/// Windows start at t = 0 .. T - w_in - w_out with stride 1. Throws
/// WindowTooLong when T < w_in + w_out.
std::vector<WindowedSample> make_windows(const Cohort& cohort, const Encoding& encoding,
                                         int w_in = 20, int w_out = 1);
std::size_t window_count(std::size_t series_length, int w_in, int w_out);

struct RegressorConfig {
  int hidden_size = 64;
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  /// Windows drawn per epoch; 0 uses all of them.
  int windows_per_epoch = 0;
  std::uint64_t seed = 0;
};

class Regressor {
 public:
  Regressor(Eigen::Index input_width, Eigen::Index output_width, int hidden_size, Rng& rng);

  /// xs: one B x input_width matrix per window step. Returns B x output_width.
  ad::Var forward(const std::vector<ad::Var>& xs) const;
  Eigen::MatrixXd predict(const std::vector<WindowedSample>& windows) const;

  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

 private:
  nn::ParameterStore params_;
  nn::BiLstmStack stack_;
  nn::Linear head_;
  Eigen::Index hidden_ = 0;
};

struct RegressorBundle {
  std::unique_ptr<Regressor> model;
  std::shared_ptr<const Encoding> encoding;
  int w_in = 20;
  int w_out = 1;
  /// Mean MSE over all windows before training, then per epoch the mean of
  /// the minibatch losses.
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;
};

/// Minimises mean squared error on encoded targets with Adam.
RegressorBundle train_regressor(const std::vector<WindowedSample>& windows,
                                std::shared_ptr<const Encoding> encoding,
                                const RegressorConfig& cfg, int w_in = 20, int w_out = 1);

/// Per-target mean of |pred - true| / (|true| + eps_rel) * 100 in decoded
/// units. Categorical predictions snap to the nearest embedding row.
std::vector<double> relative_errors(const Eigen::MatrixXd& pred_raw, const Eigen::MatrixXd& true_raw,
                                    double eps_rel = 1e-6);
/// Decodes encoded target rows into physical units.
Eigen::MatrixXd decode_targets(const Eigen::MatrixXd& encoded, const Encoding& encoding, int w_out = 1);
std::vector<double> evaluate_regressor(const RegressorBundle& bundle, const Cohort& test);

struct RegressionReport {
  std::vector<std::string> variables;
  std::vector<std::string> regimes;
  /// errors[r][v]: regime r, target variable v (percent).
  std::vector<std::vector<double>> errors;
  std::vector<double> medians;

  void add(const std::string& regime, std::vector<double> per_variable);
  /// `variable,<regime...>` per target plus a `median` row.
  std::string to_csv() const;
};

/// Throws Leakage when a test patient id appears in any training input.
void assert_no_leakage(const Cohort& test, const std::vector<const Cohort*>& training_inputs);

}  // namespace seqaug::downstream
