#pragma once

// Conditional Wasserstein GAN with gradient penalty and correlation
// alignment over stacked bidirectional LSTMs. With `conditional = false`
// the same code is the single-layer unconditional baseline.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seqaug/autodiff.hpp"
#include "seqaug/cohort.hpp"
#include "seqaug/encoding.hpp"
#include "seqaug/nn.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug::gan {

using ad::Matrix;
using ad::Var;

/// Time-major batch: one B x width matrix per timestep.
using Sequence = std::vector<Var>;
using Labels = std::vector<int>;

/// Where the gradient penalty is evaluated: at generated samples, or at
/// random real/fake interpolates.
enum class GpMode { fake, interpolate };
/// Whether the alignment target is the current real batch or the whole
/// training set.
enum class CorrelationTarget { batch, dataset };

struct TrainingConfig {
  double lambda_gp = 10.0;
  double lambda_corr = 1.0;
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  /// Multiplies both learning rates after every epoch.
  double lr_decay = 1.0;
  int batch_size = 32;
  int critic_steps = 5;
  int epochs = 100;
  /// Overrides epochs when > 0 (generator steps).
  int max_steps = 0;
  int latent_dim = 16;
  int hidden_size = 64;
  int embed_dim = 4;
  int label_dim = 4;
  std::uint64_t seed = 0;
  bool conditional = true;
  GpMode gp_mode = GpMode::fake;
  CorrelationTarget corr_target = CorrelationTarget::batch;
  int probe_every = 50;
  int probe_size = 64;
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  /// 3 stacked layers when conditional, 1 for the baseline.
  int layers() const { return conditional ? 3 : 1; }
  void validate() const;

  /// `train.*` keys, canonical order and formatting.
  KeyValues to_key_values() const;
  /// Applies the `train.*` entries of `kv`; other keys are ignored.
  static TrainingConfig from_key_values(const KeyValues& kv, TrainingConfig base);
  static TrainingConfig from_key_values(const KeyValues& kv);
};

struct NetworkShape {
  Eigen::Index width = 0;  // encoded channels per timestep
  int latent_dim = 16;
  int hidden_size = 64;
  int layers = 3;
  bool conditional = true;
  int label_dim = 4;
};

Matrix one_hot(const Labels& labels);

class Generator {
 public:
  /// `numeric_channels[c]` selects the tanh head for channel c.
  Generator(const NetworkShape& shape, std::vector<bool> numeric_channels, Rng& rng);

  /// noise: one B x latent_dim matrix per timestep. Labels are ignored for
  /// an unconditional shape.
  Sequence forward(const std::vector<Matrix>& noise, const Labels& labels) const;

  const NetworkShape& shape() const { return shape_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

 private:
  NetworkShape shape_;
  nn::ParameterStore params_;
  Var label_table_;
  nn::BiLstmStack stack_;
  nn::Linear head_;
  Matrix numeric_mask_;  // 1 x width
};

class Critic {
 public:
  Critic(const NetworkShape& shape, Rng& rng);

  /// One unbounded score per sequence (B x 1).
  Var score(const Sequence& xs, const Labels& labels) const;

  const NetworkShape& shape() const { return shape_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

 private:
  Eigen::Index stack_input_width() const;

  NetworkShape shape_;
  nn::ParameterStore params_;
  Var label_table_;
  nn::BiLstmStack stack_;
  nn::Linear head_;
};

using CriticFn = std::function<Var(const Sequence&, const Labels&)>;
CriticFn as_critic_fn(const Critic& critic);

/// Constant sequence from per-timestep B x width matrices.
Sequence constant_sequence(const std::vector<Matrix>& steps);
std::vector<Matrix> values(const Sequence& seq);
/// Gathers sequences[indices] into time-major B x width matrices.
std::vector<Matrix> gather_time_major(const std::vector<Eigen::MatrixXd>& sequences,
                                      const std::vector<std::size_t>& indices);
std::vector<Matrix> sample_noise(Eigen::Index steps, Eigen::Index batch, int latent_dim, Rng& rng);

struct PenaltyTerm {
  Var penalty;             // differentiable w.r.t. critic parameters
  Eigen::VectorXd norms;   // per-sequence input-gradient norms
};

/// mean_b (||grad_x D(x_b | y_b)||_2 - 1)^2 at `points`.
PenaltyTerm gradient_penalty(const CriticFn& critic, const std::vector<Matrix>& points,
                             const Labels& labels);

/// Pearson correlation of the columns of `pooled` (rows are observations).
/// `valid` flags entries whose two variables both have nonzero variance;
/// invalid entries are set to 0.
Matrix pearson(const Matrix& pooled, Matrix* valid = nullptr);
/// Differentiable counterpart; columns failing the variance check are
/// zeroed before normalising so their entries carry no gradient.
Var pearson(const Var& pooled, Matrix* valid = nullptr);

struct CorrelationTargets {
  Matrix r_real;
  Matrix r_syn;
  /// 1 where the pair contributes, 0 for undefined pairs; empty = all valid.
  Matrix valid;
};

/// lambda * sum_{i>j} |r_syn(i,j) - r_real(i,j)| over valid pairs.
double alignment_loss(const CorrelationTargets& targets, double lambda_corr);
Var alignment_loss(const Var& r_syn, const Matrix& r_real, const Matrix& valid, double lambda_corr);

/// Per-variable scalar channels of a time-major batch stacked over time:
/// (T*B) x |V|, via the encoding's scalar projection.
Var pooled_scalars(const Sequence& seq, const Encoding& encoding);
Matrix pooled_scalars(const std::vector<Eigen::MatrixXd>& sequences, const Encoding& encoding);

struct CriticLoss {
  Var total;
  double fake_mean = 0.0;
  double real_mean = 0.0;
  double gp = 0.0;
};

/// mean D(fake) - mean D(real) + lambda_gp * GP. `rng` draws interpolation
/// weights when gp_mode is interpolate.
CriticLoss critic_loss(const CriticFn& critic, const std::vector<Matrix>& real,
                       const std::vector<Matrix>& fake, const Labels& labels,
                       const TrainingConfig& cfg, Rng* rng = nullptr);

struct GeneratorLoss {
  Var total;
  double adversarial = 0.0;
  double alignment = 0.0;
  int undefined_pairs = 0;
};

/// -mean D(fake) + alignment loss against `r_real`.
GeneratorLoss generator_loss(const CriticFn& critic, const Sequence& fake, const Labels& labels,
                             const Matrix& r_real, const Matrix& real_valid,
                             const Encoding& encoding, const TrainingConfig& cfg);

struct TraceRow {
  int step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double gp = 0.0;
  double alignment = 0.0;
  std::optional<double> probe_mmd;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  /// Probe bandwidth (median pairwise distance of the real probe set).
  double probe_sigma = 1.0;
  /// Probe before the first update.
  std::optional<double> initial_probe_mmd;

  /// step,L_D,L_G,gp_term,alignment_term,probe_mmd
  std::string to_csv() const;
  std::vector<std::pair<int, double>> probes() const;
};

class ModelBundle {
 public:
  ModelBundle(CohortSchema schema, std::shared_ptr<const Encoding> encoding, TrainingConfig cfg,
              std::uint64_t init_seed);

  const CohortSchema& schema() const { return schema_; }
  const Encoding& encoding() const { return *encoding_; }
  std::shared_ptr<const Encoding> encoding_ptr() const { return encoding_; }
  const TrainingConfig& config() const { return config_; }
  Generator& generator() { return *generator_; }
  const Generator& generator() const { return *generator_; }
  Critic& critic() { return *critic_; }
  const Critic& critic() const { return *critic_; }
  int steps() const { return steps_; }
  void set_steps(int steps) { steps_ = steps; }

  /// Writes `<stem>.bin` (tensors) and `<stem>.manifest` (schema hash,
  /// config, step count).
  void save(const std::filesystem::path& stem) const;
  static ModelBundle load(const std::filesystem::path& stem, const CohortSchema& schema);

 private:
  CohortSchema schema_;
  std::shared_ptr<const Encoding> encoding_;
  TrainingConfig config_;
  std::unique_ptr<Generator> generator_;
  std::unique_ptr<Critic> critic_;
  int steps_ = 0;
};

struct TrainResult {
  std::unique_ptr<ModelBundle> bundle;
  TrainingTrace trace;
};

using ProgressFn = std::function<void(const TraceRow&)>;

/// Adversarial training loop: critic_steps critic updates per generator
/// update, Adam on both. Throws SingleClassConditional and Diverged.
TrainResult train(const Cohort& train_cohort, const TrainingConfig& cfg,
                  const ProgressFn& progress = {});

/// Raw generator output for `count` sequences of class `label`.
EncodedBatch generate_encoded(const ModelBundle& bundle, std::size_t count, std::uint64_t seed,
                              ConditionLabel label = ConditionLabel::minority());
/// `count` decoded minority patients with ids syn-000000, syn-000001, ...
Cohort generate_minority(const ModelBundle& bundle, std::size_t count, std::uint64_t seed);

}  // namespace seqaug::gan
