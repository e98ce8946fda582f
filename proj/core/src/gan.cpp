#include "seqaug/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "seqaug/errors.hpp"
#include "seqaug/metrics.hpp"

namespace seqaug::gan {

namespace {

constexpr double kMinVariance = 1e-12;
constexpr std::size_t kGenerateChunk = 64;

// sqrt with a zero (sub)gradient at 0; the backward stays differentiable.
Var safe_sqrt(const Var& a) {
  return Var::from_op(a.value().array().sqrt(), {a},
                      [](const Var& self, const Var& g, const std::vector<char>&) {
                        const Matrix& y = self.value();
                        const Matrix zero = (y.array() == 0.0).cast<double>();
                        const Matrix live = 1.0 - zero.array();
                        Var inv = ad::div(ad::scale(g, 0.5), ad::add(self, Var(zero)));
                        return std::vector<Var>{ad::mul(inv, Var(live))};
                      });
}

Matrix strict_lower(Eigen::Index n) {
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) m(i, j) = 1.0;
  return m;
}

Matrix column_valid(const Matrix& pooled) {
  const double n = static_cast<double>(pooled.rows());
  Matrix ok(1, pooled.cols());
  for (Eigen::Index c = 0; c < pooled.cols(); ++c) {
    const double mu = pooled.col(c).mean();
    const double var = (pooled.col(c).array() - mu).square().sum() / n;
    ok(0, c) = var > kMinVariance ? 1.0 : 0.0;
  }
  return ok;
}

Var label_embedding(const Var& table, const Labels& labels) {
  return ad::matmul(Var(one_hot(labels)), table);
}

std::vector<bool> numeric_channels(const Encoding& enc) {
  std::vector<bool> mask(static_cast<std::size_t>(enc.width()), false);
  const auto& vars = enc.schema().variables();
  for (std::size_t v = 0; v < vars.size(); ++v) {
    if (vars[v].kind != VariableKind::numeric) continue;
    const auto slot = enc.slot(v);
    for (Eigen::Index c = 0; c < slot.width; ++c)
      mask[static_cast<std::size_t>(slot.offset + c)] = true;
  }
  return mask;
}

NetworkShape shape_for(const TrainingConfig& cfg, Eigen::Index width) {
  NetworkShape s;
  s.width = width;
  s.latent_dim = cfg.latent_dim;
  s.hidden_size = cfg.hidden_size;
  s.layers = cfg.layers();
  s.conditional = cfg.conditional;
  s.label_dim = cfg.label_dim;
  return s;
}

bool finite(double x) { return std::isfinite(x); }

std::string gp_mode_name(GpMode m) { return m == GpMode::fake ? "fake" : "interpolate"; }
std::string corr_target_name(CorrelationTarget t) {
  return t == CorrelationTarget::batch ? "batch" : "dataset";
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

// Flattened generator output / real sequences as rows of a matrix.
Matrix flat_rows(const std::vector<Eigen::MatrixXd>& sequences) {
  if (sequences.empty()) return {};
  const auto size = sequences.front().size();
  Matrix out(static_cast<Eigen::Index>(sequences.size()), size);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    // timestep-major, matching the SMOTE flattening
    Eigen::Index k = 0;
    for (Eigen::Index t = 0; t < s.rows(); ++t)
      for (Eigen::Index c = 0; c < s.cols(); ++c) out(static_cast<Eigen::Index>(i), k++) = s(t, c);
  }
  return out;
}

std::vector<Eigen::MatrixXd> to_sequences(const std::vector<Matrix>& time_major) {
  std::vector<Eigen::MatrixXd> out;
  if (time_major.empty()) return out;
  const auto batch = time_major.front().rows();
  const auto width = time_major.front().cols();
  const auto steps = static_cast<Eigen::Index>(time_major.size());
  out.assign(static_cast<std::size_t>(batch), Eigen::MatrixXd(steps, width));
  for (Eigen::Index t = 0; t < steps; ++t)
    for (Eigen::Index b = 0; b < batch; ++b)
      out[static_cast<std::size_t>(b)].row(t) = time_major[static_cast<std::size_t>(t)].row(b);
  return out;
}

}  // namespace

void TrainingConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigInvalid(m); };
  if (!(lambda_gp >= 0.0)) fail("train.lambda_gp must be >= 0");
  if (!(lambda_corr >= 0.0)) fail("train.lambda_corr must be >= 0");
  if (!(lr > 0.0)) fail("train.lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    fail("train.beta1 and train.beta2 must lie in [0, 1)");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("train.lr_decay must lie in (0, 1]");
  if (batch_size < 2) fail("train.batch_size must be >= 2");
  if (critic_steps < 1) fail("train.critic_steps must be >= 1");
  if (epochs < 1 && max_steps < 1) fail("train.epochs or train.max_steps must be >= 1");
  if (max_steps < 0) fail("train.max_steps must be >= 0");
  if (latent_dim < 1 || hidden_size < 1 || embed_dim < 1 || label_dim < 1)
    fail("train.latent_dim, hidden_size, embed_dim and label_dim must be >= 1");
  if (probe_every < 1) fail("train.probe_every must be >= 1");
  if (probe_size < 2) fail("train.probe_size must be >= 2");
  if (checkpoint_every < 0) fail("train.checkpoint_every must be >= 0");
}

KeyValues TrainingConfig::to_key_values() const {
  return {
      {"train.lambda_gp", format_double(lambda_gp)},
      {"train.lambda_corr", format_double(lambda_corr)},
      {"train.lr", format_double(lr)},
      {"train.beta1", format_double(beta1)},
      {"train.beta2", format_double(beta2)},
      {"train.lr_decay", format_double(lr_decay)},
      {"train.batch_size", std::to_string(batch_size)},
      {"train.critic_steps", std::to_string(critic_steps)},
      {"train.epochs", std::to_string(epochs)},
      {"train.max_steps", std::to_string(max_steps)},
      {"train.latent_dim", std::to_string(latent_dim)},
      {"train.hidden_size", std::to_string(hidden_size)},
      {"train.embed_dim", std::to_string(embed_dim)},
      {"train.label_dim", std::to_string(label_dim)},
      {"train.seed", std::to_string(seed)},
      {"train.conditional", conditional ? "true" : "false"},
      {"train.gp_mode", gp_mode_name(gp_mode)},
      {"train.corr_target", corr_target_name(corr_target)},
      {"train.probe_every", std::to_string(probe_every)},
      {"train.probe_size", std::to_string(probe_size)},
      {"train.checkpoint_every", std::to_string(checkpoint_every)},
  };
}

TrainingConfig TrainingConfig::from_key_values(const KeyValues& kv, TrainingConfig c) {
  auto as_int = [](const std::string& key, const std::string& v) {
    try {
      return static_cast<int>(parse_int(v));
    } catch (const InvalidArgument&) {
      throw ConfigInvalid(fmt::format("{}: '{}' is not an integer", key, v));
    }
  };
  auto as_double = [](const std::string& key, const std::string& v) {
    try {
      return parse_double(v);
    } catch (const InvalidArgument&) {
      throw ConfigInvalid(fmt::format("{}: '{}' is not a number", key, v));
    }
  };
  for (const auto& [key, v] : kv) {
    if (key.rfind("train.", 0) != 0) continue;
    const std::string k = key.substr(6);
    if (k == "lambda_gp") c.lambda_gp = as_double(key, v);
    else if (k == "lambda_corr") c.lambda_corr = as_double(key, v);
    else if (k == "lr") c.lr = as_double(key, v);
    else if (k == "beta1") c.beta1 = as_double(key, v);
    else if (k == "beta2") c.beta2 = as_double(key, v);
    else if (k == "lr_decay") c.lr_decay = as_double(key, v);
    else if (k == "batch_size") c.batch_size = as_int(key, v);
    else if (k == "critic_steps") c.critic_steps = as_int(key, v);
    else if (k == "epochs") c.epochs = as_int(key, v);
    else if (k == "max_steps") c.max_steps = as_int(key, v);
    else if (k == "latent_dim") c.latent_dim = as_int(key, v);
    else if (k == "hidden_size") c.hidden_size = as_int(key, v);
    else if (k == "embed_dim") c.embed_dim = as_int(key, v);
    else if (k == "label_dim") c.label_dim = as_int(key, v);
    else if (k == "probe_every") c.probe_every = as_int(key, v);
    else if (k == "probe_size") c.probe_size = as_int(key, v);
    else if (k == "checkpoint_every") c.checkpoint_every = as_int(key, v);
    else if (k == "seed") {
      try {
        c.seed = static_cast<std::uint64_t>(parse_int(v));
      } catch (const InvalidArgument&) {
        throw ConfigInvalid(fmt::format("{}: '{}' is not an integer", key, v));
      }
    } else if (k == "conditional") {
      try {
        c.conditional = parse_bool(v);
      } catch (const InvalidArgument&) {
        throw ConfigInvalid(fmt::format("{}: '{}' is not a boolean", key, v));
      }
    } else if (k == "gp_mode") {
      if (v == "fake") c.gp_mode = GpMode::fake;
      else if (v == "interpolate") c.gp_mode = GpMode::interpolate;
      else throw ConfigInvalid(fmt::format("train.gp_mode: expected fake or interpolate, got '{}'", v));
    } else if (k == "corr_target") {
      if (v == "batch") c.corr_target = CorrelationTarget::batch;
      else if (v == "dataset") c.corr_target = CorrelationTarget::dataset;
      else throw ConfigInvalid(fmt::format("train.corr_target: expected batch or dataset, got '{}'", v));
    } else {
      throw ConfigInvalid(fmt::format("unknown key '{}'", key));
    }
  }
  return c;
}

TrainingConfig TrainingConfig::from_key_values(const KeyValues& kv) {
  return from_key_values(kv, TrainingConfig{});
}

Matrix one_hot(const Labels& labels) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw InvalidArgument(fmt::format("label {} is not 0 or 1", labels[i]));
    m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return m;
}

Generator::Generator(const NetworkShape& shape, std::vector<bool> numeric, Rng& rng)
    : shape_(shape) {
  if (static_cast<Eigen::Index>(numeric.size()) != shape.width)
    throw InvalidArgument("generator: channel mask does not match width");
  const Eigen::Index in = shape.latent_dim + (shape.conditional ? shape.label_dim : 0);
  if (shape.conditional) label_table_ = params_.uniform("label_table", 2, shape.label_dim, 1.0, rng);
  stack_ = nn::BiLstmStack::create(params_, "stack", in, shape.hidden_size, shape.layers, rng);
  head_ = nn::Linear::create(params_, "head", stack_.output_size(), shape.width, rng);
  numeric_mask_ = Matrix::Zero(1, shape.width);
  for (Eigen::Index c = 0; c < shape.width; ++c)
    numeric_mask_(0, c) = numeric[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
}

Sequence Generator::forward(const std::vector<Matrix>& noise, const Labels& labels) const {
  if (noise.empty()) return {};
  const auto batch = noise.front().rows();
  Var cond;
  if (shape_.conditional) {
    if (static_cast<Eigen::Index>(labels.size()) != batch)
      throw InvalidArgument("generator: one label per sequence is required");
    cond = label_embedding(label_table_, labels);
  }
  Sequence xs;
  xs.reserve(noise.size());
  for (const auto& z : noise) {
    if (z.rows() != batch || z.cols() != shape_.latent_dim)
      throw InvalidArgument("generator: noise has the wrong shape");
    xs.push_back(shape_.conditional ? ad::concat_cols({Var(z), cond}) : Var(z));
  }
  const auto hs = stack_(xs);
  const Var mask(numeric_mask_.replicate(batch, 1));
  const Var rest(1.0 - numeric_mask_.replicate(batch, 1).array());
  const bool all_numeric = (numeric_mask_.array() == 1.0).all();
  const bool no_numeric = (numeric_mask_.array() == 0.0).all();
  Sequence out;
  out.reserve(hs.size());
  for (const auto& h : hs) {
    const Var raw = head_(h);
    if (all_numeric) out.push_back(ad::tanh(raw));
    else if (no_numeric) out.push_back(raw);
    else out.push_back(ad::add(ad::mul(ad::tanh(raw), mask), ad::mul(raw, rest)));
  }
  return out;
}

Critic::Critic(const NetworkShape& shape, Rng& rng) : shape_(shape) {
  const Eigen::Index in = shape.width + (shape.conditional ? shape.label_dim : 0);
  if (shape.conditional) label_table_ = params_.uniform("label_table", 2, shape.label_dim, 1.0, rng);
  stack_ = nn::BiLstmStack::create(params_, "stack", in, shape.hidden_size, shape.layers, rng);
  head_ = nn::Linear::create(params_, "head", stack_.output_size(), 1, rng);
}

Var Critic::score(const Sequence& xs, const Labels& labels) const {
  if (xs.empty()) throw InvalidArgument("critic: empty sequence");
  const auto batch = xs.front().rows();
  Sequence in;
  in.reserve(xs.size());
  if (shape_.conditional) {
    if (static_cast<Eigen::Index>(labels.size()) != batch)
      throw InvalidArgument("critic: one label per sequence is required");
    const Var cond = label_embedding(label_table_, labels);
    for (const auto& x : xs) in.push_back(ad::concat_cols({x, cond}));
  } else {
    in = xs;
  }
  for (const auto& x : in)
    if (x.cols() != stack_input_width()) throw SchemaMismatch("critic: input width mismatch");
  const auto hs = stack_(in);
  Var pooled = hs.front();
  for (std::size_t t = 1; t < hs.size(); ++t) pooled = ad::add(pooled, hs[t]);
  pooled = ad::scale(pooled, 1.0 / static_cast<double>(hs.size()));
  return head_(pooled);
}

Eigen::Index Critic::stack_input_width() const {
  return shape_.width + (shape_.conditional ? shape_.label_dim : 0);
}

CriticFn as_critic_fn(const Critic& critic) {
  return [&critic](const Sequence& xs, const Labels& labels) { return critic.score(xs, labels); };
}

Sequence constant_sequence(const std::vector<Matrix>& steps) {
  Sequence out;
  out.reserve(steps.size());
  for (const auto& m : steps) out.emplace_back(m);
  return out;
}

std::vector<Matrix> values(const Sequence& seq) {
  std::vector<Matrix> out;
  out.reserve(seq.size());
  for (const auto& v : seq) out.push_back(v.value());
  return out;
}

std::vector<Matrix> gather_time_major(const std::vector<Eigen::MatrixXd>& sequences,
                                      const std::vector<std::size_t>& indices) {
  if (indices.empty()) return {};
  const auto& first = sequences.at(indices.front());
  const auto steps = first.rows(), width = first.cols();
  const auto batch = static_cast<Eigen::Index>(indices.size());
  std::vector<Matrix> out(static_cast<std::size_t>(steps), Matrix(batch, width));
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& s = sequences.at(indices[static_cast<std::size_t>(b)]);
    for (Eigen::Index t = 0; t < steps; ++t) out[static_cast<std::size_t>(t)].row(b) = s.row(t);
  }
  return out;
}

std::vector<Matrix> sample_noise(Eigen::Index steps, Eigen::Index batch, int latent_dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> out(static_cast<std::size_t>(steps), Matrix(batch, latent_dim));
  for (auto& m : out)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal(rng);
  return out;
}

PenaltyTerm gradient_penalty(const CriticFn& critic, const std::vector<Matrix>& points,
                             const Labels& labels) {
  if (points.empty()) throw InvalidArgument("gradient_penalty: no points");
  Sequence leaves;
  leaves.reserve(points.size());
  for (const auto& p : points) leaves.emplace_back(p, /*requires_grad=*/true);
  // Sequences are scored independently, so d(sum of scores)/dx_b is the
  // per-sequence input gradient.
  const Var total = ad::sum(critic(leaves, labels));
  const auto grads = ad::grad(total, leaves, {.create_graph = true});
  Var sq = ad::sum_over_cols(ad::square(grads.front()));
  for (std::size_t t = 1; t < grads.size(); ++t)
    sq = ad::add(sq, ad::sum_over_cols(ad::square(grads[t])));
  const Var norms = safe_sqrt(sq);
  PenaltyTerm out;
  out.norms = norms.value().col(0);
  out.penalty = ad::mean(ad::square(ad::add_scalar(norms, -1.0)));
  return out;
}

Matrix pearson(const Matrix& pooled, Matrix* valid) {
  const auto n = pooled.rows(), v = pooled.cols();
  if (n < 1) throw InvalidArgument("pearson: no observations");
  const Matrix ok = column_valid(pooled);
  const Eigen::RowVectorXd mu = pooled.colwise().mean();
  const Matrix c = pooled.rowwise() - mu;
  const Matrix cov = c.transpose() * c;
  Matrix r = Matrix::Zero(v, v);
  Matrix mask = Matrix::Zero(v, v);
  for (Eigen::Index i = 0; i < v; ++i) {
    for (Eigen::Index j = 0; j < v; ++j) {
      if (ok(0, i) == 0.0 || ok(0, j) == 0.0) continue;
      mask(i, j) = 1.0;
      r(i, j) = i == j ? 1.0 : cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
    }
  }
  if (valid) *valid = mask;
  return r;
}

Var pearson(const Var& pooled, Matrix* valid) {
  const auto n = pooled.rows(), v = pooled.cols();
  if (n < 1) throw InvalidArgument("pearson: no observations");
  const Matrix ok = column_valid(pooled.value());
  if (valid) *valid = ok.transpose() * ok;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Var mu = ad::scale(ad::sum_over_rows(pooled), inv_n);
  Var c = ad::sub(pooled, ad::repeat_rows(mu, n));
  c = ad::mul(c, Var(ok.replicate(n, 1)));
  const Var cov = ad::scale(ad::matmul(ad::transpose(c), c), inv_n);
  const Var sd = safe_sqrt(ad::scale(ad::sum_over_rows(ad::square(c)), inv_n));
  const Var denom = ad::matmul(ad::transpose(sd), sd);
  const Matrix zero = (denom.value().array() == 0.0).cast<double>();
  (void)v;
  return ad::div(cov, ad::add(denom, Var(zero)));
}

double alignment_loss(const CorrelationTargets& t, double lambda_corr) {
  if (t.r_real.rows() != t.r_syn.rows() || t.r_real.cols() != t.r_syn.cols() ||
      t.r_real.rows() != t.r_real.cols())
    throw InvalidArgument("alignment_loss: correlation matrices must be square and equal-shaped");
  const bool masked = t.valid.size() > 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < t.r_real.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (!masked || t.valid(i, j) != 0.0) total += std::abs(t.r_syn(i, j) - t.r_real(i, j));
  return lambda_corr * total;
}

Var alignment_loss(const Var& r_syn, const Matrix& r_real, const Matrix& valid,
                   double lambda_corr) {
  if (r_syn.rows() != r_real.rows() || r_syn.cols() != r_real.cols())
    throw InvalidArgument("alignment_loss: correlation matrices differ in shape");
  Matrix weight = strict_lower(r_real.rows());
  if (valid.size() > 0) weight = weight.cwiseProduct(valid);
  const Var diff = ad::abs(ad::sub(r_syn, Var(r_real)));
  return ad::scale(ad::sum(ad::mul(diff, Var(weight))), lambda_corr);
}

Var pooled_scalars(const Sequence& seq, const Encoding& encoding) {
  const Var stacked = ad::concat_rows(seq);
  return ad::matmul(stacked, Var(encoding.scalar_projection()));
}

Matrix pooled_scalars(const std::vector<Eigen::MatrixXd>& sequences, const Encoding& encoding) {
  if (sequences.empty()) return Matrix(0, encoding.scalar_projection().cols());
  const auto steps = sequences.front().rows();
  Matrix stacked(steps * static_cast<Eigen::Index>(sequences.size()), encoding.width());
  // Time-major row order, matching the differentiable version.
  const auto batch = static_cast<Eigen::Index>(sequences.size());
  for (Eigen::Index b = 0; b < batch; ++b)
    for (Eigen::Index t = 0; t < steps; ++t)
      stacked.row(t * batch + b) = sequences[static_cast<std::size_t>(b)].row(t);
  return stacked * encoding.scalar_projection();
}

CriticLoss critic_loss(const CriticFn& critic, const std::vector<Matrix>& real,
                       const std::vector<Matrix>& fake, const Labels& labels,
                       const TrainingConfig& cfg, Rng* rng) {
  if (real.size() != fake.size() || real.empty())
    throw InvalidArgument("critic_loss: real and fake batches differ in length");
  for (std::size_t t = 0; t < real.size(); ++t)
    if (real[t].rows() != fake[t].rows() || real[t].cols() != fake[t].cols())
      throw InvalidArgument("critic_loss: real and fake batches differ in shape");

  const Var fake_score = ad::mean(critic(constant_sequence(fake), labels));
  const Var real_score = ad::mean(critic(constant_sequence(real), labels));
  CriticLoss out;
  out.fake_mean = fake_score.item();
  out.real_mean = real_score.item();
  out.total = ad::sub(fake_score, real_score);
  if (cfg.lambda_gp > 0.0) {
    std::vector<Matrix> points = fake;
    if (cfg.gp_mode == GpMode::interpolate) {
      if (!rng) throw InvalidArgument("critic_loss: interpolation needs an rng");
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      Eigen::VectorXd eps(real.front().rows());
      for (Eigen::Index b = 0; b < eps.size(); ++b) eps(b) = unit(*rng);
      for (std::size_t t = 0; t < points.size(); ++t)
        points[t] = (eps.asDiagonal() * real[t]) + ((1.0 - eps.array()).matrix().asDiagonal() * fake[t]);
    }
    const auto gp = gradient_penalty(critic, points, labels);
    out.gp = gp.penalty.item();
    out.total = ad::add(out.total, ad::scale(gp.penalty, cfg.lambda_gp));
  }
  return out;
}

GeneratorLoss generator_loss(const CriticFn& critic, const Sequence& fake, const Labels& labels,
                             const Matrix& r_real, const Matrix& real_valid,
                             const Encoding& encoding, const TrainingConfig& cfg) {
  const Var adv = ad::neg(ad::mean(critic(fake, labels)));
  GeneratorLoss out;
  out.adversarial = adv.item();
  out.total = adv;
  if (cfg.lambda_corr > 0.0) {
    Matrix syn_valid;
    const Var r_syn = pearson(pooled_scalars(fake, encoding), &syn_valid);
    Matrix valid = syn_valid;
    if (real_valid.size() > 0) valid = valid.cwiseProduct(real_valid);
    const Matrix lower = strict_lower(valid.rows());
    out.undefined_pairs =
        static_cast<int>(lower.sum() - lower.cwiseProduct(valid).sum() + 0.5);
    const Var align = alignment_loss(r_syn, r_real, valid, cfg.lambda_corr);
    out.alignment = align.item();
    out.total = ad::add(out.total, align);
  }
  return out;
}

std::string TrainingTrace::to_csv() const {
  std::string out = "step,L_D,L_G,gp_term,alignment_term,probe_mmd\n";
  if (initial_probe_mmd) out += fmt::format("0,,,,,{}\n", format_double(*initial_probe_mmd));
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", r.step, format_double(r.loss_d),
                       format_double(r.loss_g), format_double(r.gp), format_double(r.alignment),
                       r.probe_mmd ? format_double(*r.probe_mmd) : std::string());
  }
  return out;
}

std::vector<std::pair<int, double>> TrainingTrace::probes() const {
  std::vector<std::pair<int, double>> out;
  if (initial_probe_mmd) out.emplace_back(0, *initial_probe_mmd);
  for (const auto& r : rows)
    if (r.probe_mmd) out.emplace_back(r.step, *r.probe_mmd);
  return out;
}

ModelBundle::ModelBundle(CohortSchema schema, std::shared_ptr<const Encoding> encoding,
                         TrainingConfig cfg, std::uint64_t init_seed)
    : schema_(std::move(schema)), encoding_(std::move(encoding)), config_(std::move(cfg)) {
  if (!encoding_) throw InvalidArgument("model bundle needs an encoding");
  const auto shape = shape_for(config_, encoding_->width());
  Rng rng = make_rng(init_seed, "init");
  generator_ = std::make_unique<Generator>(shape, numeric_channels(*encoding_), rng);
  critic_ = std::make_unique<Critic>(shape, rng);
}

void ModelBundle::save(const std::filesystem::path& stem) const {
  nn::TensorMap tensors = encoding_->tensors();
  tensors.merge(generator_->params().tensors("generator."));
  tensors.merge(critic_->params().tensors("critic."));
  auto bin = stem;
  bin += ".bin";
  nn::save_tensors(bin, tensors);

  KeyValues kv = {{"format", "seqaug-model-1"},
                  {"schema_hash", hex(schema_.hash())},
                  {"method", config_.conditional ? "ca-gan" : "wgan-gp"},
                  {"steps", std::to_string(steps_)}};
  const auto cfg_kv = config_.to_key_values();
  kv.insert(kv.end(), cfg_kv.begin(), cfg_kv.end());
  std::string text;
  for (const auto& [k, v] : kv) text += fmt::format("{} = {}\n", k, v);
  auto manifest = stem;
  manifest += ".manifest";
  write_file(manifest, text);
}

ModelBundle ModelBundle::load(const std::filesystem::path& stem, const CohortSchema& schema) {
  auto manifest = stem;
  manifest += ".manifest";
  if (!std::filesystem::exists(manifest))
    throw MissingArtifact(fmt::format("no model manifest at '{}'", manifest.string()));
  const auto kv = parse_key_values(read_file(manifest));
  auto lookup = [&](const std::string& key) -> std::string {
    for (const auto& [k, v] : kv)
      if (k == key) return v;
    throw SchemaMismatch(fmt::format("model manifest lacks '{}'", key));
  };
  if (lookup("format") != "seqaug-model-1")
    throw SchemaMismatch(fmt::format("unsupported model format '{}'", lookup("format")));
  if (lookup("schema_hash") != hex(schema.hash()))
    throw SchemaMismatch("model was trained on a different schema");
  const auto cfg = TrainingConfig::from_key_values(kv);

  auto bin = stem;
  bin += ".bin";
  const auto tensors = nn::load_tensors(bin);
  auto enc = std::make_shared<const Encoding>(Encoding::restore(schema, tensors));
  ModelBundle bundle(schema, enc, cfg, cfg.seed);
  bundle.generator().params().load(tensors, "generator.");
  bundle.critic().params().load(tensors, "critic.");
  bundle.set_steps(static_cast<int>(parse_int(lookup("steps"))));
  return bundle;
}

namespace {

// Epoch-style sampler: walks a shuffled permutation, reshuffling when fewer
// than `batch` indices remain.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Rng rng)
      : perm_(n), batch_(batch), rng_(std::move(rng)) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > perm_.size()) reshuffle();
    std::vector<std::size_t> out(perm_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 perm_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(perm_.begin(), perm_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> perm_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

Labels labels_at(const EncodedBatch& data, const std::vector<std::size_t>& idx) {
  Labels out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(data.labels[i].value());
  return out;
}

}  // namespace

TrainResult train(const Cohort& train_cohort, const TrainingConfig& cfg,
                  const ProgressFn& progress) {
  cfg.validate();
  if (train_cohort.empty()) throw InvalidArgument("train: empty cohort");
  if (cfg.conditional &&
      (train_cohort.majority_count() == 0 || train_cohort.minority_count() == 0))
    throw SingleClassConditional(fmt::format(
        "conditional training needs both classes (majority {}, minority {})",
        train_cohort.majority_count(), train_cohort.minority_count()));

  const auto& schema = train_cohort.schema();
  auto enc = std::make_shared<const Encoding>(Encoding::fit(train_cohort, cfg.embed_dim, cfg.seed));
  const EncodedBatch data = encode(train_cohort, enc);
  const std::size_t n = data.size();
  const auto steps_t = static_cast<Eigen::Index>(schema.series_length());

  TrainResult result;
  result.bundle = std::make_unique<ModelBundle>(schema, enc, cfg, cfg.seed);
  ModelBundle& bundle = *result.bundle;
  Generator& gen = bundle.generator();
  Critic& critic = bundle.critic();
  const CriticFn critic_fn = as_critic_fn(critic);

  nn::Adam g_opt(gen.params().vars(), {cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  nn::Adam d_opt(critic.params().vars(), {cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  BatchSampler sampler(n, batch, make_rng(cfg.seed, "batches"));
  Rng noise_rng = make_rng(cfg.seed, "noise");
  Rng gp_rng = make_rng(cfg.seed, "gp");

  const int steps_per_epoch = static_cast<int>((n + batch - 1) / batch);
  const int total = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * steps_per_epoch;

  Matrix dataset_r, dataset_valid;
  if (cfg.corr_target == CorrelationTarget::dataset)
    dataset_r = pearson(pooled_scalars(data.sequences, *enc), &dataset_valid);

  // Fixed probe: real subset, noise and labels are drawn once.
  std::vector<std::size_t> probe_idx(n);
  std::iota(probe_idx.begin(), probe_idx.end(), std::size_t{0});
  {
    Rng probe_rng = make_rng(cfg.seed, "probe");
    std::shuffle(probe_idx.begin(), probe_idx.end(), probe_rng);
    probe_idx.resize(std::min<std::size_t>(n, static_cast<std::size_t>(cfg.probe_size)));
  }
  std::vector<Eigen::MatrixXd> probe_real_seq;
  for (auto i : probe_idx) probe_real_seq.push_back(data.sequences[i]);
  const Matrix probe_real = flat_rows(probe_real_seq);
  const Labels probe_labels = labels_at(data, probe_idx);
  Rng probe_noise_rng = make_rng(cfg.seed, "probe-noise");
  const auto probe_noise = sample_noise(steps_t, static_cast<Eigen::Index>(probe_idx.size()),
                                        cfg.latent_dim, probe_noise_rng);
  result.trace.probe_sigma = metrics::median_pairwise_distance(probe_real);
  if (!(result.trace.probe_sigma > 0.0)) result.trace.probe_sigma = 1.0;
  auto probe = [&]() {
    ad::NoGradGuard no_grad;
    const auto fake = to_sequences(values(gen.forward(probe_noise, probe_labels)));
    return metrics::mmd_rbf(probe_real, flat_rows(fake), result.trace.probe_sigma);
  };
  result.trace.initial_probe_mmd = probe();

  bool warned_pairs = false;
  double lr = cfg.lr;
  for (int step = 1; step <= total; ++step) {
    CriticLoss last_d;
    for (int k = 0; k < cfg.critic_steps; ++k) {
      const auto idx = sampler.next();
      const auto labels = labels_at(data, idx);
      const auto real = gather_time_major(data.sequences, idx);
      const auto noise =
          sample_noise(steps_t, static_cast<Eigen::Index>(idx.size()), cfg.latent_dim, noise_rng);
      std::vector<Matrix> fake;
      {
        ad::NoGradGuard no_grad;
        fake = values(gen.forward(noise, labels));
      }
      last_d = critic_loss(critic_fn, real, fake, labels, cfg, &gp_rng);
      if (!finite(last_d.total.item()))
        throw Diverged(fmt::format("critic loss is not finite at step {}", step));
      d_opt.step(ad::grad(last_d.total, critic.params().vars()));
    }

    const auto idx = sampler.next();
    const auto labels = labels_at(data, idx);
    Matrix r_real = dataset_r, r_valid = dataset_valid;
    if (cfg.corr_target == CorrelationTarget::batch && cfg.lambda_corr > 0.0) {
      std::vector<Eigen::MatrixXd> real_seq;
      for (auto i : idx) real_seq.push_back(data.sequences[i]);
      r_real = pearson(pooled_scalars(real_seq, *enc), &r_valid);
    }
    const auto noise =
        sample_noise(steps_t, static_cast<Eigen::Index>(idx.size()), cfg.latent_dim, noise_rng);
    const Sequence fake = gen.forward(noise, labels);
    const auto g_loss = generator_loss(critic_fn, fake, labels, r_real, r_valid, *enc, cfg);
    if (!finite(g_loss.total.item()))
      throw Diverged(fmt::format("generator loss is not finite at step {}", step));
    g_opt.step(ad::grad(g_loss.total, gen.params().vars()));
    if (g_loss.undefined_pairs > 0 && !warned_pairs) {
      spdlog::warn("{} variable pair(s) have zero variance in a batch; they are left out of "
                   "the alignment loss",
                   g_loss.undefined_pairs);
      warned_pairs = true;
    }

    TraceRow row;
    row.step = step;
    row.loss_d = last_d.total.item();
    row.loss_g = g_loss.total.item();
    row.gp = last_d.gp;
    row.alignment = g_loss.alignment;
    if (step % cfg.probe_every == 0 || step == total) row.probe_mmd = probe();
    result.trace.rows.push_back(row);
    if (progress) progress(row);

    bundle.set_steps(step);
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 &&
        !cfg.checkpoint_dir.empty())
      bundle.save(cfg.checkpoint_dir / fmt::format("step-{:06d}", step));
    if (cfg.lr_decay < 1.0 && step % steps_per_epoch == 0) {
      lr *= cfg.lr_decay;
      g_opt.set_lr(lr);
      d_opt.set_lr(lr);
    }
  }
  return result;
}

EncodedBatch generate_encoded(const ModelBundle& bundle, std::size_t count, std::uint64_t seed,
                              ConditionLabel label) {
  EncodedBatch out;
  out.encoding = bundle.encoding_ptr();
  Rng rng = make_rng(seed, "generate");
  const auto steps = static_cast<Eigen::Index>(bundle.schema().series_length());
  ad::NoGradGuard no_grad;
  for (std::size_t done = 0; done < count;) {
    const std::size_t chunk = std::min(kGenerateChunk, count - done);
    const auto noise = sample_noise(steps, static_cast<Eigen::Index>(chunk),
                                    bundle.config().latent_dim, rng);
    const Labels labels(chunk, label.value());
    auto seqs = to_sequences(values(bundle.generator().forward(noise, labels)));
    for (auto& s : seqs) {
      out.patient_ids.push_back(fmt::format("syn-{:06d}", done));
      out.labels.push_back(label);
      out.sequences.push_back(std::move(s));
      ++done;
    }
  }
  return out;
}

Cohort generate_minority(const ModelBundle& bundle, std::size_t count, std::uint64_t seed) {
  return decode(generate_encoded(bundle, count, seed, ConditionLabel::minority()),
                bundle.schema());
}

}  // namespace seqaug::gan
