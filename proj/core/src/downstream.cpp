#include "seqaug/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug::downstream {

namespace {

using ad::Matrix;
using ad::Var;

Eigen::Index target_width(const Encoding& enc) {
  Eigen::Index w = 0;
  for (auto v : target_variables(enc.schema())) w += enc.slot(v).width;
  return w;
}

double physical(const VariableSpec& spec, double cell) {
  if (!spec.is_discrete()) return cell;
  return spec.category_values.at(static_cast<std::size_t>(cell));
}

std::vector<Var> time_major(const std::vector<WindowedSample>& windows,
                            const std::vector<std::size_t>& idx) {
  const auto steps = windows.at(idx.front()).input.rows();
  const auto width = windows.at(idx.front()).input.cols();
  std::vector<Matrix> m(static_cast<std::size_t>(steps),
                        Matrix(static_cast<Eigen::Index>(idx.size()), width));
  for (std::size_t b = 0; b < idx.size(); ++b)
    for (Eigen::Index t = 0; t < steps; ++t)
      m[static_cast<std::size_t>(t)].row(static_cast<Eigen::Index>(b)) = windows[idx[b]].input.row(t);
  std::vector<Var> out;
  out.reserve(m.size());
  for (auto& x : m) out.emplace_back(std::move(x));
  return out;
}

Matrix targets_of(const std::vector<WindowedSample>& windows, const std::vector<std::size_t>& idx) {
  Matrix y(static_cast<Eigen::Index>(idx.size()), windows.at(idx.front()).target.size());
  for (std::size_t b = 0; b < idx.size(); ++b) y.row(static_cast<Eigen::Index>(b)) = windows[idx[b]].target;
  return y;
}

Var mse(const Var& pred, const Matrix& target) {
  return ad::mean(ad::square(ad::sub(pred, Var(target))));
}

}  // namespace

std::vector<std::size_t> target_variables(const CohortSchema& schema) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < schema.size(); ++v)
    if (schema.variable(v).kind != VariableKind::binary) out.push_back(v);
  return out;
}

std::size_t window_count(std::size_t series_length, int w_in, int w_out) {
  if (w_in < 1 || w_out < 1) throw InvalidArgument("window lengths must be >= 1");
  const auto need = static_cast<std::size_t>(w_in) + static_cast<std::size_t>(w_out);
  if (series_length < need)
    throw WindowTooLong(fmt::format("series length {} is shorter than w_in + w_out = {}",
                                    series_length, need));
  return series_length - need + 1;
}

std::vector<WindowedSample> make_windows(const Cohort& cohort, const Encoding& encoding, int w_in,
                                         int w_out) {
  const auto& schema = cohort.schema();
  const std::size_t per_patient = window_count(schema.series_length(), w_in, w_out);
  const auto targets = target_variables(schema);
  const Eigen::Index tw = target_width(encoding);
  std::vector<WindowedSample> out;
  out.reserve(per_patient * cohort.size());
  for (const auto& p : cohort.patients()) {
    const Eigen::MatrixXd enc = encoding.encode_series(p.observations);
    for (std::size_t s = 0; s < per_patient; ++s) {
      WindowedSample w;
      w.source_patient = p.patient_id;
      w.start = s;
      w.input = enc.middleRows(static_cast<Eigen::Index>(s), w_in);
      w.target.resize(tw * w_out);
      w.target_raw.resize(static_cast<Eigen::Index>(targets.size()) * w_out);
      Eigen::Index c = 0, r = 0;
      for (int h = 0; h < w_out; ++h) {
        const auto t = static_cast<Eigen::Index>(s) + w_in + h;
        for (auto v : targets) {
          const auto slot = encoding.slot(v);
          w.target.segment(c, slot.width) = enc.row(t).segment(slot.offset, slot.width);
          c += slot.width;
          w.target_raw(r++) = physical(schema.variable(v), p.observations(t, static_cast<Eigen::Index>(v)));
        }
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

Regressor::Regressor(Eigen::Index input_width, Eigen::Index output_width, int hidden_size, Rng& rng)
    : hidden_(hidden_size) {
  stack_ = nn::BiLstmStack::create(params_, "stack", input_width, hidden_size, 1, rng);
  head_ = nn::Linear::create(params_, "head", 2 * hidden_size, output_width, rng);
}

Var Regressor::forward(const std::vector<Var>& xs) const {
  const auto hs = stack_(xs);
  // Final state of each direction: forward at the last step, backward at the first.
  const Var fwd = ad::slice_cols(hs.back(), 0, hidden_);
  const Var bwd = ad::slice_cols(hs.front(), hidden_, hidden_);
  return head_(ad::concat_cols({fwd, bwd}));
}

Eigen::MatrixXd Regressor::predict(const std::vector<WindowedSample>& windows) const {
  ad::NoGradGuard no_grad;
  Eigen::MatrixXd out;
  constexpr std::size_t chunk = 256;
  for (std::size_t lo = 0; lo < windows.size(); lo += chunk) {
    std::vector<std::size_t> idx(std::min(chunk, windows.size() - lo));
    std::iota(idx.begin(), idx.end(), lo);
    const Matrix pred = forward(time_major(windows, idx)).value();
    if (out.size() == 0) out.resize(static_cast<Eigen::Index>(windows.size()), pred.cols());
    out.middleRows(static_cast<Eigen::Index>(lo), pred.rows()) = pred;
  }
  return out;
}

RegressorBundle train_regressor(const std::vector<WindowedSample>& windows,
                                std::shared_ptr<const Encoding> encoding,
                                const RegressorConfig& cfg, int w_in, int w_out) {
  if (windows.empty()) throw InvalidArgument("train_regressor: no windows");
  if (!encoding) throw InvalidArgument("train_regressor: no encoding");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.hidden_size < 1 || !(cfg.lr > 0.0) ||
      cfg.windows_per_epoch < 0)
    throw ConfigInvalid("downstream: invalid regressor configuration");
  const Eigen::Index in_w = windows.front().input.cols();
  const Eigen::Index out_w = windows.front().target.size();

  RegressorBundle bundle;
  bundle.encoding = std::move(encoding);
  bundle.w_in = w_in;
  bundle.w_out = w_out;
  Rng init = make_rng(cfg.seed, "regressor-init");
  bundle.model = std::make_unique<Regressor>(in_w, out_w, cfg.hidden_size, init);
  Regressor& model = *bundle.model;

  {
    const Eigen::MatrixXd pred = model.predict(windows);
    Eigen::MatrixXd y(pred.rows(), pred.cols());
    for (std::size_t i = 0; i < windows.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = windows[i].target;
    bundle.initial_loss = (pred - y).array().square().mean();
  }

  nn::Adam opt(model.params().vars(), {cfg.lr, 0.9, 0.999, 1e-8});
  Rng rng = make_rng(cfg.seed, "regressor-batches");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t per_epoch =
      cfg.windows_per_epoch > 0 ? std::min(windows.size(), static_cast<std::size_t>(cfg.windows_per_epoch))
                                : windows.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    int batches = 0;
    for (std::size_t lo = 0; lo < per_epoch; lo += batch) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(per_epoch, lo + batch)));
      const Var loss = mse(model.forward(time_major(windows, idx)), targets_of(windows, idx));
      if (!std::isfinite(loss.item()))
        throw Diverged(fmt::format("regressor loss is not finite in epoch {}", epoch + 1));
      opt.step(ad::grad(loss, model.params().vars()));
      total += loss.item();
      ++batches;
    }
    bundle.epoch_loss.push_back(total / batches);
  }
  return bundle;
}

Eigen::MatrixXd decode_targets(const Eigen::MatrixXd& encoded, const Encoding& encoding, int w_out) {
  const auto& schema = encoding.schema();
  const auto targets = target_variables(schema);
  Eigen::MatrixXd out(encoded.rows(), static_cast<Eigen::Index>(targets.size()) * w_out);
  for (Eigen::Index i = 0; i < encoded.rows(); ++i) {
    Eigen::Index c = 0, r = 0;
    for (int h = 0; h < w_out; ++h) {
      for (auto v : targets) {
        const auto slot = encoding.slot(v);
        const auto& spec = schema.variable(v);
        if (spec.is_discrete()) {
          const auto k = encoding.snap(v, encoded.row(i).segment(c, slot.width));
          out(i, r++) = spec.category_values.at(k);
        } else {
          out(i, r++) = encoding.decode_numeric(v, encoded(i, c));
        }
        c += slot.width;
      }
    }
  }
  return out;
}

std::vector<double> relative_errors(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                                    double eps_rel) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw InvalidArgument("relative_errors: shapes differ");
  if (pred.rows() == 0) throw InvalidArgument("relative_errors: no predictions");
  std::vector<double> out(static_cast<std::size_t>(pred.cols()));
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
      total += std::abs(pred(i, c) - truth(i, c)) / (std::abs(truth(i, c)) + eps_rel);
    out[static_cast<std::size_t>(c)] = 100.0 * total / static_cast<double>(pred.rows());
  }
  return out;
}

std::vector<double> evaluate_regressor(const RegressorBundle& bundle, const Cohort& test) {
  const auto windows = make_windows(test, *bundle.encoding, bundle.w_in, bundle.w_out);
  if (windows.empty()) throw InvalidArgument("evaluate_regressor: empty test cohort");
  const Eigen::MatrixXd pred = decode_targets(bundle.model->predict(windows), *bundle.encoding, bundle.w_out);
  Eigen::MatrixXd truth(pred.rows(), pred.cols());
  for (std::size_t i = 0; i < windows.size(); ++i) truth.row(static_cast<Eigen::Index>(i)) = windows[i].target_raw;
  auto errs = relative_errors(pred, truth);
  if (bundle.w_out == 1) return errs;
  // Average over output hours per variable.
  const std::size_t nt = errs.size() / static_cast<std::size_t>(bundle.w_out);
  std::vector<double> per_var(nt, 0.0);
  for (std::size_t k = 0; k < errs.size(); ++k) per_var[k % nt] += errs[k] / bundle.w_out;
  return per_var;
}

void RegressionReport::add(const std::string& regime, std::vector<double> per_variable) {
  if (per_variable.size() != variables.size())
    throw InvalidArgument("regression report: one error per target variable is required");
  regimes.push_back(regime);
  medians.push_back(metrics::median(per_variable));
  errors.push_back(std::move(per_variable));
}

std::string RegressionReport::to_csv() const {
  std::string out = "variable";
  for (const auto& r : regimes) out += "," + r;
  out += "\n";
  for (std::size_t v = 0; v < variables.size(); ++v) {
    out += variables[v];
    for (const auto& e : errors) out += "," + format_double(e[v]);
    out += "\n";
  }
  out += "median";
  for (double m : medians) out += "," + format_double(m);
  out += "\n";
  return out;
}

void assert_no_leakage(const Cohort& test, const std::vector<const Cohort*>& training_inputs) {
  std::set<std::string> ids;
  for (const auto& p : test.patients()) ids.insert(p.patient_id);
  for (const Cohort* c : training_inputs) {
    if (!c) continue;
    for (const auto& p : c->patients())
      if (ids.count(p.patient_id))
        throw Leakage(fmt::format("test patient '{}' appears in a training input", p.patient_id));
  }
}

}  // namespace seqaug::downstream
