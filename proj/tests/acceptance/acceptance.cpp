// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "seqaug/autodiff.hpp"
#include "seqaug/cohort.hpp"
#include "seqaug/downstream.hpp"
#include "seqaug/encoding.hpp"
#include "seqaug/errors.hpp"
#include "seqaug/gan.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/smote.hpp"
#include "seqaug/text_io.hpp"
#include "seqaug/toy.hpp"

namespace fs = std::filesystem;
namespace ad = seqaug::ad;
namespace gan = seqaug::gan;
namespace metrics = seqaug::metrics;
namespace downstream = seqaug::downstream;
using ad::Matrix;
using ad::Var;
using seqaug::Cohort;
using seqaug::ConditionLabel;

namespace {

// Tolerances.
constexpr double kOracleTol = 1e-9;
constexpr double kHandTol = 1e-6;
// Quoted hand values carry 5 decimals.
constexpr double kQuotedTol = 5e-6;
constexpr double kLossTol = 1e-9;
constexpr double kFiniteDiffTol = 1e-4;
constexpr double kSmoteTol = 1e-9;
constexpr double kDownstreamRatio = 1.1;
constexpr double kMinuteLimit = 1.0;
constexpr double kToyMinuteLimit = 15.0;

// Toy experiment.
constexpr std::uint64_t kSeed = 20240607;
constexpr std::size_t kMajor = 400;
constexpr std::size_t kMinor = 80;
constexpr std::size_t kHoldout = 12;

gan::TrainingConfig toy_training() {
  gan::TrainingConfig c;
  c.seed = seqaug::substream_seed(kSeed, "train");
  c.hidden_size = 16;
  c.latent_dim = 8;
  c.critic_steps = 3;
  c.lr = 3e-4;
  c.max_steps = 400;
  c.probe_every = 50;
  return c;
}

downstream::RegressorConfig toy_regressor() {
  downstream::RegressorConfig c;
  c.seed = seqaug::substream_seed(kSeed, "downstream");
  c.hidden_size = 16;
  c.epochs = 2;
  c.batch_size = 64;
  return c;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, seqaug::Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// ---------------------------------------------------------------- AC1

Outcome ac1_metric_oracles() {
  const auto t0 = Clock::now();
  seqaug::Rng rng(101);
  std::uniform_int_distribution<int> size(10, 100);
  double kl_err = 0.0, mmd_err = 0.0, tau_err = 0.0;
  bool auth_exact = true;
  seqaug::VariableSpec numeric{"x", seqaug::VariableKind::numeric, "", {}, {}, seqaug::NumericRange{-100, 100}};
  seqaug::VariableSpec category{"c", seqaug::VariableKind::categorical, "", {"a", "b", "c", "d"}, {}, {}};
  for (int trial = 0; trial < 20; ++trial) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> cat(0, 3);
    const auto nr = static_cast<std::size_t>(size(rng)), ns = static_cast<std::size_t>(size(rng));
    std::vector<double> real(nr), syn(ns), creal(nr), csyn(ns);
    for (auto& x : real) x = normal(rng) * 3.0;
    for (auto& x : syn) x = normal(rng) * 2.0 + 1.0;
    for (auto& x : creal) x = cat(rng);
    for (auto& x : csyn) x = cat(rng) % 3;
    kl_err = std::max(kl_err, std::abs(metrics::kl_divergence(real, syn, numeric, 50, 1e-8) -
                                       oracle::kl_numeric(real, syn, 50, 1e-8)));
    kl_err = std::max(kl_err, std::abs(metrics::kl_divergence(creal, csyn, category, 50, 1e-8) -
                                       oracle::kl(oracle::category_histogram(creal, 4, 1e-8),
                                                  oracle::category_histogram(csyn, 4, 1e-8))));

    const Eigen::Index dim = 1 + trial % 5;
    const Matrix x = random_matrix(size(rng), dim, rng), y = random_matrix(size(rng), dim, rng, 1.5);
    const double sigma = 0.5 + 0.075 * trial;
    mmd_err = std::max(mmd_err, std::abs(metrics::mmd_rbf(x, y, sigma) - oracle::mmd2(x, y, sigma)));

    Matrix data = random_matrix(size(rng), 4, rng).array().round();  // rounding creates ties
    if (trial % 4 == 0) data.col(3).setConstant(2.0);
    tau_err = std::max(tau_err, oracle::max_abs_diff(metrics::kendall_matrix(data), oracle::tau_matrix(data)));

    const Matrix real_pts = random_matrix(size(rng), dim, rng);
    const auto lib = metrics::authenticity_audit(x, real_pts);
    const auto ref = oracle::nearest(x, real_pts);
    auth_exact = auth_exact && lib.min_distance == ref.min_distance && lib.nearest == ref.per_syn;
  }
  const double minutes = minutes_since(t0);
  Outcome o;
  o.pass = kl_err <= kOracleTol && mmd_err <= kOracleTol && tau_err <= kOracleTol && auth_exact &&
           minutes < kMinuteLimit;
  o.detail = fmt::format("20 trials: max |dKL| {:.2e}, |dMMD| {:.2e}, |dtau| {:.2e}, authenticity {}, {:.2f} s",
                         kl_err, mmd_err, tau_err, auth_exact ? "exact" : "MISMATCH", minutes * 60.0);
  return o;
}

// ---------------------------------------------------------------- AC2

Outcome ac2_hand_values() {
  const double kl = metrics::kl_from_probabilities({0.5, 0.5}, {0.25, 0.75}, 1e-15);
  const double mmd = metrics::mmd_rbf(Matrix::Constant(1, 1, 0.0), Matrix::Constant(1, 1, 2.0), 1.0);
  const double tau = metrics::kendall_tau_b({1, 2, 3}, {1, 3, 2});
  Outcome o;
  const double kl_exact = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  const double mmd_exact = 2.0 - 2.0 * std::exp(-2.0);
  o.pass = std::abs(kl - kl_exact) <= kHandTol && std::abs(kl - 0.14384) <= kQuotedTol &&
           std::abs(mmd - mmd_exact) <= kHandTol && std::abs(mmd - 1.72933) <= kQuotedTol &&
           std::abs(tau - 1.0 / 3.0) <= kHandTol;
  o.detail = fmt::format("KL {:.6f}, MMD^2 {:.6f}, tau {:.6f}", kl, mmd, tau);
  return o;
}

// ---------------------------------------------------------------- AC3

double max_fd_error(const std::function<Var()>& f, std::vector<Var> leaves) {
  const auto grads = ad::grad(f(), leaves);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    Matrix& x = leaves[k].mutable_value();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double orig = x.data()[i];
      x.data()[i] = orig + h;
      const double up = f().item();
      x.data()[i] = orig - h;
      const double down = f().item();
      x.data()[i] = orig;
      const double fd = (up - down) / (2 * h), an = grads[k].value().data()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an)));
    }
  }
  return worst;
}

Outcome ac3_losses() {
  const auto t0 = Clock::now();
  // One sequence, 3 steps, 2 numeric channels, critic D(x) = sum_t x_t w + b.
  const Matrix w = (Matrix(2, 1) << 0.5, -0.25).finished();
  const double b = 0.3;
  const gan::CriticFn linear = [&](const gan::Sequence& xs, const gan::Labels&) {
    Var total = ad::matmul(xs[0], Var(w));
    for (std::size_t t = 1; t < xs.size(); ++t) total = ad::add(total, ad::matmul(xs[t], Var(w)));
    return ad::add_scalar(total, b);
  };
  const std::vector<Matrix> real = {(Matrix(1, 2) << 0.2, -0.4).finished(), (Matrix(1, 2) << 0.5, 0.1).finished(),
                                    (Matrix(1, 2) << -0.3, 0.7).finished()};
  const std::vector<Matrix> fake = {(Matrix(1, 2) << -0.1, 0.3).finished(), (Matrix(1, 2) << 0.6, -0.2).finished(),
                                    (Matrix(1, 2) << 0.4, 0.9).finished()};
  gan::TrainingConfig cfg;
  cfg.lambda_gp = 10.0;
  cfg.lambda_corr = 0.7;

  double score_real = b, score_fake = b;
  for (int t = 0; t < 3; ++t) {
    score_real += real[t](0, 0) * w(0, 0) + real[t](0, 1) * w(1, 0);
    score_fake += fake[t](0, 0) * w(0, 0) + fake[t](0, 1) * w(1, 0);
  }
  const double grad_norm = std::sqrt(3.0 * (w(0, 0) * w(0, 0) + w(1, 0) * w(1, 0)));
  const double expected_d = score_fake - score_real + cfg.lambda_gp * (grad_norm - 1.0) * (grad_norm - 1.0);
  const auto d = gan::critic_loss(linear, real, fake, {1}, cfg, nullptr);

  // Pearson over the three fake rows.
  double ma = 0, mb = 0;
  for (const auto& f : fake) ma += f(0, 0) / 3, mb += f(0, 1) / 3;
  double sab = 0, saa = 0, sbb = 0;
  for (const auto& f : fake) {
    sab += (f(0, 0) - ma) * (f(0, 1) - mb);
    saa += (f(0, 0) - ma) * (f(0, 0) - ma);
    sbb += (f(0, 1) - mb) * (f(0, 1) - mb);
  }
  const double r_syn = sab / std::sqrt(saa * sbb), r_target = 0.2;
  const double expected_g = -score_fake + cfg.lambda_corr * std::abs(r_syn - r_target);

  seqaug::VariableSpec va{"a", seqaug::VariableKind::numeric, "", {}, {}, seqaug::NumericRange{-1, 1}};
  seqaug::VariableSpec vb = va;
  vb.name = "b";
  const seqaug::CohortSchema schema({va, vb}, 3);
  Matrix obs(3, 2);
  obs << -1, -1, 0, 0, 1, 1;
  const Cohort unit(schema, {seqaug::PatientSeries{"p0", ConditionLabel::minority(), obs}});
  const auto enc = seqaug::Encoding::fit(unit, 4, 0);
  const Matrix r_real = (Matrix(2, 2) << 1, r_target, r_target, 1).finished();
  const auto g = gan::generator_loss(linear, gan::constant_sequence(fake), {1}, r_real, Matrix::Ones(2, 2), enc, cfg);

  // Gradient penalty of a linear critic with n unit weights: (sqrt(n) - 1)^2.
  double gp_err = 0.0;
  for (int n : {1, 4, 9, 10, 48}) {
    const gan::CriticFn ones = [](const gan::Sequence& xs, const gan::Labels&) {
      Var total = ad::sum_over_cols(xs[0]);
      for (std::size_t t = 1; t < xs.size(); ++t) total = ad::add(total, ad::sum_over_cols(xs[t]));
      return total;
    };
    std::vector<Matrix> pts(static_cast<std::size_t>(n), Matrix::Constant(2, 1, 0.5));
    const auto gp = gan::gradient_penalty(ones, pts, {0, 1});
    const double expect = (std::sqrt(n) - 1.0) * (std::sqrt(n) - 1.0);
    gp_err = std::max(gp_err, std::abs(gp.penalty.item() - expect));
  }

  // 3-step toy networks against central differences.
  seqaug::Rng rng(303);
  gan::NetworkShape shape;
  shape.width = 3;
  shape.latent_dim = 2;
  shape.hidden_size = 3;
  shape.layers = 2;
  shape.label_dim = 2;
  gan::Generator gen(shape, {true, false, true}, rng);
  gan::Critic critic(shape, rng);
  const auto noise = gan::sample_noise(3, 2, shape.latent_dim, rng);
  std::vector<Matrix> toy_real;
  for (int t = 0; t < 3; ++t) toy_real.push_back(random_matrix(2, 3, rng, 0.5));
  const gan::Labels labels = {0, 1};
  const auto critic_fn = gan::as_critic_fn(critic);
  std::vector<Matrix> toy_fake;
  {
    ad::NoGradGuard guard;
    toy_fake = gan::values(gen.forward(noise, labels));
  }
  gan::TrainingConfig toy_cfg;
  const double fd_d = max_fd_error(
      [&] { return gan::critic_loss(critic_fn, toy_real, toy_fake, labels, toy_cfg, nullptr).total; },
      critic.params().vars());
  const double fd_g = max_fd_error(
      [&] { return ad::neg(ad::mean(critic_fn(gen.forward(noise, labels), labels))); }, gen.params().vars());

  const double minutes = minutes_since(t0);
  Outcome o;
  const double err_d = std::abs(d.total.item() - expected_d), err_g = std::abs(g.total.item() - expected_g);
  o.pass = err_d <= kLossTol && err_g <= kLossTol && gp_err <= kLossTol && fd_d <= kFiniteDiffTol &&
           fd_g <= kFiniteDiffTol && minutes < kMinuteLimit;
  o.detail = fmt::format("|dL_D| {:.2e}, |dL_G| {:.2e}, |dGP| {:.2e}, finite-diff rel err critic {:.2e} generator {:.2e}",
                         err_d, err_g, gp_err, fd_d, fd_g);
  return o;
}

// ---------------------------------------------------------------- AC4

Outcome ac4_smote(const Cohort& train_minority) {
  auto enc = std::make_shared<const seqaug::Encoding>(seqaug::Encoding::fit(train_minority, 4, 7));
  const auto pool = seqaug::flatten(seqaug::encode(train_minority, enc));
  const std::size_t k = 5, count = 150;
  const auto a = seqaug::smote_generate(pool, k, count, 11);
  const auto again = seqaug::smote_generate(pool, k, count, 11);

  // Brute-force 5-NN per minority point.
  std::vector<std::vector<std::size_t>> neighbours(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < pool.size(); ++j)
      if (j != i) d.emplace_back((pool[j].vector - pool[i].vector).squaredNorm(), j);
    std::stable_sort(d.begin(), d.end(), [](auto& x, auto& y) { return x.first < y.first; });
    for (std::size_t m = 0; m < k; ++m) neighbours[i].push_back(d[m].second);
  }

  // Every sample must be x + u (x_nn - x) for some (x, x_nn), with one u for all components.
  std::size_t decomposed = 0;
  double worst = 0.0;
  for (const auto& s : a.samples) {
    bool found = false;
    for (std::size_t i = 0; i < pool.size() && !found; ++i) {
      for (auto j : neighbours[i]) {
        const Eigen::VectorXd dir = pool[j].vector - pool[i].vector;
        const Eigen::VectorXd off = s.vector - pool[i].vector;
        Eigen::Index pivot;
        if (dir.cwiseAbs().maxCoeff(&pivot) == 0.0) continue;
        const double u = off(pivot) / dir(pivot);
        if (u < -kSmoteTol || u > 1.0 + kSmoteTol) continue;
        double spread = 0.0;
        for (Eigen::Index c = 0; c < dir.size(); ++c) spread = std::max(spread, std::abs(off(c) - u * dir(c)));
        if (spread <= kSmoteTol) {
          worst = std::max(worst, spread);
          found = true;
          break;
        }
      }
    }
    decomposed += found ? 1 : 0;
  }
  bool deterministic = a.samples.size() == again.samples.size();
  for (std::size_t i = 0; deterministic && i < a.samples.size(); ++i)
    deterministic = a.samples[i].vector == again.samples[i].vector;
  Outcome o;
  o.pass = decomposed == count && deterministic;
  o.detail = fmt::format("{}/{} samples decompose over the 5-NN (max residual {:.2e}), rerun {}", decomposed,
                         count, worst, deterministic ? "identical" : "DIFFERS");
  return o;
}

// ---------------------------------------------------------------- AC5 / AC6

double class_mean(const Cohort& c, ConditionLabel label, std::size_t v) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& p : c.patients())
    if (p.label == label) s += p.observations.col(static_cast<Eigen::Index>(v)).sum(), n += p.observations.rows();
  return s / static_cast<double>(n);
}

struct ToyRun {
  seqaug::HoldoutSplit split;
  Cohort cagan_syn;
  double minutes = 0.0;
};

Outcome ac5_toy_ranking(ToyRun& run) {
  const auto t0 = Clock::now();
  const Cohort toy = seqaug::make_toy_cohort(kMajor, kMinor, kSeed);
  run.split = seqaug::holdout_split(toy, kHoldout, seqaug::substream_seed(kSeed, "split"));
  const Cohort& train = run.split.train;
  const Cohort train_minor = train.with_label(ConditionLabel::minority());
  const std::size_t count = seqaug::deficit(train);

  auto result = gan::train(train, toy_training());
  const auto& bundle = *result.bundle;
  run.cagan_syn = gan::generate_minority(bundle, count, seqaug::substream_seed(kSeed, "generate"));
  const Cohort syn_major = seqaug::decode(
      gan::generate_encoded(bundle, count, seqaug::substream_seed(kSeed, "generate-major"), ConditionLabel::majority()),
      train.schema());

  const auto& enc = bundle.encoding();
  const auto pool = seqaug::flatten(seqaug::encode(train_minor, bundle.encoding_ptr()));
  const auto smote = seqaug::smote_generate(pool, 5, count, seqaug::substream_seed(kSeed, "smote"));
  const Cohort smote_syn = seqaug::decode(
      seqaug::unflatten(smote.samples, static_cast<Eigen::Index>(train.schema().series_length()),
                        bundle.encoding_ptr(), ConditionLabel::minority()),
      train.schema());

  const double d_gan = metrics::authenticity_audit(run.cagan_syn, train_minor, enc).min_distance;
  const double d_smote = metrics::authenticity_audit(smote_syn, train_minor, enc).min_distance;
  const auto probes = result.trace.probes();
  const double mmd_start = probes.front().second, mmd_end = probes.back().second;

  const auto map = *train.schema().index_of("MAP");
  const double real_gap = class_mean(train, ConditionLabel::majority(), map) - class_mean(train, ConditionLabel::minority(), map);
  const double syn_gap = class_mean(syn_major, ConditionLabel::majority(), map) -
                         class_mean(run.cagan_syn, ConditionLabel::minority(), map);

  run.minutes = minutes_since(t0);
  const bool a = d_gan > d_smote, b = mmd_end < mmd_start, c = (real_gap > 0) == (syn_gap > 0) && syn_gap != 0.0;
  Outcome o;
  o.pass = a && b && c && run.minutes <= kToyMinuteLimit;
  o.detail = fmt::format(
      "(a) min distance CA-GAN {:.4f} vs SMOTE {:.4f} {}; (b) probe MMD {:.5f} -> {:.5f} {}; "
      "(c) MAP class gap real {:+.3f} synthetic {:+.3f} {}; {:.1f} min",
      d_gan, d_smote, a ? "ok" : "FAIL", mmd_start, mmd_end, b ? "ok" : "FAIL", real_gap, syn_gap, c ? "ok" : "FAIL",
      run.minutes);
  return o;
}

Outcome ac6_downstream(const ToyRun& run) {
  const auto& split = run.split;
  const std::size_t per_patient = downstream::window_count(48, 20, 1);
  auto enc = std::make_shared<const seqaug::Encoding>(
      seqaug::Encoding::fit(split.train, 4, seqaug::substream_seed(kSeed, "downstream-encoding")));
  const Cohort one(split.test.schema(), {split.test.patient(0)});
  const std::size_t made = downstream::make_windows(one, *enc, 20, 1).size();

  const Cohort augmented = seqaug::concat(split.train, run.cagan_syn);
  bool clean = true;
  try {
    downstream::assert_no_leakage(split.test, {&split.train, &run.cagan_syn, &augmented});
  } catch (const seqaug::Leakage&) {
    clean = false;
  }
  bool caught = false;
  try {
    const Cohort leaky = seqaug::concat(split.train, one);
    downstream::assert_no_leakage(split.test, {&leaky});
  } catch (const seqaug::Leakage&) {
    caught = true;
  }

  const auto cfg = toy_regressor();
  auto median_for = [&](const Cohort& c) {
    const auto bundle = downstream::train_regressor(downstream::make_windows(c, *enc, 20, 1), enc, cfg, 20, 1);
    return metrics::median(downstream::evaluate_regressor(bundle, split.test));
  };
  const double real = median_for(split.train);
  const double aug = median_for(augmented);
  Outcome o;
  o.pass = per_patient == 28 && made == 28 && clean && caught && aug <= kDownstreamRatio * real;
  o.detail = fmt::format("windows {} (made {}), leakage check {} / injected {}, median rel. error real {:.3f}% "
                         "augmented {:.3f}% (ratio {:.3f})",
                         per_patient, made, clean ? "clean" : "LEAK", caught ? "caught" : "MISSED", real, aug,
                         aug / real);
  return o;
}

// ---------------------------------------------------------------- AC7

int run_cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} -q", SEQAUG_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return status;
}

Outcome ac7_determinism(const fs::path& work) {
  fs::create_directories(work);
  const auto cfg = work / "tiny.cfg";
  seqaug::write_file(cfg,
                     "seed = 5\nmethod = cagan\ndata.path = tiny.csv\ntoy.n_major = 40\ntoy.n_minor = 16\n"
                     "holdout.n_minority = 4\ntrain.max_steps = 3\ntrain.hidden_size = 8\ntrain.latent_dim = 4\n"
                     "train.critic_steps = 2\ntrain.probe_every = 2\ndownstream.hidden_size = 8\n"
                     "downstream.epochs = 1\ndownstream.windows_per_epoch = 128\n");
  std::vector<std::string> failures;
  for (const char* out : {"run-a", "run-b"}) {
    for (const char* cmd : {"maketoy", "train", "generate", "evaluate", "downstream"}) {
      const int rc = run_cli(fmt::format("{} -c \"{}\" -s out.dir={}", cmd, cfg.string(), out));
      if (rc != 0) failures.push_back(fmt::format("{} {} exited {}", out, cmd, rc));
    }
  }
  std::size_t compared = 0, identical = 0;
  const auto root_a = work / "run-a";
  if (fs::exists(root_a)) {
    for (const auto& entry : fs::recursive_directory_iterator(root_a)) {
      if (entry.path().extension() != ".csv") continue;
      const auto rel = fs::relative(entry.path(), root_a);
      const auto other = work / "run-b" / rel;
      ++compared;
      if (fs::exists(other) && seqaug::read_file(entry.path()) == seqaug::read_file(other)) ++identical;
    }
  }
  Outcome o;
  o.pass = failures.empty() && compared >= 6 && identical == compared;
  o.detail = failures.empty() ? fmt::format("{}/{} CSV artifacts byte-identical across two runs", identical, compared)
                              : failures.front();
  return o;
}

// ---------------------------------------------------------------- AC8

Outcome ac8_fixed_point(const Cohort& real) {
  const auto enc = seqaug::Encoding::fit(real, 4, 9);
  metrics::MetricsConfig cfg;
  cfg.seed = 3;
  const auto report = metrics::fidelity_report(real, real, enc, cfg);
  bool zero = true;
  for (const auto& v : report.variables) zero = zero && v.kl == 0.0 && v.mmd == 0.0;
  const bool same = oracle::same_matrix(report.kendall_real, report.kendall_syn);
  Outcome o;
  o.pass = zero && same && report.kl_median == 0.0 && report.mmd_median == 0.0;
  o.detail = fmt::format("{} variables: KL and MMD {}, Kendall matrices {}", report.variables.size(),
                         zero ? "all exactly 0" : "NOT all 0", same ? "identical" : "DIFFER");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "seqaug-acceptance";
  fs::remove_all(work);

  int failed = 0;
  auto report = [&](const char* id, const char* title, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("threw: {}", e.what());
    }
    fmt::print("{} {} {}: {}\n", id, o.pass ? "PASS" : "FAIL", title, o.detail);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };

  ToyRun run;
  const Cohort toy_minor = seqaug::make_toy_cohort(0, kMinor - kHoldout, kSeed + 1);
  report("AC1", "metric oracles", ac1_metric_oracles);
  report("AC2", "hand values", ac2_hand_values);
  report("AC3", "loss correctness", ac3_losses);
  report("AC4", "SMOTE convexity", [&] { return ac4_smote(toy_minor); });
  report("AC5", "toy ranking", [&] { return ac5_toy_ranking(run); });
  report("AC6", "downstream harness", [&] {
    if (run.cagan_syn.empty()) return Outcome{false, "no CA-GAN samples from AC5"};
    return ac6_downstream(run);
  });
  report("AC7", "pipeline determinism", [&] { return ac7_determinism(work / "determinism"); });
  report("AC8", "fidelity fixed point", [&] { return ac8_fixed_point(toy_minor); });
  fmt::print("{} of 8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
