#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "seqaug/errors.hpp"
#include "seqaug/metrics.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/toy.hpp"

using namespace seqaug;
using namespace seqaug::metrics;

namespace {

std::vector<double> normal_draws(std::size_t n, double mean, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

Eigen::MatrixXd normal_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  const auto v = normal_draws(static_cast<std::size_t>(n * d), 0.0, 1.0, seed);
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, d);
}

VariableSpec numeric_spec() {
  VariableSpec s;
  s.name = "x";
  s.kind = VariableKind::numeric;
  s.numeric_range = NumericRange{-100, 100};
  return s;
}

}  // namespace

TEST(Kl, MatchesOracleOnNumericColumns) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto real = normal_draws(300, 0.0, 1.0, seed);
    const auto syn = normal_draws(200, 0.4, 1.3, seed + 100);
    EXPECT_NEAR(kl_divergence(real, syn, numeric_spec()), oracle::kl_numeric(real, syn, 50, 1e-8), 1e-9);
    EXPECT_NEAR(kl_divergence(real, syn, numeric_spec(), 7, 1e-3), oracle::kl_numeric(real, syn, 7, 1e-3), 1e-9);
  }
}

TEST(Kl, CategoricalUsesSchemaCategories) {
  const auto schema = reference_schema();
  const auto& spec = schema.variable(*schema.index_of("GCS"));
  const auto k = static_cast<int>(spec.categories.size());
  const std::vector<double> real{0, 1, 1, 2, 2, 2}, syn{0, 0, 1, 2};
  const double expect = oracle::kl(oracle::category_histogram(real, k, 1e-8),
                                   oracle::category_histogram(syn, k, 1e-8));
  EXPECT_NEAR(kl_divergence(real, syn, spec), expect, 1e-12);
}

TEST(Kl, HandValues) {
  const std::vector<double> p{0.5, 0.5}, q{0.25, 0.75};
  EXPECT_NEAR(kl_from_probabilities(p, q, 1e-12), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-11);
  EXPECT_THROW(kl_from_probabilities(p, q, 0.0), InvalidArgument);
  EXPECT_EQ(kl_from_probabilities(p, p, 1e-8), 0.0);
  const auto x = normal_draws(50, 0, 1, 3);
  EXPECT_EQ(kl_divergence(x, x, numeric_spec()), 0.0);
}

TEST(Mmd, MatchesOracleAndIsZeroOnIdenticalSets) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto x = normal_matrix(40, 3, seed), y = normal_matrix(25, 3, seed + 50);
    for (double sigma : {0.5, 1.0, 3.0}) EXPECT_NEAR(mmd_rbf(x, y, sigma), oracle::mmd2(x, y, sigma), 1e-12);
    EXPECT_EQ(mmd_rbf(x, x, 1.0), 0.0);
  }
}

TEST(Mmd, SinglePointsHandValue) {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  EXPECT_NEAR(mmd_rbf(a, b, 1.0), 2.0 - 2.0 * std::exp(-0.5), 1e-15);
}

TEST(Mmd, WeightsEqualRepeatedPoints) {
  Eigen::MatrixXd x(2, 1), rep(3, 1), y(2, 1);
  x << 0, 1;
  rep << 0, 0, 1;
  y << 0.5, 2;
  Eigen::VectorXd w(2), one = Eigen::VectorXd::Ones(2);
  w << 2, 1;
  EXPECT_NEAR(mmd_rbf_weighted(x, w, y, one, 1.0), mmd_rbf(rep, y, 1.0), 1e-14);
  EXPECT_NEAR(variable_mmd(rep, y, 1.0, 1000, 0), mmd_rbf(rep, y, 1.0), 1e-14);
}

TEST(Kendall, MatchesPairCountingWithTies) {
  Rng rng(7);
  std::uniform_int_distribution<int> d(0, 4);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = d(rng), y[i] = d(rng) + 0.5 * x[i];
    EXPECT_NEAR(kendall_tau_b(x, y), oracle::tau_b(x, y), 1e-12);
  }
  EXPECT_DOUBLE_EQ(kendall_tau_b({1, 2, 3}, {3, 2, 1}), -1.0);
  EXPECT_TRUE(std::isnan(kendall_tau_b({1, 1, 1}, {1, 2, 3})));
}

TEST(Kendall, MatrixMatchesOracle) {
  Eigen::MatrixXd data = normal_matrix(60, 4, 8);
  data.col(3).setConstant(2.0);
  const auto m = kendall_matrix(data);
  EXPECT_LT(oracle::max_abs_diff(m, oracle::tau_matrix(data)), 1e-12);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_TRUE(std::isnan(m(3, 0)));
}

TEST(Summary, MedianAndPercentile) {
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_EQ(median({5, 1, 3}), 3.0);
  EXPECT_THROW(median({}), InvalidArgument);
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_EQ(percentile(s, 0), 1.0);
  EXPECT_EQ(percentile(s, 100), 4.0);
  EXPECT_DOUBLE_EQ(percentile(s, 25), 1.75);
  EXPECT_DOUBLE_EQ(percentile(s, 50), 2.5);
  EXPECT_DOUBLE_EQ(median_pairwise_distance((Eigen::MatrixXd(3, 1) << 0, 1, 3).finished()), 2.0);
}

TEST(Authenticity, MatchesExhaustiveSearch) {
  const auto syn = normal_matrix(30, 5, 9), real = normal_matrix(45, 5, 10);
  const auto a = authenticity_audit(syn, real);
  const auto o = oracle::nearest(syn, real);
  EXPECT_NEAR(a.min_distance, o.min_distance, 1e-12);
  ASSERT_EQ(a.nearest.size(), o.per_syn.size());
  for (std::size_t i = 0; i < a.nearest.size(); ++i) EXPECT_NEAR(a.nearest[i], o.per_syn[i], 1e-12);
  EXPECT_NEAR((syn.row(static_cast<Eigen::Index>(a.nearest_syn)) -
               real.row(static_cast<Eigen::Index>(a.nearest_real))).norm(),
              a.min_distance, 1e-12);
  ASSERT_EQ(a.percentiles.size(), 3u);
  EXPECT_EQ(a.percentiles[2].first, 50.0);
}

TEST(Authenticity, CopiedRowGivesZero) {
  auto syn = normal_matrix(5, 3, 11);
  const auto real = normal_matrix(9, 3, 12);
  syn.row(3) = real.row(6);
  const auto a = authenticity_audit(syn, real);
  EXPECT_EQ(a.min_distance, 0.0);
  EXPECT_EQ(a.nearest_syn, 3u);
  EXPECT_EQ(a.nearest_real, 6u);
}

TEST(Fidelity, CohortAgainstItselfIsAFixedPoint) {
  const auto toy = make_toy_cohort(0, 12, 13);
  const auto enc = Encoding::fit(toy, 4, 1);
  MetricsConfig cfg;
  cfg.projection = false;
  const auto rep = fidelity_report(toy, toy, enc, cfg);
  ASSERT_EQ(rep.variables.size(), 20u);
  for (const auto& v : rep.variables) {
    EXPECT_EQ(v.kl, 0.0) << v.name;
    EXPECT_EQ(v.mmd, 0.0) << v.name;
  }
  EXPECT_EQ(rep.sequence_mmd, 0.0);
  EXPECT_EQ(rep.authenticity.min_distance, 0.0);
  EXPECT_TRUE(oracle::same_matrix(rep.kendall_real, rep.kendall_syn));
  EXPECT_FALSE(rep.projection);
}

TEST(Fidelity, ShiftedCohortScoresWorse) {
  const auto real = make_toy_cohort(0, 20, 14);
  ToyParameters shifted;
  shifted.map_mean = {72.0, 85.0};
  const auto syn = make_toy_cohort(0, 20, 15, shifted);
  const auto same = make_toy_cohort(0, 20, 16);
  const auto enc = Encoding::fit(real, 4, 1);
  const auto map = *real.schema().index_of("MAP");
  const auto far = fidelity_report(real, syn, enc);
  const auto near = fidelity_report(real, same, enc);
  EXPECT_GT(far.variables[map].kl, near.variables[map].kl);
  EXPECT_GT(far.variables[map].mmd, near.variables[map].mmd);
  ASSERT_TRUE(far.projection);
  EXPECT_EQ(far.projection->real.rows(), 20);
}

TEST(Fidelity, CsvLayouts) {
  const auto toy = make_toy_cohort(0, 6, 17);
  const auto enc = Encoding::fit(toy, 4, 1);
  const auto rep = fidelity_report(toy, toy, enc);
  const auto csv = fidelity_csv(rep);
  EXPECT_EQ(csv.rfind("variable,kl,mmd\nMAP,", 0), 0u);
  EXPECT_NE(csv.find("\nmedian,"), std::string::npos);
  const auto m = matrix_csv((Eigen::MatrixXd(2, 2) << 1, NAN, 0.5, 1).finished(), {"a", "b"});
  EXPECT_EQ(m.substr(0, 10), "variable,a");
  EXPECT_NE(m.find(",NA"), std::string::npos);
  EXPECT_THROW(matrix_csv(Eigen::MatrixXd::Zero(2, 2), {"a"}), InvalidArgument);
  EXPECT_EQ(summary_csv(rep).rfind("metric,value\nmin_syn_to_real_distance,", 0), 0u);
}

TEST(Fidelity, RejectsMismatchedSchemas) {
  const auto toy = make_toy_cohort(0, 3, 18);
  const auto enc = Encoding::fit(toy, 4, 1);
  const auto other = CohortSchema::parse("series_length = 48\nvariable.a.kind = numeric\nvariable.a.range = 0,1\n");
  const Cohort empty(toy.schema(), {});
  EXPECT_THROW(fidelity_report(toy, empty, enc), InvalidArgument);
  Eigen::MatrixXd obs = Eigen::MatrixXd::Zero(48, 1);
  const Cohort alien(other, {PatientSeries{"a", ConditionLabel::minority(), obs}});
  EXPECT_THROW(fidelity_report(toy, alien, enc), SchemaMismatch);
}
