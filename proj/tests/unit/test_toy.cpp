#include <gtest/gtest.h>

#include "seqaug/metrics.hpp"
#include "seqaug/toy.hpp"

using namespace seqaug;

namespace {

double class_map_mean(const Cohort& c, bool minority) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& p : c.patients()) {
    if (p.label.is_minority() != minority) continue;
    total += p.observations.col(0).sum();
    n += static_cast<std::size_t>(p.observations.rows());
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST(Toy, ClassMeansFollowTheParameters) {
  const auto toy = make_toy_cohort(400, 400, 1);
  EXPECT_NEAR(class_map_mean(toy, false), 72.0, 0.72);
  EXPECT_NEAR(class_map_mean(toy, true), 65.0, 0.65);
}

TEST(Toy, LayoutAndDeterminism) {
  const auto a = make_toy_cohort(5, 3, 2), b = make_toy_cohort(5, 3, 2), c = make_toy_cohort(5, 3, 3);
  EXPECT_EQ(a.majority_count(), 5u);
  EXPECT_EQ(a.minority_count(), 3u);
  EXPECT_TRUE(a.patient(5).label.is_minority());
  EXPECT_NE(a.patient(0).patient_id, a.patient(1).patient_id);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.patient(i).observations, b.patient(i).observations);
  EXPECT_NE(a.patient(0).observations, c.patient(0).observations);
}

TEST(Toy, ClassesDifferInCorrelation) {
  const auto toy = make_toy_cohort(60, 60, 4);
  Eigen::MatrixXd maj(60 * 48, 2), min(60 * 48, 2);
  const auto dbp = *toy.schema().index_of("DiastolicBP");
  Eigen::Index i = 0, j = 0;
  for (const auto& p : toy.patients()) {
    for (Eigen::Index t = 0; t < 48; ++t) {
      auto& m = p.label.is_minority() ? min : maj;
      auto& k = p.label.is_minority() ? j : i;
      m(k, 0) = p.observations(t, 0);
      m(k, 1) = p.observations(t, static_cast<Eigen::Index>(dbp));
      ++k;
    }
  }
  const double tau_maj = metrics::kendall_matrix(maj)(0, 1), tau_min = metrics::kendall_matrix(min)(0, 1);
  EXPECT_GT(tau_maj, 0.0);
  EXPECT_GT(tau_min, 0.0);
  EXPECT_NE(tau_maj, tau_min);
}
