#include <cmath>

#include <gtest/gtest.h>

#include "seqaug/downstream.hpp"
#include "seqaug/errors.hpp"
#include "seqaug/toy.hpp"

using namespace seqaug;
using namespace seqaug::downstream;

TEST(Windows, CountsAndContents) {
  EXPECT_EQ(window_count(48, 20, 1), 28u);
  EXPECT_EQ(window_count(48, 20, 3), 26u);
  EXPECT_EQ(window_count(21, 20, 1), 1u);
  EXPECT_THROW(window_count(20, 20, 1), WindowTooLong);

  const auto toy = make_toy_cohort(1, 1, 2);
  const auto enc = Encoding::fit(toy, 4, 0);
  const auto w = make_windows(toy, enc);
  ASSERT_EQ(w.size(), 56u);
  const auto& s = w[30];
  EXPECT_EQ(s.source_patient, toy.patient(1).patient_id);
  EXPECT_EQ(s.start, 2u);
  const Eigen::MatrixXd series = enc.encode_series(toy.patient(1).observations);
  EXPECT_EQ(s.input, series.middleRows(2, 20));
  // MAP is the first target; its raw value is the hour after the window.
  EXPECT_EQ(s.target_raw(0), toy.patient(1).observations(22, 0));
  EXPECT_EQ(s.target(0), series(22, enc.slot(0).offset));
}

TEST(Windows, TargetsSkipBinaryVariables) {
  const auto schema = reference_schema();
  const auto t = target_variables(schema);
  EXPECT_EQ(t.size(), 13u);
  for (auto v : t) EXPECT_NE(schema.variable(v).kind, VariableKind::binary);
}

TEST(RelativeError, Endpoints) {
  const Eigen::MatrixXd truth = (Eigen::MatrixXd(2, 2) << 10, 0, 20, 0).finished();
  EXPECT_EQ(relative_errors(truth, truth), (std::vector<double>{0.0, 0.0}));
  const Eigen::MatrixXd pred = (Eigen::MatrixXd(2, 2) << 11, 1, 18, 0).finished();
  const auto e = relative_errors(pred, truth);
  EXPECT_NEAR(e[0], 100.0 * (1.0 / (10.0 + 1e-6) + 2.0 / (20.0 + 1e-6)) / 2.0, 1e-12);
  // A zero truth divides by the floor alone.
  EXPECT_NEAR(e[1], 100.0 * (1.0 / 1e-6) / 2.0, 1e-3);
  EXPECT_THROW(relative_errors(pred, truth.leftCols(1)), InvalidArgument);
}

TEST(Regressor, TrainingLowersTheLoss) {
  const auto toy = make_toy_cohort(4, 4, 3);
  auto enc = std::make_shared<const Encoding>(Encoding::fit(toy, 4, 0));
  const auto w = make_windows(toy, *enc);
  RegressorConfig cfg;
  cfg.hidden_size = 8;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.lr = 5e-3;
  cfg.seed = 1;
  const auto b = train_regressor(w, enc, cfg);
  ASSERT_EQ(b.epoch_loss.size(), 4u);
  EXPECT_LT(b.epoch_loss.back(), b.initial_loss);
  const auto again = train_regressor(w, enc, cfg);
  EXPECT_EQ(again.epoch_loss, b.epoch_loss);
}

TEST(Regressor, ZeroEpochsStillPredicts) {
  const auto toy = make_toy_cohort(2, 2, 4);
  auto enc = std::make_shared<const Encoding>(Encoding::fit(toy, 4, 0));
  RegressorConfig cfg;
  cfg.hidden_size = 4;
  cfg.epochs = 0;
  const auto b = train_regressor(make_windows(toy, *enc), enc, cfg);
  EXPECT_TRUE(b.epoch_loss.empty());
  const auto errs = evaluate_regressor(b, toy);
  EXPECT_EQ(errs.size(), 13u);
  for (double e : errs) EXPECT_TRUE(std::isfinite(e));
  cfg.epochs = -1;
  EXPECT_THROW(train_regressor(make_windows(toy, *enc), enc, cfg), ConfigInvalid);
  EXPECT_THROW(train_regressor({}, enc, RegressorConfig{}), InvalidArgument);
}

TEST(Leakage, DetectsSharedPatients) {
  const auto a = make_toy_cohort(2, 2, 5);
  const auto split = holdout_split(a, 1, 1);
  EXPECT_NO_THROW(assert_no_leakage(split.test, {&split.train, nullptr}));
  EXPECT_THROW(assert_no_leakage(split.test, {&split.train, &a}), Leakage);
}

TEST(Report, CsvHasOneColumnPerRegime) {
  RegressionReport r;
  r.variables = {"MAP", "GCS"};
  r.add("real", {1.0, 3.0});
  r.add("augmented", {0.5, 2.0});
  EXPECT_EQ(r.medians, (std::vector<double>{2.0, 1.25}));
  EXPECT_EQ(r.to_csv(), "variable,real,augmented\nMAP,1,0.5\nGCS,3,2\nmedian,2,1.25\n");
  EXPECT_THROW(r.add("bad", {1.0}), InvalidArgument);
}
