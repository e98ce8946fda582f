#include <gtest/gtest.h>

#include "seqaug/config.hpp"
#include "seqaug/errors.hpp"

using namespace seqaug;

namespace {

KeyValues base() { return {{"seed", "7"}, {"data.path", "cohort.csv"}}; }

KeyValues with(KeyValues kv, const std::string& key, const std::string& value) {
  kv.emplace_back(key, value);
  return kv;
}

}  // namespace

TEST(Config, HashIgnoresOutputDirectory) {
  const auto a = parse_config(base(), "/tmp");
  const auto b = parse_config(with(base(), "out.dir", "elsewhere"), "/tmp");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_NE(parse_config(with(base(), "train.lr", "0.001"), "/tmp").hash(), a.hash());
  EXPECT_NE(parse_config(with(base(), "method", "smote"), "/tmp").hash(), a.hash());
  EXPECT_NE(parse_config(with(base(), "seed", "8"), "/tmp").hash(), a.hash());
}

TEST(Config, LaterEntriesWin) {
  const auto c = parse_config(with(with(base(), "smote.k", "3"), "smote.k", "9"), "/tmp");
  EXPECT_EQ(c.smote_k, 9);
  EXPECT_EQ(parse_config(with(base(), "smote.k", "9"), "/tmp").hash(), c.hash());
}

TEST(Config, DerivedFieldsCannotBeSet) {
  EXPECT_THROW(parse_config(with(base(), "train.seed", "1"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "train.conditional", "false"), "/tmp"), ConfigInvalid);
  const auto c = parse_config(with(base(), "method", "wgangp_star"), "/tmp");
  EXPECT_FALSE(c.train.conditional);
  EXPECT_EQ(c.train.layers(), 1);
  EXPECT_TRUE(parse_config(base(), "/tmp").train.conditional);
  EXPECT_NE(c.train.seed, c.regressor.seed);
}

TEST(Config, RejectsInvalidEntries) {
  EXPECT_THROW(parse_config({{"data.path", "x"}}, "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config({{"seed", "1"}}, "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "colour", "red"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "method", "gan"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "seed", "-1"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "smote.k", "abc"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "train.batch_size", "1"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "metrics.kl_epsilon", "0"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(parse_config(with(base(), "data.schema", "/nonexistent.schema"), "/tmp"), ConfigInvalid);
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigInvalid);
}

TEST(Config, RelativePathsResolveAgainstTheConfigDirectory) {
  const auto c = parse_config(base(), "/data/runs");
  EXPECT_EQ(c.resolve(c.data_path), std::filesystem::path("/data/runs/cohort.csv"));
  EXPECT_EQ(c.resolve("/abs/x.csv"), std::filesystem::path("/abs/x.csv"));
  EXPECT_EQ(c.schema().size(), 20u);
}

TEST(Config, GenerateCountDefaultsToDeficit) {
  EXPECT_FALSE(parse_config(base(), "/tmp").generate_count);
  EXPECT_EQ(*parse_config(with(base(), "generate.count", "15"), "/tmp").generate_count, 15u);
  EXPECT_FALSE(parse_config(with(base(), "generate.count", "deficit"), "/tmp").generate_count);
}
