#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seqaug/autodiff.hpp"
#include "seqaug/rng.hpp"

namespace seqaug::nn {

using ad::Matrix;
using ad::Var;
using TensorMap = std::map<std::string, Matrix>;

/// Ordered collection of named trainable leaves.
class ParameterStore {
 public:
  Var add(const std::string& name, Matrix init);
  Var uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);

  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::vector<Var> vars() const;
  std::size_t scalar_count() const;

  TensorMap tensors(const std::string& prefix = "") const;
  /// Copies values in by name; every parameter must be present.
  void load(const TensorMap& tensors, const std::string& prefix = "");

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

struct Linear {
  Var weight;  // in x out
  Var bias;    // 1 x out

  static Linear create(ParameterStore& store, const std::string& name, Eigen::Index in,
                       Eigen::Index out, Rng& rng);
  Var operator()(const Var& x) const { return ad::add_row(ad::matmul(x, weight), bias); }
};

/// One direction of an LSTM; gates ordered input, forget, cell, output.
struct LstmDirection {
  Var w_input;   // in x 4H
  Var w_hidden;  // H x 4H
  Var bias;      // 1 x 4H
  Eigen::Index hidden = 0;

  static LstmDirection create(ParameterStore& store, const std::string& name, Eigen::Index in,
                              Eigen::Index hidden, Rng& rng);
  /// Hidden states for each timestep, returned in time order.
  std::vector<Var> run(const std::vector<Var>& xs, bool reverse) const;
};

/// Stack of bidirectional layers; each emits [forward h, backward h].
class BiLstmStack {
 public:
  BiLstmStack() = default;
  static BiLstmStack create(ParameterStore& store, const std::string& name, Eigen::Index in,
                            Eigen::Index hidden, int layers, Rng& rng);

  std::vector<Var> operator()(const std::vector<Var>& xs) const;
  int layers() const { return static_cast<int>(layers_.size()); }
  Eigen::Index output_size() const { return layers_.empty() ? 0 : 2 * layers_[0].first.hidden; }

 private:
  std::vector<std::pair<LstmDirection, LstmDirection>> layers_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Var> params, AdamOptions opts);
  void step(const std::vector<Var>& grads);
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  long steps() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<Matrix> m_, v_;
  AdamOptions opts_;
  long t_ = 0;
};

/// Binary tensor file: "SEQAUGT1", u64 count, then per tensor
/// u32 name length, name, i64 rows, i64 cols, column-major float64 data.
void save_tensors(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_tensors(const std::filesystem::path& path);

}  // namespace seqaug::nn
