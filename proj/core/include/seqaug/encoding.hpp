#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqaug/cohort.hpp"
#include "seqaug/schema.hpp"

namespace seqaug {

/// Column range occupied by one variable in an encoded timestep.
struct ChannelSlot {
  Eigen::Index offset = 0;
  Eigen::Index width = 0;
};

/// Fitted model-space transform. Numeric variables are min-max scaled to
/// [-1, 1] with statistics of the fitting cohort; discrete variables map
/// through a fixed embedding table of width `embed_dim`, one row per
/// category. Immutable once fitted.
class Encoding {
 public:
  /// Fits scaling statistics on `train`. A constant numeric variable gets a
  /// unit denominator (and a warning) instead of failing.
  static Encoding fit(const Cohort& train, int embed_dim, std::uint64_t seed);

  const CohortSchema& schema() const { return schema_; }
  int embed_dim() const { return embed_dim_; }
  Eigen::Index width() const { return width_; }
  ChannelSlot slot(std::size_t v) const { return slots_.at(v); }

  double center(std::size_t v) const { return center_.at(v); }
  double half_range(std::size_t v) const { return half_range_.at(v); }
  bool degenerate(std::size_t v) const { return degenerate_.at(v); }
  const Eigen::MatrixXd& embedding_table(std::size_t v) const { return tables_.at(v); }

  double encode_numeric(std::size_t v, double value) const;
  /// Clamps to [-1, 1], inverts the affine map, then clamps to the range.
  double decode_numeric(std::size_t v, double encoded) const;
  /// Index of the nearest embedding row (Euclidean; ties to lower index).
  std::size_t snap(std::size_t v, const Eigen::Ref<const Eigen::RowVectorXd>& encoded) const;

  /// series_length x |V| observations -> series_length x width().
  Eigen::MatrixXd encode_series(const Eigen::MatrixXd& observations) const;
  Eigen::MatrixXd decode_series(const Eigen::MatrixXd& encoded) const;

  /// Affine map from an encoded timestep to one scalar per variable:
  /// `encoded * projection + offset`. Numeric variables pass through; a
  /// discrete variable maps to the least-squares fit of its category values
  /// (exact when the category count is at most embed_dim + 1).
  const Eigen::MatrixXd& scalar_projection() const { return projection_; }
  const Eigen::RowVectorXd& scalar_offset() const { return projection_offset_; }

  /// Named tensors for checkpoints; `restore` is the inverse.
  std::map<std::string, Eigen::MatrixXd> tensors() const;
  static Encoding restore(const CohortSchema& schema,
                          const std::map<std::string, Eigen::MatrixXd>& tensors);

 private:
  void finalize();

  CohortSchema schema_;
  int embed_dim_ = 4;
  Eigen::Index width_ = 0;
  std::vector<ChannelSlot> slots_;
  std::vector<double> center_, half_range_;
  std::vector<bool> degenerate_;
  std::vector<Eigen::MatrixXd> tables_;
  Eigen::MatrixXd projection_;
  Eigen::RowVectorXd projection_offset_;
};

/// Model-space view of a cohort: one series_length x width matrix per
/// sequence plus its label.
struct EncodedBatch {
  std::vector<Eigen::MatrixXd> sequences;
  std::vector<ConditionLabel> labels;
  std::vector<std::string> patient_ids;
  std::shared_ptr<const Encoding> encoding;

  std::size_t size() const { return sequences.size(); }
};

EncodedBatch encode(const Cohort& cohort, std::shared_ptr<const Encoding> encoding);
/// Fits an Encoding on `cohort` itself and encodes it.
EncodedBatch encode(const Cohort& cohort, int embed_dim, std::uint64_t seed = 0);
/// Inverse of encode. Total: numerics are clamped, embeddings snapped.
Cohort decode(const EncodedBatch& batch, const CohortSchema& schema);

}  // namespace seqaug
