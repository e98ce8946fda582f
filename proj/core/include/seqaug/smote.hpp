#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "seqaug/encoding.hpp"

namespace seqaug {

/// A whole encoded sequence laid out timestep-major:
/// [t0 channels..., t1 channels..., ...].
struct FlatSample {
  Eigen::VectorXd vector;
  std::string origin_id;
};

std::vector<FlatSample> flatten(const EncodedBatch& batch);
/// Inverse of flatten for `series_length` x `width` sequences.
EncodedBatch unflatten(const std::vector<FlatSample>& samples, Eigen::Index series_length,
                       std::shared_ptr<const Encoding> encoding, ConditionLabel label);

/// Indices of the k pool members nearest (Euclidean) to pool[query],
/// excluding the query index itself. Ties resolve by pool order.
std::vector<std::size_t> knn_indices(const std::vector<FlatSample>& pool, std::size_t query,
                                     std::size_t k);
std::vector<FlatSample> knn(const std::vector<FlatSample>& pool, std::size_t query, std::size_t k);

struct SmoteDraw {
  std::size_t base = 0;      // index into the minority set
  std::size_t neighbor = 0;  // index into the minority set
  double u = 0.0;            // interpolation weight in [0, 1)
};

struct SmoteResult {
  std::vector<FlatSample> samples;
  std::vector<SmoteDraw> draws;
};

/// Draws `count` samples x + u (x_nn - x) with x uniform over `minority`,
/// x_nn uniform over its k nearest neighbours and u ~ U[0, 1).
/// Deterministic given `seed`.
SmoteResult smote_generate(const std::vector<FlatSample>& minority, std::size_t k,
                           std::size_t count, std::uint64_t seed);

}  // namespace seqaug
