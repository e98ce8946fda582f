#include "seqaug/smote.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"

namespace seqaug {

std::vector<FlatSample> flatten(const EncodedBatch& batch) {
  std::vector<FlatSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& seq = batch.sequences[i];
    FlatSample s;
    s.vector.resize(seq.size());
    // Row-major copy so each timestep's channels are contiguous.
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        s.vector.data(), seq.rows(), seq.cols()) = seq;
    s.origin_id = i < batch.patient_ids.size() ? batch.patient_ids[i] : std::string();
    out.push_back(std::move(s));
  }
  return out;
}

EncodedBatch unflatten(const std::vector<FlatSample>& samples, Eigen::Index series_length,
                       std::shared_ptr<const Encoding> encoding, ConditionLabel label) {
  EncodedBatch batch;
  const Eigen::Index width = encoding ? encoding->width() : 0;
  for (const auto& s : samples) {
    const Eigen::Index w = width ? width : s.vector.size() / series_length;
    if (s.vector.size() != series_length * w)
      throw InvalidArgument("flat sample length does not match series_length x width");
    batch.sequences.push_back(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            s.vector.data(), series_length, w));
    batch.labels.push_back(label);
    batch.patient_ids.push_back(s.origin_id);
  }
  batch.encoding = std::move(encoding);
  return batch;
}

std::vector<std::size_t> knn_indices(const std::vector<FlatSample>& pool, std::size_t query,
                                     std::size_t k) {
  if (query >= pool.size()) throw InvalidArgument("query index outside pool");
  if (pool.size() == 0 || k > pool.size() - 1)
    throw PoolTooSmall(fmt::format("k = {} needs at least {} pool members, have {}", k, k + 1,
                                   pool.size()));
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(pool.size() - 1);
  const auto& x = pool[query].vector;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (j == query) continue;
    dist.emplace_back((pool[j].vector - x).squaredNorm(), j);
  }
  std::stable_sort(dist.begin(), dist.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

std::vector<FlatSample> knn(const std::vector<FlatSample>& pool, std::size_t query, std::size_t k) {
  std::vector<FlatSample> out;
  for (auto j : knn_indices(pool, query, k)) out.push_back(pool[j]);
  return out;
}

SmoteResult smote_generate(const std::vector<FlatSample>& minority, std::size_t k,
                           std::size_t count, std::uint64_t seed) {
  if (minority.size() < k + 1)
    throw PoolTooSmall(
        fmt::format("SMOTE with k = {} needs {} minority samples, have {}", k, k + 1,
                    minority.size()));
  SmoteResult result;
  if (count == 0) return result;
  if (k == 0) throw InvalidArgument("SMOTE needs k >= 1");

  std::vector<std::vector<std::size_t>> neighbours(minority.size());
  for (std::size_t i = 0; i < minority.size(); ++i) neighbours[i] = knn_indices(minority, i, k);

  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick_base(0, minority.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_nn(0, k - 1);
  std::uniform_real_distribution<double> pick_u(0.0, 1.0);
  result.samples.reserve(count);
  result.draws.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    SmoteDraw d;
    d.base = pick_base(rng);
    d.neighbor = neighbours[d.base][pick_nn(rng)];
    d.u = pick_u(rng);
    const auto& x = minority[d.base].vector;
    const auto& y = minority[d.neighbor].vector;
    FlatSample s;
    s.vector = x + d.u * (y - x);
    s.origin_id = minority[d.base].origin_id;
    result.samples.push_back(std::move(s));
    result.draws.push_back(d);
  }
  return result;
}

}  // namespace seqaug
