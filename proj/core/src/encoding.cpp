#include "seqaug/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/QR>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"

namespace seqaug {

namespace {

// Orthogonally initialised K x d table, rescaled to unit max-abs entry.
// The best of a few candidates by minimum row separation is kept.
Eigen::MatrixXd make_embedding_table(Eigen::Index k, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd best;
  double best_sep = -1.0;
  for (int attempt = 0; attempt < 16; ++attempt) {
    const Eigen::Index rows = std::max(k, d);
    const Eigen::Index cols = std::min(k, d);
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    // Sign fix so the draw is a function of the random matrix only.
    const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < cols; ++j)
      if (r(j, j) < 0) q.col(j) *= -1.0;
    Eigen::MatrixXd table = (k >= d) ? q : Eigen::MatrixXd(q.transpose());
    table /= table.cwiseAbs().maxCoeff();
    double sep = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a + 1; b < k; ++b)
        sep = std::min(sep, (table.row(a) - table.row(b)).norm());
    if (sep > best_sep) {
      best_sep = sep;
      best = std::move(table);
    }
  }
  return best;
}

}  // namespace

Encoding Encoding::fit(const Cohort& train, int embed_dim, std::uint64_t seed) {
  if (embed_dim < 1) throw InvalidArgument("embed_dim must be >= 1");
  Encoding enc;
  enc.schema_ = train.schema();
  enc.embed_dim_ = embed_dim;
  const auto& schema = enc.schema_;
  Rng rng = make_rng(seed, "embedding");
  enc.center_.assign(schema.size(), 0.0);
  enc.half_range_.assign(schema.size(), 1.0);
  enc.degenerate_.assign(schema.size(), false);
  enc.tables_.assign(schema.size(), Eigen::MatrixXd());
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto& spec = schema.variable(v);
    if (spec.is_discrete()) {
      enc.tables_[v] =
          make_embedding_table(static_cast<Eigen::Index>(spec.categories.size()), embed_dim, rng);
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : train.patients()) {
      const auto col = p.observations.col(static_cast<Eigen::Index>(v));
      lo = std::min(lo, col.minCoeff());
      hi = std::max(hi, col.maxCoeff());
    }
    if (train.empty()) lo = hi = 0.0;
    if (hi > lo) {
      enc.center_[v] = 0.5 * (lo + hi);
      enc.half_range_[v] = 0.5 * (hi - lo);
    } else {
      enc.center_[v] = lo;
      enc.half_range_[v] = 1.0;
      enc.degenerate_[v] = true;
      spdlog::warn("DegenerateVariable: '{}' is constant ({}) over the fitting set; encoded as 0",
                   spec.name, lo);
    }
  }
  enc.finalize();
  return enc;
}

void Encoding::finalize() {
  slots_.clear();
  Eigen::Index offset = 0;
  for (std::size_t v = 0; v < schema_.size(); ++v) {
    const Eigen::Index w = schema_.variable(v).is_discrete() ? embed_dim_ : 1;
    slots_.push_back(ChannelSlot{offset, w});
    offset += w;
  }
  width_ = offset;

  const auto n_vars = static_cast<Eigen::Index>(schema_.size());
  projection_ = Eigen::MatrixXd::Zero(width_, n_vars);
  projection_offset_ = Eigen::RowVectorXd::Zero(n_vars);
  for (std::size_t v = 0; v < schema_.size(); ++v) {
    const auto& spec = schema_.variable(v);
    const auto s = slots_[v];
    const auto col = static_cast<Eigen::Index>(v);
    if (!spec.is_discrete()) {
      projection_(s.offset, col) = 1.0;
      continue;
    }
    const auto& table = tables_[v];
    Eigen::MatrixXd design(table.rows(), table.cols() + 1);
    design << table, Eigen::VectorXd::Ones(table.rows());
    Eigen::VectorXd target(table.rows());
    for (Eigen::Index k = 0; k < table.rows(); ++k)
      target(k) = spec.category_values[static_cast<std::size_t>(k)];
    const Eigen::VectorXd coef = design.completeOrthogonalDecomposition().solve(target);
    projection_.block(s.offset, col, s.width, 1) = coef.head(s.width);
    projection_offset_(col) = coef(s.width);
  }
}

double Encoding::encode_numeric(std::size_t v, double value) const {
  if (degenerate_[v]) return 0.0;
  return (value - center_[v]) / half_range_[v];
}

double Encoding::decode_numeric(std::size_t v, double encoded) const {
  const double e = std::clamp(encoded, -1.0, 1.0);
  double value = center_[v] + e * half_range_[v];
  if (degenerate_[v]) value = center_[v];
  if (const auto& r = schema_.variable(v).numeric_range) value = std::clamp(value, r->min, r->max);
  return value;
}

std::size_t Encoding::snap(std::size_t v, const Eigen::Ref<const Eigen::RowVectorXd>& encoded) const {
  const auto& table = tables_[v];
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < table.rows(); ++k) {
    const double d = (table.row(k) - encoded).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(k);
    }
  }
  return best;
}

Eigen::MatrixXd Encoding::encode_series(const Eigen::MatrixXd& observations) const {
  Eigen::MatrixXd out(observations.rows(), width_);
  for (std::size_t v = 0; v < schema_.size(); ++v) {
    const auto s = slots_[v];
    const auto col = static_cast<Eigen::Index>(v);
    if (schema_.variable(v).is_discrete()) {
      for (Eigen::Index t = 0; t < observations.rows(); ++t)
        out.block(t, s.offset, 1, s.width) =
            tables_[v].row(static_cast<Eigen::Index>(observations(t, col)));
    } else {
      for (Eigen::Index t = 0; t < observations.rows(); ++t)
        out(t, s.offset) = encode_numeric(v, observations(t, col));
    }
  }
  return out;
}

Eigen::MatrixXd Encoding::decode_series(const Eigen::MatrixXd& encoded) const {
  if (encoded.cols() != width_)
    throw SchemaMismatch(
        fmt::format("encoded width {} does not match encoding width {}", encoded.cols(), width_));
  Eigen::MatrixXd out(encoded.rows(), static_cast<Eigen::Index>(schema_.size()));
  for (std::size_t v = 0; v < schema_.size(); ++v) {
    const auto s = slots_[v];
    const auto col = static_cast<Eigen::Index>(v);
    for (Eigen::Index t = 0; t < encoded.rows(); ++t) {
      if (schema_.variable(v).is_discrete())
        out(t, col) = static_cast<double>(snap(v, encoded.block(t, s.offset, 1, s.width)));
      else
        out(t, col) = decode_numeric(v, encoded(t, s.offset));
    }
  }
  return out;
}

std::map<std::string, Eigen::MatrixXd> Encoding::tensors() const {
  std::map<std::string, Eigen::MatrixXd> out;
  const auto n = static_cast<Eigen::Index>(schema_.size());
  Eigen::MatrixXd scaling(3, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    scaling(0, v) = center_[static_cast<std::size_t>(v)];
    scaling(1, v) = half_range_[static_cast<std::size_t>(v)];
    scaling(2, v) = degenerate_[static_cast<std::size_t>(v)] ? 1.0 : 0.0;
  }
  out["encoding.scaling"] = scaling;
  out["encoding.embed_dim"] = Eigen::MatrixXd::Constant(1, 1, embed_dim_);
  for (std::size_t v = 0; v < schema_.size(); ++v)
    if (schema_.variable(v).is_discrete())
      out["encoding.table." + schema_.variable(v).name] = tables_[v];
  return out;
}

Encoding Encoding::restore(const CohortSchema& schema,
                           const std::map<std::string, Eigen::MatrixXd>& tensors) {
  auto get = [&](const std::string& key) -> const Eigen::MatrixXd& {
    auto it = tensors.find(key);
    if (it == tensors.end()) throw SchemaMismatch(fmt::format("checkpoint lacks '{}'", key));
    return it->second;
  };
  Encoding enc;
  enc.schema_ = schema;
  enc.embed_dim_ = static_cast<int>(get("encoding.embed_dim")(0, 0));
  const auto& scaling = get("encoding.scaling");
  if (scaling.cols() != static_cast<Eigen::Index>(schema.size()))
    throw SchemaMismatch("checkpoint scaling does not match schema");
  enc.center_.resize(schema.size());
  enc.half_range_.resize(schema.size());
  enc.degenerate_.resize(schema.size());
  enc.tables_.assign(schema.size(), Eigen::MatrixXd());
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto col = static_cast<Eigen::Index>(v);
    enc.center_[v] = scaling(0, col);
    enc.half_range_[v] = scaling(1, col);
    enc.degenerate_[v] = scaling(2, col) != 0.0;
    if (schema.variable(v).is_discrete()) {
      enc.tables_[v] = get("encoding.table." + schema.variable(v).name);
      if (enc.tables_[v].rows() != static_cast<Eigen::Index>(schema.variable(v).categories.size()) ||
          enc.tables_[v].cols() != enc.embed_dim_)
        throw SchemaMismatch(
            fmt::format("embedding table for '{}' has the wrong shape", schema.variable(v).name));
    }
  }
  enc.finalize();
  return enc;
}

EncodedBatch encode(const Cohort& cohort, std::shared_ptr<const Encoding> encoding) {
  if (encoding->schema().hash() != cohort.schema().hash())
    throw SchemaMismatch("cohort schema differs from the encoding's schema");
  EncodedBatch batch;
  batch.encoding = std::move(encoding);
  batch.sequences.reserve(cohort.size());
  for (const auto& p : cohort.patients()) {
    batch.sequences.push_back(batch.encoding->encode_series(p.observations));
    batch.labels.push_back(p.label);
    batch.patient_ids.push_back(p.patient_id);
  }
  return batch;
}

EncodedBatch encode(const Cohort& cohort, int embed_dim, std::uint64_t seed) {
  return encode(cohort, std::make_shared<const Encoding>(Encoding::fit(cohort, embed_dim, seed)));
}

Cohort decode(const EncodedBatch& batch, const CohortSchema& schema) {
  if (!batch.encoding) throw InvalidArgument("batch carries no encoding");
  if (batch.encoding->schema().hash() != schema.hash())
    throw SchemaMismatch("decode schema differs from the batch's encoding");
  std::vector<PatientSeries> patients;
  patients.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::string id = i < batch.patient_ids.size() ? batch.patient_ids[i] : fmt::format("seq-{}", i);
    ConditionLabel label = i < batch.labels.size() ? batch.labels[i] : ConditionLabel::minority();
    patients.push_back(
        PatientSeries{std::move(id), label, batch.encoding->decode_series(batch.sequences[i])});
  }
  return Cohort(schema, std::move(patients));
}

}  // namespace seqaug
