#include "seqaug/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "seqaug/errors.hpp"

namespace seqaug::nn {

Var ParameterStore::add(const std::string& name, Matrix init) {
  for (const auto& [n, v] : items_)
    if (n == name) throw InvalidArgument(fmt::format("duplicate parameter '{}'", name));
  Var v(std::move(init), /*requires_grad=*/true);
  items_.emplace_back(name, v);
  return v;
}

Var ParameterStore::uniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                            double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return add(name, std::move(m));
}

std::vector<Var> ParameterStore::vars() const {
  std::vector<Var> out;
  out.reserve(items_.size());
  for (const auto& [n, v] : items_) out.push_back(v);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, v] : items_) n += static_cast<std::size_t>(v.value().size());
  return n;
}

TensorMap ParameterStore::tensors(const std::string& prefix) const {
  TensorMap out;
  for (const auto& [n, v] : items_) out[prefix + n] = v.value();
  return out;
}

void ParameterStore::load(const TensorMap& tensors, const std::string& prefix) {
  for (auto& [n, v] : items_) {
    auto it = tensors.find(prefix + n);
    if (it == tensors.end())
      throw SchemaMismatch(fmt::format("missing parameter '{}{}'", prefix, n));
    if (it->second.rows() != v.rows() || it->second.cols() != v.cols())
      throw SchemaMismatch(fmt::format("parameter '{}{}' has shape {}x{}, expected {}x{}", prefix,
                                       n, it->second.rows(), it->second.cols(), v.rows(),
                                       v.cols()));
    v.mutable_value() = it->second;
  }
}

Linear Linear::create(ParameterStore& store, const std::string& name, Eigen::Index in,
                      Eigen::Index out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Linear l;
  l.weight = store.uniform(name + ".weight", in, out, bound, rng);
  l.bias = store.uniform(name + ".bias", 1, out, bound, rng);
  return l;
}

LstmDirection LstmDirection::create(ParameterStore& store, const std::string& name,
                                    Eigen::Index in, Eigen::Index hidden, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  LstmDirection d;
  d.hidden = hidden;
  d.w_input = store.uniform(name + ".w_input", in, 4 * hidden, bound, rng);
  d.w_hidden = store.uniform(name + ".w_hidden", hidden, 4 * hidden, bound, rng);
  d.bias = store.uniform(name + ".bias", 1, 4 * hidden, bound, rng);
  return d;
}

std::vector<Var> LstmDirection::run(const std::vector<Var>& xs, bool reverse) const {
  using namespace ad;
  const auto steps = static_cast<Eigen::Index>(xs.size());
  if (steps == 0) return {};
  const Eigen::Index H = hidden;

  std::vector<Var> hs(xs.size());
  Var h, c;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Eigen::Index t = reverse ? steps - 1 - k : k;
    Var gates = add_row(matmul(xs[static_cast<std::size_t>(t)], w_input), bias);
    if (k > 0) gates = add(gates, matmul(h, w_hidden));
    const Var i = sigmoid(slice_cols(gates, 0, H));
    const Var g = tanh(slice_cols(gates, 2 * H, H));
    const Var o = sigmoid(slice_cols(gates, 3 * H, H));
    if (k == 0) {
      c = mul(i, g);
    } else {
      const Var f = sigmoid(slice_cols(gates, H, H));
      c = add(mul(f, c), mul(i, g));
    }
    h = mul(o, ad::tanh(c));
    hs[static_cast<std::size_t>(t)] = h;
  }
  return hs;
}

BiLstmStack BiLstmStack::create(ParameterStore& store, const std::string& name, Eigen::Index in,
                                Eigen::Index hidden, int layers, Rng& rng) {
  if (layers < 1) throw InvalidArgument("a recurrent stack needs at least one layer");
  BiLstmStack s;
  Eigen::Index width = in;
  for (int l = 0; l < layers; ++l) {
    const auto prefix = fmt::format("{}.layer{}", name, l);
    auto fwd = LstmDirection::create(store, prefix + ".fwd", width, hidden, rng);
    auto bwd = LstmDirection::create(store, prefix + ".bwd", width, hidden, rng);
    s.layers_.emplace_back(std::move(fwd), std::move(bwd));
    width = 2 * hidden;
  }
  return s;
}

std::vector<Var> BiLstmStack::operator()(const std::vector<Var>& xs) const {
  std::vector<Var> current = xs;
  for (const auto& [fwd, bwd] : layers_) {
    const auto f = fwd.run(current, false);
    const auto b = bwd.run(current, true);
    for (std::size_t t = 0; t < current.size(); ++t) current[t] = ad::concat_cols({f[t], b[t]});
  }
  return current;
}

Adam::Adam(std::vector<Var> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step(const std::vector<Var>& grads) {
  if (grads.size() != params_.size()) throw InvalidArgument("Adam: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Matrix& g = grads[i].value();
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    params_[i].mutable_value().array() -=
        opts_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + opts_.eps);
  }
}

namespace {
constexpr char kMagic[8] = {'S', 'E', 'Q', 'A', 'U', 'G', 'T', '1'};

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated tensor file");
  return value;
}
}  // namespace

void save_tensors(const std::filesystem::path& path, const TensorMap& tensors) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, m] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  }
  if (!out) throw IoError(fmt::format("short write to '{}'", path.string()));
}

TensorMap load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(fmt::format("cannot open tensor file '{}'", path.string()));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError(fmt::format("'{}' is not a tensor file", path.string()));
  TensorMap out;
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0) throw IoError("corrupt tensor shape");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw IoError("truncated tensor file");
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

}  // namespace seqaug::nn
