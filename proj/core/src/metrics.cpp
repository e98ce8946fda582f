#include "seqaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/rng.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug::metrics {

namespace {

std::vector<double> smooth(const std::vector<double>& p, double epsilon) {
  std::vector<double> out(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] = p[i] + epsilon;
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

double kl_smoothed(const std::vector<double>& p, const std::vector<double>& q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] * std::log(p[i] / q[i]);
  return total;
}

std::vector<double> normalized_counts(const std::vector<std::size_t>& counts, std::size_t n) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  return out;
}

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                        Eigen::Index j) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    d += diff * diff;
  }
  return d;
}

double mean_kernel(const Eigen::MatrixXd& x, const Eigen::VectorXd& wx, const Eigen::MatrixXd& y,
                   const Eigen::VectorXd& wy, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < y.rows(); ++j)
      row += wy(j) * std::exp(-squared_distance(x, i, y, j) * inv);
    total += wx(i) * row;
  }
  return total / (wx.sum() * wy.sum());
}

// Collapses identical rows into (unique rows, multiplicities), sorted
// lexicographically so the result is independent of input order.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> collapse(const Eigen::MatrixXd& x) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) < x(b, c)) return true;
      if (x(a, c) > x(b, c)) return false;
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<Eigen::Index> uniq;
  std::vector<double> weight;
  for (auto idx : order) {
    if (!uniq.empty() && !less(uniq.back(), idx) && !less(idx, uniq.back())) {
      weight.back() += 1.0;
    } else {
      uniq.push_back(idx);
      weight.push_back(1.0);
    }
  }
  Eigen::MatrixXd points(static_cast<Eigen::Index>(uniq.size()), x.cols());
  Eigen::VectorXd w(static_cast<Eigen::Index>(uniq.size()));
  for (std::size_t k = 0; k < uniq.size(); ++k) {
    points.row(static_cast<Eigen::Index>(k)) = x.row(uniq[k]);
    w(static_cast<Eigen::Index>(k)) = weight[k];
  }
  return {points, w};
}

Eigen::MatrixXd subsample(const Eigen::MatrixXd& x, std::size_t max_points, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (n <= max_points) return x;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < max_points; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(max_points), x.cols());
  for (std::size_t i = 0; i < max_points; ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Counts inversions of v[lo, hi) while merge-sorting it.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi), v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

template <typename Eq>
std::int64_t tied_pairs(const std::vector<std::size_t>& order, Eq equal) {
  std::int64_t total = 0, run = 1;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    if (k < order.size() && equal(order[k - 1], order[k])) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

Eigen::MatrixXd raw_pooled(const Cohort& cohort) {
  const auto vars = static_cast<Eigen::Index>(cohort.schema().size());
  const auto steps = static_cast<Eigen::Index>(cohort.schema().series_length());
  Eigen::MatrixXd out(steps * static_cast<Eigen::Index>(cohort.size()), vars);
  Eigen::Index r = 0;
  for (const auto& p : cohort.patients()) {
    out.middleRows(r, steps) = p.observations;
    r += steps;
  }
  return out;
}

}  // namespace

std::pair<Histogram, Histogram> shared_histograms(const std::vector<double>& real,
                                                  const std::vector<double>& syn,
                                                  const VariableSpec& spec, int bins,
                                                  double epsilon) {
  if (real.empty() || syn.empty()) throw InvalidArgument("histogram of an empty column");
  if (!(epsilon > 0.0)) throw InvalidArgument("histogram smoothing epsilon must be > 0");
  Histogram hr, hs;
  hr.epsilon = hs.epsilon = epsilon;
  std::vector<std::size_t> cr, cs;
  if (spec.is_discrete()) {
    const auto k = spec.categories.size();
    cr.assign(k, 0);
    cs.assign(k, 0);
    auto bin_of = [&](double x) {
      const auto idx = static_cast<long long>(x);
      if (idx < 0 || static_cast<std::size_t>(idx) >= k || static_cast<double>(idx) != x)
        throw DomainViolation(fmt::format("{}: {} is not a category index", spec.name, x));
      return static_cast<std::size_t>(idx);
    };
    for (double x : real) ++cr[bin_of(x)];
    for (double x : syn) ++cs[bin_of(x)];
  } else {
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : real) lo = std::min(lo, x), hi = std::max(hi, x);
    for (double x : syn) lo = std::min(lo, x), hi = std::max(hi, x);
    const int nb = hi > lo ? bins : 1;
    const double width = hi > lo ? (hi - lo) / nb : 1.0;
    hr.edges.resize(static_cast<std::size_t>(nb) + 1);
    for (int b = 0; b <= nb; ++b) hr.edges[static_cast<std::size_t>(b)] = lo + width * b;
    hr.edges.back() = hi > lo ? hi : lo + 1.0;
    hs.edges = hr.edges;
    cr.assign(static_cast<std::size_t>(nb), 0);
    cs.assign(static_cast<std::size_t>(nb), 0);
    auto bin_of = [&](double x) {
      if (!(hi > lo)) return std::size_t{0};
      const auto b = static_cast<long long>(std::floor((x - lo) / width));
      return static_cast<std::size_t>(std::clamp<long long>(b, 0, nb - 1));
    };
    for (double x : real) ++cr[bin_of(x)];
    for (double x : syn) ++cs[bin_of(x)];
  }
  hr.probabilities = smooth(normalized_counts(cr, real.size()), epsilon);
  hs.probabilities = smooth(normalized_counts(cs, syn.size()), epsilon);
  return {hr, hs};
}

double kl_from_probabilities(const std::vector<double>& p, const std::vector<double>& q,
                             double epsilon) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("KL: supports differ");
  if (!(epsilon > 0.0)) throw InvalidArgument("KL: epsilon must be > 0");
  return kl_smoothed(smooth(p, epsilon), smooth(q, epsilon));
}

double kl_divergence(const std::vector<double>& real, const std::vector<double>& syn,
                     const VariableSpec& spec, int bins, double epsilon) {
  const auto [hr, hs] = shared_histograms(real, syn, spec, bins, epsilon);
  return kl_smoothed(hr.probabilities, hs.probabilities);
}

double mmd_rbf_weighted(const Eigen::MatrixXd& x, const Eigen::VectorXd& wx,
                        const Eigen::MatrixXd& y, const Eigen::VectorXd& wy, double sigma) {
  if (x.rows() == 0 || y.rows() == 0) throw InvalidArgument("MMD of an empty sample");
  if (x.cols() != y.cols()) throw InvalidArgument("MMD: samples differ in dimension");
  if (!(sigma > 0.0)) throw InvalidArgument("MMD: sigma must be > 0");
  if (wx.size() != x.rows() || wy.size() != y.rows())
    throw InvalidArgument("MMD: one weight per point is required");
  const double kxx = mean_kernel(x, wx, x, wx, sigma);
  const double kyy = mean_kernel(y, wy, y, wy, sigma);
  const double kxy = mean_kernel(x, wx, y, wy, sigma);
  return std::max(0.0, (kxx + kyy) - 2.0 * kxy);
}

double mmd_rbf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma) {
  return mmd_rbf_weighted(x, Eigen::VectorXd::Ones(x.rows()), y, Eigen::VectorXd::Ones(y.rows()),
                          sigma);
}

double median_pairwise_distance(const Eigen::MatrixXd& x) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) d.push_back(std::sqrt(squared_distance(x, i, x, j)));
  if (d.empty()) throw InvalidArgument("median distance needs at least two points");
  return median(std::move(d));
}

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("kendall: columns differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("kendall: needs at least two observations");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx = tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::int64_t txy = tied_pairs(
      order, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });

  std::vector<double> ys(n), buf(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  const std::int64_t ty =
      tied_pairs(identity, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const double denom = std::sqrt(static_cast<double>(n0 - tx)) * std::sqrt(static_cast<double>(n0 - ty));
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const std::int64_t num = n0 - tx - ty + txy - 2 * swaps;
  return static_cast<double>(num) / denom;
}

Eigen::MatrixXd kendall_matrix(const Eigen::MatrixXd& data) {
  const auto v = data.cols();
  if (data.rows() < 2) throw InvalidArgument("kendall_matrix: needs at least two observations");
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(v));
  std::vector<bool> varies(static_cast<std::size_t>(v));
  for (Eigen::Index c = 0; c < v; ++c) {
    auto& col = cols[static_cast<std::size_t>(c)];
    col.assign(data.col(c).data(), data.col(c).data() + data.rows());
    varies[static_cast<std::size_t>(c)] =
        std::any_of(col.begin(), col.end(), [&](double a) { return a != col.front(); });
  }
  Eigen::MatrixXd out(v, v);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < v; ++i) {
    out(i, i) = varies[static_cast<std::size_t>(i)] ? 1.0 : nan;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double tau = kendall_tau_b(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      out(i, j) = out(j, i) = tau;
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("percentile of nothing");
  if (!(p >= 0.0 && p <= 100.0)) throw InvalidArgument("percentile must lie in [0, 100]");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AuthenticityResult authenticity_audit(const Eigen::MatrixXd& syn, const Eigen::MatrixXd& real) {
  if (syn.rows() == 0 || real.rows() == 0) throw InvalidArgument("authenticity audit of an empty set");
  if (syn.cols() != real.cols()) throw InvalidArgument("authenticity audit: dimensions differ");
  AuthenticityResult out;
  out.nearest.resize(static_cast<std::size_t>(syn.rows()));
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < syn.rows(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < real.rows(); ++j) {
      const double d = squared_distance(syn, i, real, j);
      if (d < nearest) nearest = d;
      if (d < best) {
        best = d;
        out.nearest_syn = static_cast<std::size_t>(i);
        out.nearest_real = static_cast<std::size_t>(j);
      }
    }
    out.nearest[static_cast<std::size_t>(i)] = std::sqrt(nearest);
  }
  out.min_distance = std::sqrt(best);
  std::vector<double> sorted = out.nearest;
  std::sort(sorted.begin(), sorted.end());
  for (double p : {1.0, 5.0, 50.0}) out.percentiles.emplace_back(p, percentile(sorted, p));
  return out;
}

Eigen::MatrixXd flatten_encoded(const Cohort& cohort, const Encoding& encoding) {
  const auto steps = static_cast<Eigen::Index>(cohort.schema().series_length());
  const auto width = encoding.width();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(cohort.size()), steps * width);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const Eigen::MatrixXd e = encoding.encode_series(cohort.patient(i).observations);
    for (Eigen::Index t = 0; t < steps; ++t)
      out.block(static_cast<Eigen::Index>(i), t * width, 1, width) = e.row(t);
  }
  return out;
}

AuthenticityResult authenticity_audit(const Cohort& syn, const Cohort& real,
                                      const Encoding& encoding) {
  return authenticity_audit(flatten_encoded(syn, encoding), flatten_encoded(real, encoding));
}

Eigen::MatrixXd variable_points(const Cohort& cohort, const Encoding& encoding, std::size_t v) {
  const auto steps = static_cast<Eigen::Index>(cohort.schema().series_length());
  const auto slot = encoding.slot(v);
  Eigen::MatrixXd out(steps * static_cast<Eigen::Index>(cohort.size()), slot.width);
  Eigen::Index r = 0;
  for (const auto& p : cohort.patients()) {
    const Eigen::MatrixXd e = encoding.encode_series(p.observations);
    out.middleRows(r, steps) = e.middleCols(slot.offset, slot.width);
    r += steps;
  }
  return out;
}

double variable_mmd(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn, double sigma,
                    std::size_t max_points, std::uint64_t seed) {
  const auto [xr, wr] = collapse(subsample(real, max_points, seed));
  const auto [xs, ws] = collapse(subsample(syn, max_points, seed));
  return mmd_rbf_weighted(xr, wr, xs, ws, sigma);
}

FidelityReport fidelity_report(const Cohort& real, const Cohort& syn, const Encoding& encoding,
                               const MetricsConfig& cfg) {
  if (real.empty() || syn.empty()) throw InvalidArgument("fidelity report needs two nonempty cohorts");
  if (real.schema().hash() != syn.schema().hash() ||
      real.schema().hash() != encoding.schema().hash())
    throw SchemaMismatch("fidelity report: cohorts and encoding use different schemas");
  FidelityReport rep;
  rep.config = cfg;
  const auto& vars = real.schema().variables();
  std::vector<double> kls, mmds;
  for (std::size_t v = 0; v < vars.size(); ++v) {
    VariableFidelity f;
    f.name = vars[v].name;
    f.kl = kl_divergence(real.pooled_column(v), syn.pooled_column(v), vars[v], cfg.kl_bins,
                         cfg.kl_epsilon);
    f.mmd = variable_mmd(variable_points(real, encoding, v), variable_points(syn, encoding, v),
                         cfg.mmd_sigma, cfg.mmd_max_points, substream_seed(cfg.seed, "mmd:" + f.name));
    kls.push_back(f.kl);
    mmds.push_back(f.mmd);
    rep.variables.push_back(std::move(f));
  }
  rep.kl_median = median(kls);
  rep.mmd_median = median(mmds);

  const Eigen::MatrixXd flat_real = flatten_encoded(real, encoding);
  const Eigen::MatrixXd flat_syn = flatten_encoded(syn, encoding);
  rep.sequence_mmd_sigma = cfg.sequence_mmd_sigma;
  if (!(rep.sequence_mmd_sigma > 0.0)) {
    rep.sequence_mmd_sigma = flat_real.rows() > 1 ? median_pairwise_distance(flat_real) : 1.0;
    if (!(rep.sequence_mmd_sigma > 0.0)) rep.sequence_mmd_sigma = 1.0;
  }
  rep.sequence_mmd = mmd_rbf(flat_real, flat_syn, rep.sequence_mmd_sigma);

  rep.kendall_real = kendall_matrix(raw_pooled(real));
  rep.kendall_syn = kendall_matrix(raw_pooled(syn));
  rep.authenticity = authenticity_audit(flat_syn, flat_real);
  if (cfg.projection && flat_real.rows() + flat_syn.rows() >= 3)
    rep.projection = pca_2d(flat_real, flat_syn);
  return rep;
}

std::string fidelity_csv(const FidelityReport& report) {
  std::string out = "variable,kl,mmd\n";
  for (const auto& v : report.variables)
    out += fmt::format("{},{},{}\n", v.name, format_double(v.kl), format_double(v.mmd));
  out += fmt::format("median,{},{}\n", format_double(report.kl_median),
                     format_double(report.mmd_median));
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != m.rows() || m.rows() != m.cols())
    throw InvalidArgument("matrix_csv: names do not match the matrix");
  std::string out = "variable";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out += "," + (std::isnan(m(i, j)) ? std::string("NA") : format_double(m(i, j)));
    out += "\n";
  }
  return out;
}

std::string summary_csv(const FidelityReport& report) {
  std::string out = "metric,value\n";
  auto row = [&](const std::string& k, const std::string& v) { out += k + "," + v + "\n"; };
  row("min_syn_to_real_distance", format_double(report.authenticity.min_distance));
  for (const auto& [p, d] : report.authenticity.percentiles)
    row(fmt::format("nn_distance_p{}", static_cast<int>(p)), format_double(d));
  row("kl_median", format_double(report.kl_median));
  row("mmd_median", format_double(report.mmd_median));
  row("sequence_mmd", format_double(report.sequence_mmd));
  row("sequence_mmd_sigma", format_double(report.sequence_mmd_sigma));
  row("kl_bins", std::to_string(report.config.kl_bins));
  row("kl_epsilon", format_double(report.config.kl_epsilon));
  row("mmd_sigma", format_double(report.config.mmd_sigma));
  row("mmd_max_points", std::to_string(report.config.mmd_max_points));
  return out;
}

}  // namespace seqaug::metrics
