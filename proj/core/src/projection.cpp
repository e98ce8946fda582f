#include "seqaug/projection.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include "seqaug/errors.hpp"
#include "seqaug/text_io.hpp"

namespace seqaug::metrics {

std::string_view to_string(ProjectionMethod method) {
  switch (method) {
    case ProjectionMethod::pca: return "pca";
    case ProjectionMethod::tsne: return "tsne";
    case ProjectionMethod::umap: return "umap";
  }
  return "?";
}

ProjectionMethod parse_projection_method(std::string_view text) {
  if (text == "pca") return ProjectionMethod::pca;
  if (text == "tsne") return ProjectionMethod::tsne;
  if (text == "umap") return ProjectionMethod::umap;
  throw InvalidArgument(fmt::format("unknown projection method '{}'", text));
}

Projection pca_2d(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn) {
  if (real.rows() < 1) throw InvalidArgument("pca: no real points");
  if (syn.rows() > 0 && syn.cols() != real.cols()) throw InvalidArgument("pca: dimensions differ");
  if (real.rows() + syn.rows() < 3) throw InvalidArgument("pca: needs at least 3 points");
  if (real.cols() < 2) throw InvalidArgument("pca: needs at least 2 dimensions");

  Projection p;
  p.method = ProjectionMethod::pca;
  p.mean = real.colwise().mean();
  const Eigen::MatrixXd centered = real.rowwise() - p.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::MatrixXd& v = svd.matrixV();
  p.components = Eigen::MatrixXd::Zero(real.cols(), 2);
  const auto available = std::min<Eigen::Index>(2, v.cols());
  p.components.leftCols(available) = v.leftCols(available);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    p.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (p.components(arg, c) < 0.0) p.components.col(c) *= -1.0;
    const double s = c < svd.singularValues().size() ? svd.singularValues()(c) : 0.0;
    p.variance(c) = s * s / static_cast<double>(real.rows());
  }
  p.real = centered * p.components;
  if (syn.rows() > 0) p.syn = (syn.rowwise() - p.mean) * p.components;
  else p.syn = Eigen::MatrixXd(0, 2);
  return p;
}

Projection project_2d(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn,
                      ProjectionMethod method, const ProjectionBackend* backend,
                      std::uint64_t seed) {
  if (method == ProjectionMethod::pca) return pca_2d(real, syn);
  if (!backend || backend->method() != method)
    throw BackendUnavailable(fmt::format("no {} backend is registered", to_string(method)));
  if (real.rows() + syn.rows() < 3) throw InvalidArgument("projection needs at least 3 points");
  Eigen::MatrixXd stacked(real.rows() + syn.rows(), real.cols());
  stacked << real, syn;
  const Eigen::MatrixXd coords = backend->embed(stacked, seed);
  if (coords.rows() != stacked.rows() || coords.cols() != 2)
    throw InvalidArgument("projection backend returned the wrong shape");
  Projection p;
  p.method = method;
  p.real = coords.topRows(real.rows());
  p.syn = coords.bottomRows(syn.rows());
  return p;
}

std::string projection_csv(const Projection& p) {
  std::string out = "set,x,y\n";
  for (Eigen::Index i = 0; i < p.real.rows(); ++i)
    out += fmt::format("real,{},{}\n", format_double(p.real(i, 0)), format_double(p.real(i, 1)));
  for (Eigen::Index i = 0; i < p.syn.rows(); ++i)
    out += fmt::format("synthetic,{},{}\n", format_double(p.syn(i, 0)), format_double(p.syn(i, 1)));
  return out;
}

}  // namespace seqaug::metrics
