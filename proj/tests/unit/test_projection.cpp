#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "seqaug/errors.hpp"
#include "seqaug/projection.hpp"
#include "seqaug/rng.hpp"

using namespace seqaug;
using namespace seqaug::metrics;

namespace {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues in
// descending order with matching eigenvector columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const auto n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
        r(p, p) = c;
        r(q, q) = c;
        r(p, q) = s;
        r(q, p) = -s;
        a = r.transpose() * a * r;
        v = v * r;
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  Eigen::VectorXd vals(n);
  Eigen::MatrixXd vecs(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    vals(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    vecs.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return {vals, vecs};
}

Eigen::MatrixXd anisotropic(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d;
  Eigen::MatrixXd x(n, 4);
  const double scale[4] = {5.0, 2.0, 0.5, 0.1};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < 4; ++c) x(i, c) = scale[c] * d(rng) + c;
  // Rotate so the axes are not aligned with the coordinates.
  const auto [vals, rot] = jacobi_eigen((Eigen::MatrixXd(4, 4) << 2, 1, 0, 0, 1, 3, 1, 0, 0, 1, 4, 1, 0, 0, 1, 5).finished());
  (void)vals;
  return x * rot.transpose();
}

struct FixedBackend : ProjectionBackend {
  ProjectionMethod method() const override { return ProjectionMethod::tsne; }
  Eigen::MatrixXd embed(const Eigen::MatrixXd& points, std::uint64_t seed) const override {
    Eigen::MatrixXd out(points.rows(), 2);
    for (Eigen::Index i = 0; i < points.rows(); ++i) out.row(i) << static_cast<double>(i), static_cast<double>(seed);
    return out;
  }
};

}  // namespace

TEST(Pca, ComponentsMatchCovarianceEigenvectors) {
  const auto real = anisotropic(300, 1);
  const auto syn = anisotropic(40, 2);
  const auto p = pca_2d(real, syn);
  const Eigen::MatrixXd centered = real.rowwise() - real.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(real.rows());
  const auto [vals, vecs] = jacobi_eigen(cov);
  for (Eigen::Index c = 0; c < 2; ++c) {
    EXPECT_NEAR(p.variance(c), vals(c), 1e-9);
    // Same direction up to sign.
    EXPECT_NEAR(std::abs(p.components.col(c).dot(vecs.col(c))), 1.0, 1e-9);
  }
  EXPECT_LT((p.syn - (syn.rowwise() - p.mean) * p.components).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(p.real.rows(), 300);
  EXPECT_EQ(p.syn.rows(), 40);
}

TEST(Pca, SignPutsTheLargestEntryPositive) {
  const auto a = pca_2d(anisotropic(100, 3), Eigen::MatrixXd(0, 4));
  const auto b = pca_2d(-anisotropic(100, 3), Eigen::MatrixXd(0, 4));
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    a.components.col(c).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.components(arg, c), 0.0);
    EXPECT_LT((a.components.col(c) - b.components.col(c)).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_EQ(a.syn.rows(), 0);
}

TEST(Pca, RejectsDegenerateInput) {
  EXPECT_THROW(pca_2d(Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd(0, 3)), InvalidArgument);
  EXPECT_THROW(pca_2d(Eigen::MatrixXd::Zero(5, 1), Eigen::MatrixXd(0, 1)), InvalidArgument);
  EXPECT_THROW(pca_2d(Eigen::MatrixXd::Zero(5, 3), Eigen::MatrixXd::Zero(2, 4)), InvalidArgument);
}

TEST(Projection, OtherMethodsNeedABackend) {
  const auto real = anisotropic(10, 4), syn = anisotropic(5, 5);
  EXPECT_THROW(project_2d(real, syn, ProjectionMethod::tsne), BackendUnavailable);
  EXPECT_THROW(project_2d(real, syn, ProjectionMethod::umap), BackendUnavailable);
  const FixedBackend backend;
  EXPECT_THROW(project_2d(real, syn, ProjectionMethod::umap, &backend), BackendUnavailable);
  const auto p = project_2d(real, syn, ProjectionMethod::tsne, &backend, 9);
  EXPECT_EQ(p.real(9, 0), 9.0);
  EXPECT_EQ(p.syn(0, 0), 10.0);
  EXPECT_EQ(p.syn(4, 1), 9.0);
}

TEST(Projection, MethodNamesAndCsv) {
  EXPECT_EQ(parse_projection_method("umap"), ProjectionMethod::umap);
  EXPECT_EQ(to_string(ProjectionMethod::tsne), "tsne");
  EXPECT_THROW(parse_projection_method("isomap"), InvalidArgument);
  Projection p;
  p.real = (Eigen::MatrixXd(1, 2) << 1, 2).finished();
  p.syn = (Eigen::MatrixXd(1, 2) << 3, 4).finished();
  EXPECT_EQ(projection_csv(p), "set,x,y\nreal,1,2\nsynthetic,3,4\n");
}
