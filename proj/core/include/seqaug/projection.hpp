#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace seqaug::metrics {

enum class ProjectionMethod { pca, tsne, umap };

std::string_view to_string(ProjectionMethod method);
ProjectionMethod parse_projection_method(std::string_view text);

struct Projection {
  ProjectionMethod method = ProjectionMethod::pca;
  Eigen::MatrixXd real;  // n x 2
  Eigen::MatrixXd syn;   // m x 2
  /// PCA only: centering mean (1 x d), components (d x 2) and the variance
  /// of the real data along each component.
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;
  Eigen::Vector2d variance = Eigen::Vector2d::Zero();
};

/// Top-2 principal components fitted on `real` rows; `syn` is projected into
/// the same basis. Each component is signed so its largest-magnitude entry
/// is positive.
Projection pca_2d(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn);

/// Out-of-core embedding (t-SNE, UMAP, ...). Implementations embed the
/// stacked [real; syn] rows into 2-D.
class ProjectionBackend {
 public:
  virtual ~ProjectionBackend() = default;
  virtual ProjectionMethod method() const = 0;
  virtual Eigen::MatrixXd embed(const Eigen::MatrixXd& points, std::uint64_t seed) const = 0;
};

/// PCA runs in-core; other methods need a matching backend and throw
/// BackendUnavailable otherwise.
Projection project_2d(const Eigen::MatrixXd& real, const Eigen::MatrixXd& syn,
                      ProjectionMethod method, const ProjectionBackend* backend = nullptr,
                      std::uint64_t seed = 0);

/// `set,x,y` rows, real first.
std::string projection_csv(const Projection& p);

}  // namespace seqaug::metrics
