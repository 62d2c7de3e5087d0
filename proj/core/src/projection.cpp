#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "novelty/error.hpp"
#include "novelty/gmm.hpp"

namespace novelty::gmm {

Eigen::VectorXd Projection::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean.size()) {
    throw DimensionMismatch(input_dim(), static_cast<std::size_t>(x.size()));
  }
  return basis.transpose() * (x - mean);
}

Eigen::MatrixXd Projection::apply_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) {
    throw DimensionMismatch(input_dim(), static_cast<std::size_t>(rows.cols()));
  }
  return (rows.rowwise() - mean.transpose()) * basis;
}

Projection fit_projection(const Eigen::MatrixXd& rows, std::size_t k) {
  if (rows.rows() < 1 || rows.cols() < 1) throw ValidationError("projection of empty data");
  if (k == 0) throw ValidationError("projection dimension must be positive");
  if (!rows.allFinite()) throw ValidationError("projection data contains non-finite values");

  Projection p;
  p.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - p.mean.transpose();
  const Eigen::Index available = std::min(centered.rows(), centered.cols());
  const auto out = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), available);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  p.basis = svd.matrixV().leftCols(out);
  const double denom = static_cast<double>(std::max<Eigen::Index>(1, rows.rows() - 1));
  p.explained_variance = svd.singularValues().head(out).array().square() / denom;

  for (Eigen::Index c = 0; c < out; ++c) {
    Eigen::Index arg = 0;
    p.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (p.basis(arg, c) < 0.0) p.basis.col(c) *= -1.0;
  }
  return p;
}

}  // namespace novelty::gmm
