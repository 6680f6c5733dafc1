#include "drcate/least_squares.hpp"

#include "drcate/errors.hpp"

namespace drcate {

LeastSquares::LeastSquares(const Matrix& design) {
  if (design.rows() < design.cols()) {
    throw DomainError("least squares design has fewer rows (" + std::to_string(design.rows()) +
                      ") than columns (" + std::to_string(design.cols()) + ")");
  }
  qr_.setThreshold(kRankTolerance);
  qr_.compute(design);
  if (qr_.rank() < design.cols()) {
    throw DomainError("least squares design is singular (rank " + std::to_string(qr_.rank()) +
                      " < " + std::to_string(design.cols()) + ")");
  }
}

Vector LeastSquares::coefficients(const Vector& response) const {
  if (response.size() != rows()) throw SchemaError("response length does not match design rows");
  return qr_.solve(response);
}

Matrix LeastSquares::coefficients(const Matrix& responses) const {
  if (responses.rows() != rows()) throw SchemaError("response rows do not match design rows");
  return qr_.solve(responses);
}

Vector LeastSquares::influence(const RowVector& query_row) const {
  if (query_row.size() != cols()) throw SchemaError("query width does not match design columns");
  const Index k = cols();
  // design = Q R P^T, so design (design^T design)^{-1} x^T = Q R^{-T} P^T x^T.
  const Vector permuted = qr_.colsPermutation().transpose() * query_row.transpose();
  const Vector w = qr_.matrixR()
                       .topLeftCorner(k, k)
                       .triangularView<Eigen::Upper>()
                       .transpose()
                       .solve(permuted);
  Vector padded = Vector::Zero(rows());
  padded.head(k) = w;
  return qr_.householderQ() * padded;
}

bool LeastSquares::full_rank(const Matrix& design) {
  if (design.rows() < design.cols()) return false;
  Eigen::ColPivHouseholderQR<Matrix> qr(design.rows(), design.cols());
  qr.setThreshold(kRankTolerance);
  qr.compute(design);
  return qr.rank() == design.cols();
}

Vector delta(const Matrix& design, const Matrix& query_design, const Vector& z) {
  if (query_design.cols() != design.cols()) {
    throw SchemaError("query design width does not match the fitted design");
  }
  const LeastSquares ols(design);
  return query_design * ols.coefficients(z);
}

}  // namespace drcate
