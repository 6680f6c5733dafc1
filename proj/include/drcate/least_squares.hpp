#pragma once

#include "drcate/types.hpp"

namespace drcate {

// Relative rank tolerance: a column is dependent when its pivot falls below
// this fraction of the largest column norm.
inline constexpr double kRankTolerance = 1e-10;

// Ordinary least squares through a column-pivoted Householder QR. The
// factorisation is computed once and reused for any number of responses.
class LeastSquares {
 public:
  // Throws DomainError when the design is rank deficient.
  explicit LeastSquares(const Matrix& design);

  Index rows() const noexcept { return qr_.rows(); }
  Index cols() const noexcept { return qr_.cols(); }

  Vector coefficients(const Vector& response) const;
  // One column of coefficients per response column.
  Matrix coefficients(const Matrix& responses) const;

  // Weights g with query_row * beta_hat(z) = g^T z for every response z.
  Vector influence(const RowVector& query_row) const;

  // Whether the design has full column rank at kRankTolerance.
  static bool full_rank(const Matrix& design);

 private:
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

// OLS of z on the design, evaluated at the query rows.
Vector delta(const Matrix& design, const Matrix& query_design, const Vector& z);

}  // namespace drcate
