#pragma once

#include <span>
#include <vector>

#include "drcate/types.hpp"

namespace drcate {

enum class BasisKind { linear, natural_spline };

struct BasisSpec {
  BasisKind kind = BasisKind::linear;
  // Columns per modifier for the additive natural cubic spline.
  int df = 3;

  void validate() const;
};

// Type-7 sample quantile of already sorted values.
double sorted_quantile(std::span<const double> sorted, double prob);

// Knots for one modifier: boundary knots at the sample min/max and df-1
// interior knots at equispaced quantiles. Throws DomainError when the knots
// are not strictly increasing.
std::vector<double> spline_knots(std::span<const double> values, int df);

// Natural cubic spline basis (truncated power form) at x, without intercept:
// x, d_1(x) - d_{K-1}(x), ..., d_{K-2}(x) - d_{K-1}(x) with
// d_k(x) = ((x - k_k)_+^3 - (x - k_K)_+^3) / (k_K - k_k). Linear outside
// the boundary knots. Writes knots.size() - 1 values.
void natural_spline_row(double x, std::span<const double> knots, std::span<double> out);

// Second-stage design map. In fit mode the spline knots are learned from the
// fitting modifiers; transform applies the stored knots to any rows.
class DesignBasis {
 public:
  // `v` carries the intercept in column 0.
  static DesignBasis fit(const Matrix& v, const BasisSpec& spec);

  Matrix transform(const Matrix& v) const;

  Index width() const noexcept;
  const BasisSpec& spec() const noexcept { return spec_; }
  const std::vector<std::vector<double>>& knots() const noexcept { return knots_; }

  // Rows with at least one modifier outside its boundary knots.
  Index count_extrapolated(const Matrix& v) const;

 private:
  BasisSpec spec_;
  Index modifiers_ = 0;
  std::vector<std::vector<double>> knots_;
};

// Fit-mode convenience: DesignBasis::fit(v, spec).transform(v).
Matrix build_design(const Matrix& v, const BasisSpec& spec);

}  // namespace drcate
