#include "drcate/basis.hpp"

#include <algorithm>
#include <cmath>

#include "drcate/errors.hpp"

namespace drcate {

void BasisSpec::validate() const {
  if (kind == BasisKind::natural_spline && df < 2) {
    throw ConfigError("natural spline needs at least 2 degrees of freedom per modifier");
  }
}

double sorted_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> spline_knots(std::span<const double> values, int df) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.empty()) throw DomainError("cannot place spline knots on an empty column");
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) distinct += sorted[i] != sorted[i - 1] ? 1 : 0;
  if (distinct < static_cast<std::size_t>(df) + 1) {
    throw DomainError("modifier has " + std::to_string(distinct) + " distinct values, fewer than the " +
                      std::to_string(df + 1) + " spline knots required");
  }
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(df) + 1);
  knots.push_back(sorted.front());
  for (int k = 1; k < df; ++k) {
    knots.push_back(sorted_quantile(sorted, static_cast<double>(k) / df));
  }
  knots.push_back(sorted.back());
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (!(knots[k] > knots[k - 1])) {
      throw DomainError("modifier has too few distinct values for " + std::to_string(df + 1) +
                        " spline knots");
    }
  }
  return knots;
}

void natural_spline_row(double x, std::span<const double> knots, std::span<double> out) {
  const std::size_t K = knots.size();
  const double last = knots[K - 1];
  auto cube_plus = [](double u) { return u > 0.0 ? u * u * u : 0.0; };
  auto d = [&](std::size_t k) {
    return (cube_plus(x - knots[k]) - cube_plus(x - last)) / (last - knots[k]);
  };
  out[0] = x;
  const double d_last = d(K - 2);
  for (std::size_t k = 0; k + 2 < K; ++k) out[k + 1] = d(k) - d_last;
}

DesignBasis DesignBasis::fit(const Matrix& v, const BasisSpec& spec) {
  spec.validate();
  DesignBasis basis;
  basis.spec_ = spec;
  basis.modifiers_ = v.cols() - 1;
  if (spec.kind == BasisKind::natural_spline) {
    std::vector<double> column(static_cast<std::size_t>(v.rows()));
    for (Index j = 1; j < v.cols(); ++j) {
      for (Index i = 0; i < v.rows(); ++i) column[static_cast<std::size_t>(i)] = v(i, j);
      basis.knots_.push_back(spline_knots(column, spec.df));
    }
  }
  return basis;
}

Index DesignBasis::width() const noexcept {
  if (spec_.kind == BasisKind::linear) return modifiers_ + 1;
  return 1 + modifiers_ * spec_.df;
}

Matrix DesignBasis::transform(const Matrix& v) const {
  if (v.cols() != modifiers_ + 1) {
    throw SchemaError("modifier matrix has " + std::to_string(v.cols()) +
                      " columns, basis was fitted on " + std::to_string(modifiers_ + 1));
  }
  if (spec_.kind == BasisKind::linear) return v;
  const Index n = v.rows();
  const Index df = spec_.df;
  Matrix out(n, width());
  out.col(0) = v.col(0);
  std::vector<double> row(static_cast<std::size_t>(df));
  for (Index j = 0; j < modifiers_; ++j) {
    const auto& kn = knots_[static_cast<std::size_t>(j)];
    for (Index i = 0; i < n; ++i) {
      natural_spline_row(v(i, j + 1), kn, row);
      for (Index c = 0; c < df; ++c) out(i, 1 + j * df + c) = row[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

Index DesignBasis::count_extrapolated(const Matrix& v) const {
  if (spec_.kind == BasisKind::linear) return 0;
  Index count = 0;
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index j = 0; j < modifiers_; ++j) {
      const auto& kn = knots_[static_cast<std::size_t>(j)];
      const double x = v(i, j + 1);
      if (x < kn.front() || x > kn.back()) {
        ++count;
        break;
      }
    }
  }
  return count;
}

Matrix build_design(const Matrix& v, const BasisSpec& spec) {
  return DesignBasis::fit(v, spec).transform(v);
}

}  // namespace drcate
