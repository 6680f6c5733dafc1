#include "drcate/pseudo.hpp"

#include <cmath>

#include "drcate/errors.hpp"

namespace drcate {
namespace {

inline double arm_term(double indicator, double p, double y, double m) {
  return indicator / p * (y - m) + m;
}

void require_finite(double y, double p1, double m1, double m0) {
  if (!std::isfinite(y) || !std::isfinite(p1) || !std::isfinite(m1) || !std::isfinite(m0)) {
    throw DomainError("non-finite input to pseudo-outcome");
  }
}

struct ArmTerms {
  double a1, a2, a3, b;
};

ArmTerms arm_decomposition(double indicator, double y, double p, double m, double p_ref,
                           double m_ref) {
  const double dp = p - p_ref;
  const double dm = m - m_ref;
  return {dm * (1.0 - indicator / p_ref), indicator * dp * (m_ref - y) / (p * p_ref),
          indicator * dp * dm / (p * p_ref), arm_term(indicator, p_ref, y, m_ref)};
}

}  // namespace

double pseudo_outcome(double y, double t, double p1, double m1, double m0) {
  require_finite(y, p1, m1, m0);
  if (!(p1 > 0.0 && p1 < 1.0)) throw DomainError("propensity must lie strictly inside (0, 1)");
  const double p0 = 1.0 - p1;
  return arm_term(t, p1, y, m1) - arm_term(1.0 - t, p0, y, m0);
}

PseudoOutcomeDraws build_pseudo_outcomes(const Dataset& data, const PosteriorDraws& draws) {
  const Index n = data.n();
  const Index b_count = draws.draws();
  if (draws.units() != n) {
    throw SchemaError("posterior draws cover " + std::to_string(draws.units()) +
                      " units but the dataset has " + std::to_string(n));
  }
  PseudoOutcomeDraws out;
  out.z.resize(b_count, n);
  const Vector& y = data.y();
  const Vector& t = data.t();
  for (Index i = 0; i < n; ++i) {
    const double treated = t[i];
    const double control = 1.0 - treated;
    for (Index b = 0; b < b_count; ++b) {
      const double m1 = draws.m1(b, i);
      const double m0 = draws.m0(b, i);
      out.z(b, i) = arm_term(treated, draws.p1(b, i), y[i], m1) -
                    arm_term(control, draws.p0(b, i), y[i], m0);
    }
  }
  if (!out.z.allFinite()) throw DomainError("pseudo-outcome draws contain non-finite values");
  out.z_bar = posterior_mean_pseudo(out.z);
  return out;
}

Vector posterior_mean_pseudo(const Matrix& z) {
  if (z.rows() < 1) throw ConfigError("at least one pseudo-outcome draw is required");
  return z.colwise().mean().transpose();
}

DecompositionTerms decompose(double y, double t, double p1, double m1, double m0, double p1_ref,
                             double m1_ref, double m0_ref) {
  require_finite(y, p1, m1, m0);
  require_finite(y, p1_ref, m1_ref, m0_ref);
  if (!(p1 > 0.0 && p1 < 1.0) || !(p1_ref > 0.0 && p1_ref < 1.0)) {
    throw DomainError("propensity must lie strictly inside (0, 1)");
  }
  const auto treated = arm_decomposition(t, y, p1, m1, p1_ref, m1_ref);
  const auto control = arm_decomposition(1.0 - t, y, 1.0 - p1, m0, 1.0 - p1_ref, m0_ref);
  return {treated.a1 - control.a1, treated.a2 - control.a2, treated.a3 - control.a3,
          treated.b - control.b};
}

Decomposition decompose(const Dataset& data, const PosteriorDraws& draws, Index draw,
                        const Vector& p1_ref, const Vector& m1_ref, const Vector& m0_ref) {
  const Index n = data.n();
  if (draws.units() != n || p1_ref.size() != n || m1_ref.size() != n || m0_ref.size() != n) {
    throw SchemaError("decomposition inputs have mismatched lengths");
  }
  if (draw < 0 || draw >= draws.draws()) throw ConfigError("draw index out of range");
  Decomposition out{Vector(n), Vector(n), Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const auto d = decompose(data.y()[i], data.t()[i], draws.p1(draw, i), draws.m1(draw, i),
                             draws.m0(draw, i), p1_ref[i], m1_ref[i], m0_ref[i]);
    out.a1[i] = d.a1;
    out.a2[i] = d.a2;
    out.a3[i] = d.a3;
    out.b[i] = d.b;
  }
  return out;
}

}  // namespace drcate
