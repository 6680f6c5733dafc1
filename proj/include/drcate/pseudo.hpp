#pragma once

#include "drcate/dataset.hpp"
#include "drcate/nuisance.hpp"
#include "drcate/types.hpp"

namespace drcate {

// AIPW pseudo-outcome, computed as the treated-arm term minus the control-arm
// term with p0 = 1 - p1. Throws DomainError on non-finite input.
double pseudo_outcome(double y, double t, double p1, double m1, double m0);

struct PseudoOutcomeDraws {
  Matrix z;      // B x n
  Vector z_bar;  // column means of z
};

PseudoOutcomeDraws build_pseudo_outcomes(const Dataset& data, const PosteriorDraws& draws);

// Per-unit posterior mean of the pseudo-outcome draws.
Vector posterior_mean_pseudo(const Matrix& z);

struct DecompositionTerms {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double b = 0.0;

  double sum() const noexcept { return a1 + a2 + a3 + b; }
};

// Splits one pseudo-outcome into the error terms around a reference
// (p1_ref, m1_ref, m0_ref):
//   a1 = (m - m~)(1 - 1(T=t)/p~)
//   a2 = 1(T=t)(p - p~)(m~ - Y) / (p p~)
//   a3 = 1(T=t)(p - p~)(m - m~) / (p p~)
//   b  = 1(T=t)/p~ (Y - m~) + m~
// each taken as treated-arm minus control-arm.
DecompositionTerms decompose(double y, double t, double p1, double m1, double m0, double p1_ref,
                             double m1_ref, double m0_ref);

struct Decomposition {
  Vector a1;
  Vector a2;
  Vector a3;
  Vector b;
};

// Decomposition of draw `draw` for every unit against reference vectors.
Decomposition decompose(const Dataset& data, const PosteriorDraws& draws, Index draw,
                        const Vector& p1_ref, const Vector& m1_ref, const Vector& m0_ref);

}  // namespace drcate
