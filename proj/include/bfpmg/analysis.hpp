#pragma once

#include <cstdint>
#include <vector>

#include "bfpmg/bfp.hpp"
#include "bfpmg/linalg.hpp"

namespace bfpmg {

/// Spectral data of an SPD operator: the smallest eigenpairs plus the
/// conditioning quantities entering the precision bounds.
struct SpectralReport {
  std::vector<ExtFloat> eigenvalues;
  std::vector<VecX> eigenvectors;
  ExtFloat kappa{ExtFloat::kDefaultPrec};        // lambda_max / lambda_min
  ExtFloat kappa_under{ExtFloat::kDefaultPrec};  // |||A||| * ||A^{-1}||
  ExtFloat pseudo_h{ExtFloat::kDefaultPrec};     // kappa_under^{-1/(2m)}
};

/// Smallest `count` eigenpairs by inverse iteration with deflation; residual
/// certificate ||A v - lambda v|| <= 2^-100 ||v||.
SpectralReport smallest_eigpairs(const CsrExt& a, int count, mpfr_prec_t prec);

/// Relative energy error of BFP quantization at width w: v is scaled to unit
/// infinity norm, floor-quantized, and the error reported as
/// ||v - v_q||_A / ||v_q||_A (= eps ||z||_A / ||v_q||_A).
ExtFloat quant_error(const VecX& v, std::int64_t w, const CsrExt& a, mpfr_prec_t prec);

struct DiscreteHarmonic {
  ExtFloat min_energy{ExtFloat::kDefaultPrec};  // (max diag A^{-1})^{-1/2}
  std::int64_t index = 0;
  VecX minimizer;
};

/// Minimum of ||v||_A over unit-infinity-norm vectors, realized by the
/// discrete harmonic v = A^{-1} e_p / (A^{-1})_{pp} at the maximizing
/// diagonal entry of A^{-1}.
DiscreteHarmonic discrete_harmonic_min(const CsrExt& a, mpfr_prec_t prec);

struct ConditionNumbers {
  ExtFloat kappa{ExtFloat::kDefaultPrec};
  ExtFloat kappa_under{ExtFloat::kDefaultPrec};
  ExtFloat pseudo_h{ExtFloat::kDefaultPrec};
};

/// kappa = lambda_max/lambda_min, kappa_under = |||A||| ||A^{-1}||, and the
/// pseudo mesh size h = kappa_under^{-1/(2m)}.
ConditionNumbers condition_numbers(const CsrExt& a, int m, mpfr_prec_t prec);

}  // namespace bfpmg
