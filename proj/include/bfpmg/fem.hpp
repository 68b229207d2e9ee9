#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bfpmg/linalg.hpp"

namespace bfpmg {

enum class Pde { poisson, biharmonic };

/// One discrete problem instance: which model PDE, dimension, B-spline degree
/// p (order k = p+1), and refinement level j (mesh size h = 2^-j).
struct ProblemSpec {
  Pde pde = Pde::poisson;
  int dim = 1;
  int degree = 1;
  int level = 1;

  void validate() const;
  int order_k() const { return degree + 1; }
  /// m with 2m the order of the PDE.
  int order_m() const { return pde == Pde::poisson ? 1 : 2; }
  std::string name() const;
};

/// Manufactured solution with trigonometric components; closed forms for the
/// right-hand side and the order-m derivatives used by the energy norm.
struct Manufactured {
  Pde pde;
  int dim;
  mpfr_prec_t prec;

  ExtFloat u(const ExtFloat& x) const;
  ExtFloat u2(const ExtFloat& x, const ExtFloat& y) const;
  ExtFloat f(const ExtFloat& x) const;
  ExtFloat f2(const ExtFloat& x, const ExtFloat& y) const;
  /// Order-m derivative: u' (poisson 1d) or u'' (biharmonic).
  ExtFloat du(const ExtFloat& x) const;
  /// Gradient components for the 2d case.
  ExtFloat dux(const ExtFloat& x, const ExtFloat& y) const;
  ExtFloat duy(const ExtFloat& x, const ExtFloat& y) const;
};

Manufactured manufactured(const ProblemSpec& spec, mpfr_prec_t prec);

/// Gauss-Legendre nodes and weights on [-1, 1], accurate to the ExtFloat
/// width (Newton refinement of the Legendre roots).
std::pair<VecX, VecX> gauss_legendre(int nq, mpfr_prec_t prec);

/// Open uniform knot vector on [0,1] with dyadic interior knots.
VecX bspline_knots(int degree, int level, mpfr_prec_t prec);

/// All p+1 nonzero B-spline basis functions and their first `nders`
/// derivatives at x inside knot span `span`; result[k][j] is the k-th
/// derivative of basis function span-p+j.
std::vector<VecX> bspline_ders(const VecX& knots, int degree, std::int64_t span,
                               const ExtFloat& x, int nders);

std::int64_t bspline_find_span(const VecX& knots, int degree, const ExtFloat& x);

/// Number of interior (retained) basis functions after strong enforcement of
/// the Dirichlet conditions, per dimension.
std::int64_t interior_count_1d(const ProblemSpec& spec);
/// Offset of the first retained basis function (1 for poisson, 2 biharmonic).
std::int64_t interior_offset(const ProblemSpec& spec);
std::int64_t unknown_count(const ProblemSpec& spec);

/// Assembled Galerkin system over the interior basis: stiffness a(phi_i,
/// phi_j) and load (f, phi_i), per-element Gauss-Legendre quadrature with
/// (p+1)^d points.
struct Discretization {
  CsrExt a;
  VecX b;
};

Discretization assemble(const ProblemSpec& spec, mpfr_prec_t prec);

/// 1D interior stiffness/mass pair used for tensor construction and tests.
struct Assembled1d {
  CsrExt stiffness;  // order-2m form
  CsrExt mass;
};
Assembled1d assemble_1d_interior(const ProblemSpec& spec, mpfr_prec_t prec);

/// Dyadic B-spline refinement matrix (knot insertion) mapping level j-1
/// coefficients to level j, restricted to interior basis functions.
CsrExt prolongation(const ProblemSpec& spec, int level, mpfr_prec_t prec);

/// Energy norm ||u - u_h||_L via elementwise quadrature at p+3 points per
/// element and direction; coeffs are interior coefficients at spec.level.
ExtFloat energy_error(const VecX& coeffs, const ProblemSpec& spec, mpfr_prec_t prec);

/// ||u||_L (coeffs = 0 case of the above).
ExtFloat energy_norm_of_u(const ProblemSpec& spec, mpfr_prec_t prec);

/// Galerkin solve of the assembled system: banded Cholesky up to ~10^4
/// unknowns, conjugate gradients (residual < 2^-200 ||b||_inf) beyond.
VecX reference_solve(const Discretization& d, mpfr_prec_t prec);

/// Tensor-product FEM matrix of the 2D Poisson p=1 discretization on an
/// n x n interior grid with h = 1/(n+1); used by the quantization-error and
/// discrete-harmonic studies at arbitrary n.
CsrExt poisson2d_p1_grid(std::int64_t n, mpfr_prec_t prec);

/// Kronecker-sum helpers for tensor-product operators.
CsrExt kron(const CsrExt& a, const CsrExt& b, mpfr_prec_t prec);
CsrExt kron_sum(const CsrExt& a, const CsrExt& m, mpfr_prec_t prec);  // a@m + m@a

/// Coordinate-triplet fixture format: "row col value" per line, '#' comments.
std::string write_coo(const CsrExt& a, int digits = 30);
std::string write_coo_vec(const VecX& v, int digits = 30);

}  // namespace bfpmg
