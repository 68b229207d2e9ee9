#include "bfpmg/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bfpmg {

namespace {

std::int64_t pow2i(int j) { return std::int64_t(1) << j; }

// Band-major dense storage for assembly: row i holds columns i-p..i+p.
struct Band {
  std::int64_t n, p;
  VecX a;
  Band(std::int64_t n_, std::int64_t p_, mpfr_prec_t prec)
      : n(n_), p(p_), a(vecx(n_ * (2 * p_ + 1), prec)) {}
  ExtFloat& at(std::int64_t i, std::int64_t j) {
    return a[static_cast<std::size_t>(i * (2 * p + 1) + (j - i + p))];
  }
  const ExtFloat& at(std::int64_t i, std::int64_t j) const {
    return a[static_cast<std::size_t>(i * (2 * p + 1) + (j - i + p))];
  }
};

CsrExt band_to_csr_interior(const Band& band, std::int64_t off, std::int64_t n_i,
                            mpfr_prec_t prec) {
  CsrExt m;
  m.rows = m.cols = n_i;
  m.rowptr.assign(1, 0);
  for (std::int64_t i = 0; i < n_i; ++i) {
    std::int64_t gi = i + off;
    for (std::int64_t gj = std::max<std::int64_t>(0, gi - band.p);
         gj <= std::min(band.n - 1, gi + band.p); ++gj) {
      std::int64_t j = gj - off;
      if (j < 0 || j >= n_i) continue;
      const ExtFloat& v = band.at(gi, gj);
      if (v.is_zero()) continue;
      m.col.push_back(j);
      m.val.push_back(v);
    }
    m.rowptr.push_back(static_cast<std::int64_t>(m.col.size()));
  }
  (void)prec;
  return m;
}

}  // namespace

void ProblemSpec::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("ProblemSpec: dim must be 1 or 2");
  if (level < 1) throw std::invalid_argument("ProblemSpec: level must be >= 1");
  if (pde == Pde::biharmonic) {
    if (dim != 1) throw std::invalid_argument("ProblemSpec: biharmonic is 1d only");
    if (degree < 3) throw std::invalid_argument("ProblemSpec: biharmonic needs degree >= 3");
  } else if (degree < 1) {
    throw std::invalid_argument("ProblemSpec: poisson needs degree >= 1");
  }
  if (interior_count_1d(*this) < 1)
    throw std::invalid_argument("ProblemSpec: no interior basis functions at this level");
}

std::string ProblemSpec::name() const {
  std::ostringstream os;
  os << (pde == Pde::poisson ? "poisson" : "biharmonic") << dim << "d_p" << degree << "_j"
     << level;
  return os.str();
}

std::int64_t interior_count_1d(const ProblemSpec& spec) {
  std::int64_t nb = pow2i(spec.level) + spec.degree;
  return nb - 2 * interior_offset(spec);
}

std::int64_t interior_offset(const ProblemSpec& spec) {
  return spec.pde == Pde::poisson ? 1 : 2;
}

std::int64_t unknown_count(const ProblemSpec& spec) {
  std::int64_t n1 = interior_count_1d(spec);
  return spec.dim == 1 ? n1 : n1 * n1;
}

Manufactured manufactured(const ProblemSpec& spec, mpfr_prec_t prec) {
  return Manufactured{spec.pde, spec.dim, prec};
}

namespace {
ExtFloat npi(long n, mpfr_prec_t prec) { return ExtFloat(n, prec) * ext_pi(prec); }
}  // namespace

ExtFloat Manufactured::u(const ExtFloat& x) const {
  if (pde == Pde::poisson) return ext_sin(npi(3, prec) * x);  // sin(3 pi x)
  ExtFloat s = ext_sin(ext_pi(prec) * x);                     // sin^2(pi x)
  return s * s;
}

ExtFloat Manufactured::f(const ExtFloat& x) const {
  if (pde == Pde::poisson) {
    ExtFloat c = npi(3, prec) * npi(3, prec);  // 9 pi^2
    return c * ext_sin(npi(3, prec) * x);
  }
  // u'''' = -8 pi^4 cos(2 pi x)
  ExtFloat p2 = ext_pi(prec) * ext_pi(prec);
  ExtFloat c = ExtFloat(-8, prec) * p2 * p2;
  return c * ext_cos(npi(2, prec) * x);
}

ExtFloat Manufactured::du(const ExtFloat& x) const {
  if (pde == Pde::poisson) return npi(3, prec) * ext_cos(npi(3, prec) * x);
  // u'' = 2 pi^2 cos(2 pi x)
  return ExtFloat(2, prec) * ext_pi(prec) * ext_pi(prec) * ext_cos(npi(2, prec) * x);
}

ExtFloat Manufactured::u2(const ExtFloat& x, const ExtFloat& y) const {
  return ext_sin(npi(2, prec) * x) * ext_sin(npi(3, prec) * y);
}

ExtFloat Manufactured::f2(const ExtFloat& x, const ExtFloat& y) const {
  ExtFloat c = ExtFloat(13, prec) * ext_pi(prec) * ext_pi(prec);
  return c * u2(x, y);
}

ExtFloat Manufactured::dux(const ExtFloat& x, const ExtFloat& y) const {
  return npi(2, prec) * ext_cos(npi(2, prec) * x) * ext_sin(npi(3, prec) * y);
}

ExtFloat Manufactured::duy(const ExtFloat& x, const ExtFloat& y) const {
  return npi(3, prec) * ext_sin(npi(2, prec) * x) * ext_cos(npi(3, prec) * y);
}

std::pair<VecX, VecX> gauss_legendre(int nq, mpfr_prec_t prec) {
  if (nq < 1) throw std::invalid_argument("gauss_legendre: nq must be >= 1");
  VecX nodes = vecx(nq, prec), weights = vecx(nq, prec);
  const ExtFloat one(1, prec), two(2, prec);
  ExtFloat pi = ext_pi(prec);
  for (int i = 0; i < nq; ++i) {
    // Standard initial guess for the i-th root (descending order).
    ExtFloat x(std::cos(M_PI * (i + 0.75) / (nq + 0.5)), prec);
    ExtFloat pn(prec), pn1(prec), dp(prec);
    for (int it = 0; it < 200; ++it) {
      // Evaluate P_nq and P_{nq-1} by recurrence.
      ExtFloat p0(1, prec), p1 = x;
      if (nq == 1) {
        pn = x;
        pn1 = p0;
      } else {
        for (int k = 1; k < nq; ++k) {
          ExtFloat p2 = (ExtFloat(2 * k + 1, prec) * x * p1 - ExtFloat(k, prec) * p0) /
                        ExtFloat(k + 1, prec);
          p0 = p1;
          p1 = p2;
        }
        pn = p1;
        pn1 = p0;
      }
      dp = ExtFloat(nq, prec) * (x * pn - pn1) / (x * x - one);
      ExtFloat dx = pn / dp;
      x -= dx;
      if (ext_abs(dx) <= ext_scale2(ext_max(ext_abs(x), ExtFloat(1e-3, prec)), 4 - prec)) break;
    }
    // Final derivative at the converged node for the weight.
    ExtFloat p0(1, prec), p1 = x;
    for (int k = 1; k < nq; ++k) {
      ExtFloat p2 =
          (ExtFloat(2 * k + 1, prec) * x * p1 - ExtFloat(k, prec) * p0) / ExtFloat(k + 1, prec);
      p0 = p1;
      p1 = p2;
    }
    pn1 = nq == 1 ? ExtFloat(1, prec) : p0;
    pn = nq == 1 ? x : p1;
    dp = ExtFloat(nq, prec) * (x * pn - pn1) / (x * x - one);
    nodes[static_cast<std::size_t>(nq - 1 - i)] = x;  // ascending order
    weights[static_cast<std::size_t>(nq - 1 - i)] = two / ((one - x * x) * dp * dp);
  }
  (void)pi;
  return {std::move(nodes), std::move(weights)};
}

VecX bspline_knots(int degree, int level, mpfr_prec_t prec) {
  std::int64_t nel = pow2i(level);
  VecX knots;
  knots.reserve(static_cast<std::size_t>(nel + 2 * degree + 1));
  for (int i = 0; i <= degree; ++i) knots.push_back(ExtFloat(0, prec));
  for (std::int64_t i = 1; i < nel; ++i)
    knots.push_back(ext_scale2(ExtFloat(static_cast<long>(i), prec), -level));
  for (int i = 0; i <= degree; ++i) knots.push_back(ExtFloat(1, prec));
  return knots;
}

std::int64_t bspline_find_span(const VecX& knots, int degree, const ExtFloat& x) {
  std::int64_t nmax = static_cast<std::int64_t>(knots.size()) - degree - 2;  // last span
  if (x >= knots[static_cast<std::size_t>(nmax + 1)]) return nmax;
  std::int64_t lo = degree, hi = nmax + 1;
  while (hi - lo > 1) {
    std::int64_t mid = (lo + hi) / 2;
    if (x < knots[static_cast<std::size_t>(mid)])
      hi = mid;
    else
      lo = mid;
  }
  return lo;
}

std::vector<VecX> bspline_ders(const VecX& knots, int degree, std::int64_t span,
                               const ExtFloat& x, int nders) {
  const int p = degree;
  const mpfr_prec_t prec = x.prec();
  auto idx = [&](std::int64_t i) { return knots[static_cast<std::size_t>(i)]; };

  std::vector<VecX> ndu(static_cast<std::size_t>(p + 1), vecx(p + 1, prec));
  VecX left = vecx(p + 1, prec), right = vecx(p + 1, prec);
  ndu[0][0] = ExtFloat(1, prec);
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - idx(span + 1 - j);
    right[static_cast<std::size_t>(j)] = idx(span + j) - x;
    ExtFloat saved(prec);
    for (int r = 0; r < j; ++r) {
      ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)] =
          right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      ExtFloat temp = ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(j - 1)] /
                      ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(r)];
      ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] =
          saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = saved;
  }

  std::vector<VecX> ders(static_cast<std::size_t>(nders + 1), vecx(p + 1, prec));
  for (int j = 0; j <= p; ++j)
    ders[0][static_cast<std::size_t>(j)] =
        ndu[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)];

  std::vector<VecX> a(2, vecx(p + 1, prec));
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0] = vecx(p + 1, prec);
    a[1] = vecx(p + 1, prec);
    a[0][0] = ExtFloat(1, prec);
    for (int k = 1; k <= nders; ++k) {
      ExtFloat d(prec);
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[static_cast<std::size_t>(s2)][0] =
            a[static_cast<std::size_t>(s1)][0] /
            ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(rk)];
        d = a[static_cast<std::size_t>(s2)][0] *
            ndu[static_cast<std::size_t>(rk)][static_cast<std::size_t>(pk)];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = r - 1 <= pk ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(j)] =
            (a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(j)] -
             a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(j - 1)]) /
            ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(rk + j)];
        d += a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(j)] *
             ndu[static_cast<std::size_t>(rk + j)][static_cast<std::size_t>(pk)];
      }
      if (r <= pk) {
        a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(k)] =
            -a[static_cast<std::size_t>(s1)][static_cast<std::size_t>(k - 1)] /
            ndu[static_cast<std::size_t>(pk + 1)][static_cast<std::size_t>(r)];
        d += a[static_cast<std::size_t>(s2)][static_cast<std::size_t>(k)] *
             ndu[static_cast<std::size_t>(r)][static_cast<std::size_t>(pk)];
      }
      ders[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = d;
      std::swap(s1, s2);
    }
  }
  long rf = p;
  for (int k = 1; k <= nders; ++k) {
    for (int j = 0; j <= p; ++j)
      ders[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *= ExtFloat(rf, prec);
    rf *= (p - k);
  }
  return ders;
}

namespace {

// Per-element quadrature data reused across assembly and error evaluation.
struct ElementRule {
  VecX nodes01;  // element-local points mapped per element: x = (el + n01) * h
  VecX weights;  // reference weights on [-1,1]
  explicit ElementRule(int nq, mpfr_prec_t prec) {
    auto [gn, gw] = gauss_legendre(nq, prec);
    weights = std::move(gw);
    nodes01 = std::move(gn);
    const ExtFloat half(0.5, prec), one(1, prec);
    for (auto& v : nodes01) v = (v + one) * half;
  }
};

struct Basis1d {
  VecX knots;
  int p;
  int level;
  std::int64_t n_el;
  std::int64_t n_b;
  Basis1d(int degree, int lvl, mpfr_prec_t prec)
      : knots(bspline_knots(degree, lvl, prec)), p(degree), level(lvl), n_el(pow2i(lvl)),
        n_b(pow2i(lvl) + degree) {}
};

// 1D assembly of the order-2m stiffness, mass, and a load against g(x).
struct Assembly1dOut {
  Band stiff;
  Band mass;
  VecX load;
};

template <class F>
Assembly1dOut assemble_1d_full(int degree, int level, int m_order, mpfr_prec_t prec, F&& f_rhs) {
  Basis1d basis(degree, level, prec);
  ElementRule rule(degree + 1, prec);
  Assembly1dOut out{Band(basis.n_b, degree, prec), Band(basis.n_b, degree, prec),
                    vecx(basis.n_b, prec)};
  const ExtFloat h = ext_scale2(ExtFloat(1, prec), -level);
  const ExtFloat jac = ext_scale2(h, -1);  // h/2
  for (std::int64_t el = 0; el < basis.n_el; ++el) {
    const std::int64_t span = degree + el;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      ExtFloat xq = (ExtFloat(static_cast<long>(el), prec) + rule.nodes01[q]) * h;
      auto ders = bspline_ders(basis.knots, degree, span, xq, m_order);
      ExtFloat wj = rule.weights[q] * jac;
      ExtFloat fq = f_rhs(xq) * wj;
      for (int a = 0; a <= degree; ++a) {
        std::int64_t ga = span - degree + a;
        fma_acc(out.load[static_cast<std::size_t>(ga)], fq, ders[0][static_cast<std::size_t>(a)]);
        for (int b = a; b <= degree; ++b) {
          std::int64_t gb = span - degree + b;
          ExtFloat sv = wj * ders[static_cast<std::size_t>(m_order)][static_cast<std::size_t>(a)] *
                        ders[static_cast<std::size_t>(m_order)][static_cast<std::size_t>(b)];
          ExtFloat mv = wj * ders[0][static_cast<std::size_t>(a)] * ders[0][static_cast<std::size_t>(b)];
          out.stiff.at(ga, gb) += sv;
          out.mass.at(ga, gb) += mv;
          if (a != b) {
            out.stiff.at(gb, ga) += sv;
            out.mass.at(gb, ga) += mv;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

Assembled1d assemble_1d_interior(const ProblemSpec& spec, mpfr_prec_t prec) {
  spec.validate();
  auto zero_rhs = [&](const ExtFloat&) { return ExtFloat(0, prec); };
  auto full = assemble_1d_full(spec.degree, spec.level, spec.order_m(), prec, zero_rhs);
  std::int64_t off = interior_offset(spec);
  std::int64_t n_i = interior_count_1d(spec);
  return {band_to_csr_interior(full.stiff, off, n_i, prec),
          band_to_csr_interior(full.mass, off, n_i, prec)};
}

CsrExt kron(const CsrExt& a, const CsrExt& b, mpfr_prec_t prec) {
  CsrExt r;
  r.rows = a.rows * b.rows;
  r.cols = a.cols * b.cols;
  r.rowptr.assign(1, 0);
  for (std::int64_t i1 = 0; i1 < a.rows; ++i1) {
    for (std::int64_t i2 = 0; i2 < b.rows; ++i2) {
      for (std::int64_t k1 = a.rowptr[static_cast<std::size_t>(i1)];
           k1 < a.rowptr[static_cast<std::size_t>(i1) + 1]; ++k1) {
        for (std::int64_t k2 = b.rowptr[static_cast<std::size_t>(i2)];
             k2 < b.rowptr[static_cast<std::size_t>(i2) + 1]; ++k2) {
          r.col.push_back(a.col[static_cast<std::size_t>(k1)] * b.cols +
                          b.col[static_cast<std::size_t>(k2)]);
          r.val.push_back(a.val[static_cast<std::size_t>(k1)] *
                          b.val[static_cast<std::size_t>(k2)]);
        }
      }
      r.rowptr.push_back(static_cast<std::int64_t>(r.col.size()));
    }
  }
  (void)prec;
  return r;
}

namespace {

CsrExt csr_add(const CsrExt& a, const CsrExt& b, mpfr_prec_t prec) {
  CsrExt r;
  r.rows = a.rows;
  r.cols = a.cols;
  r.rowptr.assign(1, 0);
  for (std::int64_t i = 0; i < a.rows; ++i) {
    std::int64_t ka = a.rowptr[static_cast<std::size_t>(i)];
    std::int64_t kb = b.rowptr[static_cast<std::size_t>(i)];
    const std::int64_t ea = a.rowptr[static_cast<std::size_t>(i) + 1];
    const std::int64_t eb = b.rowptr[static_cast<std::size_t>(i) + 1];
    while (ka < ea || kb < eb) {
      std::int64_t ca = ka < ea ? a.col[static_cast<std::size_t>(ka)] : INT64_MAX;
      std::int64_t cb = kb < eb ? b.col[static_cast<std::size_t>(kb)] : INT64_MAX;
      if (ca == cb) {
        r.col.push_back(ca);
        r.val.push_back(a.val[static_cast<std::size_t>(ka)] + b.val[static_cast<std::size_t>(kb)]);
        ++ka;
        ++kb;
      } else if (ca < cb) {
        r.col.push_back(ca);
        r.val.push_back(a.val[static_cast<std::size_t>(ka)]);
        ++ka;
      } else {
        r.col.push_back(cb);
        r.val.push_back(b.val[static_cast<std::size_t>(kb)]);
        ++kb;
      }
    }
    r.rowptr.push_back(static_cast<std::int64_t>(r.col.size()));
  }
  (void)prec;
  return r;
}

}  // namespace

CsrExt kron_sum(const CsrExt& a, const CsrExt& m, mpfr_prec_t prec) {
  return csr_add(kron(a, m, prec), kron(m, a, prec), prec);
}

Discretization assemble(const ProblemSpec& spec, mpfr_prec_t prec) {
  spec.validate();
  Manufactured mf = manufactured(spec, prec);
  if (spec.dim == 1) {
    auto rhs = [&](const ExtFloat& x) { return mf.f(x); };
    auto full = assemble_1d_full(spec.degree, spec.level, spec.order_m(), prec, rhs);
    std::int64_t off = interior_offset(spec);
    std::int64_t n_i = interior_count_1d(spec);
    Discretization d;
    d.a = band_to_csr_interior(full.stiff, off, n_i, prec);
    d.b = vecx(n_i, prec);
    for (std::int64_t i = 0; i < n_i; ++i)
      d.b[static_cast<std::size_t>(i)] = full.load[static_cast<std::size_t>(i + off)];
    return d;
  }
  // 2D: tensor-product construction. The bilinear form of -Laplace over the
  // tensor basis is A1 (x) M1 + M1 (x) A1, and the load of the separable rhs
  // f = 13 pi^2 sin(2 pi x) sin(3 pi y) is an outer product of 1D loads.
  auto sinx = [&](const ExtFloat& x) { return ext_sin(npi(2, prec) * x); };
  auto siny = [&](const ExtFloat& y) { return ext_sin(npi(3, prec) * y); };
  auto fx = assemble_1d_full(spec.degree, spec.level, 1, prec, sinx);
  auto fy = assemble_1d_full(spec.degree, spec.level, 1, prec, siny);
  std::int64_t off = interior_offset(spec);
  std::int64_t n_i = interior_count_1d(spec);
  CsrExt a1 = band_to_csr_interior(fx.stiff, off, n_i, prec);
  CsrExt m1 = band_to_csr_interior(fx.mass, off, n_i, prec);
  Discretization d;
  d.a = kron_sum(a1, m1, prec);
  d.b = vecx(n_i * n_i, prec);
  ExtFloat c = ExtFloat(13, prec) * ext_pi(prec) * ext_pi(prec);
  for (std::int64_t i1 = 0; i1 < n_i; ++i1) {
    ExtFloat cx = c * fx.load[static_cast<std::size_t>(i1 + off)];
    for (std::int64_t i2 = 0; i2 < n_i; ++i2)
      d.b[static_cast<std::size_t>(i1 * n_i + i2)] =
          cx * fy.load[static_cast<std::size_t>(i2 + off)];
  }
  return d;
}

CsrExt prolongation(const ProblemSpec& spec, int level, mpfr_prec_t prec) {
  if (level < 2) throw std::invalid_argument("prolongation: level must be >= 2");
  const int p = spec.degree;
  Basis1d coarse(p, level - 1, prec), fine(p, level, prec);
  // Oslo algorithm: P[i][j] = discrete B-spline b_{j,p}(i) on the nested knot
  // pair; row i is supported on coarse indices mu-p..mu.
  CsrExt full;
  full.rows = fine.n_b;
  full.cols = coarse.n_b;
  full.rowptr.assign(1, 0);
  const ExtFloat zero(0, prec);
  for (std::int64_t i = 0; i < fine.n_b; ++i) {
    const ExtFloat& taui = fine.knots[static_cast<std::size_t>(i)];
    std::int64_t mu = bspline_find_span(coarse.knots, p, taui);
    VecX b = vecx(p + 1, prec);
    b[static_cast<std::size_t>(p)] = ExtFloat(1, prec);
    for (int s = 1; s <= p; ++s) {
      const ExtFloat& tau_is = fine.knots[static_cast<std::size_t>(i + s)];
      for (int k = p - s; k <= p; ++k) {
        std::int64_t j = mu - p + k;
        ExtFloat acc(prec);
        // left weight times b_{j,s-1}
        if (!b[static_cast<std::size_t>(k)].is_zero()) {
          ExtFloat den = coarse.knots[static_cast<std::size_t>(j + s)] -
                         coarse.knots[static_cast<std::size_t>(j)];
          if (!den.is_zero())
            acc += (tau_is - coarse.knots[static_cast<std::size_t>(j)]) / den *
                   b[static_cast<std::size_t>(k)];
        }
        // right weight times b_{j+1,s-1}
        if (k + 1 <= p && !b[static_cast<std::size_t>(k + 1)].is_zero()) {
          ExtFloat den = coarse.knots[static_cast<std::size_t>(j + s + 1)] -
                         coarse.knots[static_cast<std::size_t>(j + 1)];
          if (!den.is_zero())
            acc += (coarse.knots[static_cast<std::size_t>(j + s + 1)] - tau_is) / den *
                   b[static_cast<std::size_t>(k + 1)];
        }
        b[static_cast<std::size_t>(k)] = acc;
      }
    }
    for (int k = 0; k <= p; ++k) {
      std::int64_t j = mu - p + k;
      if (j < 0 || j >= coarse.n_b) continue;
      if (b[static_cast<std::size_t>(k)].is_zero()) continue;
      full.col.push_back(j);
      full.val.push_back(b[static_cast<std::size_t>(k)]);
    }
    full.rowptr.push_back(static_cast<std::int64_t>(full.col.size()));
  }
  (void)zero;
  // Interior slice.
  ProblemSpec coarse_spec = spec;
  coarse_spec.level = level - 1;
  ProblemSpec fine_spec = spec;
  fine_spec.level = level;
  std::int64_t off = interior_offset(spec);
  std::int64_t nc = interior_count_1d(coarse_spec);
  std::int64_t nf = interior_count_1d(fine_spec);
  CsrExt p1;
  p1.rows = nf;
  p1.cols = nc;
  p1.rowptr.assign(1, 0);
  for (std::int64_t i = 0; i < nf; ++i) {
    std::int64_t gi = i + off;
    for (std::int64_t k = full.rowptr[static_cast<std::size_t>(gi)];
         k < full.rowptr[static_cast<std::size_t>(gi) + 1]; ++k) {
      std::int64_t j = full.col[static_cast<std::size_t>(k)] - off;
      if (j < 0 || j >= nc) continue;
      p1.col.push_back(j);
      p1.val.push_back(full.val[static_cast<std::size_t>(k)]);
    }
    p1.rowptr.push_back(static_cast<std::int64_t>(p1.col.size()));
  }
  if (spec.dim == 1) return p1;
  return kron(p1, p1, prec);
}

namespace {

// Spline value of the interior-coefficient expansion at a point: coefficients
// of the removed boundary functions are zero.
struct SplineEval {
  const Basis1d& basis;
  std::int64_t off;

  template <class Coef>
  ExtFloat eval(const Coef& c, std::int64_t span, const std::vector<VecX>& ders, int der) const {
    ExtFloat s(ders[0][0].prec());
    for (int a = 0; a <= basis.p; ++a) {
      std::int64_t g = span - basis.p + a - off;
      if (g < 0 || g >= static_cast<std::int64_t>(c.size())) continue;
      fma_acc(s, c[static_cast<std::size_t>(g)],
              ders[static_cast<std::size_t>(der)][static_cast<std::size_t>(a)]);
    }
    return s;
  }
};

}  // namespace

ExtFloat energy_error(const VecX& coeffs, const ProblemSpec& spec, mpfr_prec_t prec) {
  spec.validate();
  if (static_cast<std::int64_t>(coeffs.size()) != unknown_count(spec))
    throw std::invalid_argument("energy_error: coefficient count mismatch");
  Manufactured mf = manufactured(spec, prec);
  const int p = spec.degree;
  const int m = spec.order_m();
  Basis1d basis(p, spec.level, prec);
  ElementRule rule(p + 3, prec);
  const std::size_t nq = rule.weights.size();
  const ExtFloat h = ext_scale2(ExtFloat(1, prec), -spec.level);
  const ExtFloat jac = ext_scale2(h, -1);
  SplineEval se{basis, interior_offset(spec)};
  ExtFloat total(prec);

  if (spec.dim == 1) {
    for (std::int64_t el = 0; el < basis.n_el; ++el) {
      const std::int64_t span = p + el;
      for (std::size_t q = 0; q < nq; ++q) {
        ExtFloat xq = (ExtFloat(static_cast<long>(el), prec) + rule.nodes01[q]) * h;
        auto ders = bspline_ders(basis.knots, p, span, xq, m);
        ExtFloat diff = mf.du(xq) - se.eval(coeffs, span, ders, m);
        ExtFloat wq = rule.weights[q] * jac;
        fma_acc(total, wq, diff * diff);
      }
    }
    return ext_sqrt(total);
  }

  // 2D: cache per-direction basis data and trig factors at the 1D points.
  const std::int64_t n_i = interior_count_1d(spec);
  const std::int64_t off = interior_offset(spec);
  struct PointData {
    ExtFloat x;
    VecX val, der;
    ExtFloat s2, c2, s3, c3;  // sin/cos factors of the manufactured solution
  };
  std::vector<PointData> pts;
  pts.reserve(static_cast<std::size_t>(basis.n_el) * nq);
  for (std::int64_t el = 0; el < basis.n_el; ++el) {
    const std::int64_t span = p + el;
    for (std::size_t q = 0; q < nq; ++q) {
      PointData pd{(ExtFloat(static_cast<long>(el), prec) + rule.nodes01[q]) * h, {}, {}, ExtFloat(prec), ExtFloat(prec), ExtFloat(prec), ExtFloat(prec)};
      auto ders = bspline_ders(basis.knots, p, span, pd.x, 1);
      pd.val = ders[0];
      pd.der = ders[1];
      pd.s2 = ext_sin(npi(2, prec) * pd.x);
      pd.c2 = ext_cos(npi(2, prec) * pd.x);
      pd.s3 = ext_sin(npi(3, prec) * pd.x);
      pd.c3 = ext_cos(npi(3, prec) * pd.x);
      pts.push_back(std::move(pd));
    }
  }
  const ExtFloat pi2 = npi(2, prec), pi3 = npi(3, prec);
  VecX colc = vecx(p + 1, prec);
  for (std::int64_t ex = 0; ex < basis.n_el; ++ex) {
    for (std::size_t qx = 0; qx < nq; ++qx) {
      const PointData& px = pts[static_cast<std::size_t>(ex) * nq + qx];
      const std::int64_t spanx = p + ex;
      for (std::int64_t ey = 0; ey < basis.n_el; ++ey) {
        for (std::size_t qy = 0; qy < nq; ++qy) {
          const PointData& py = pts[static_cast<std::size_t>(ey) * nq + qy];
          const std::int64_t spany = p + ey;
          // u_h gradient from the tensor expansion.
          ExtFloat uhx(prec), uhy(prec);
          for (int a = 0; a <= p; ++a) {
            std::int64_t gx = spanx - p + a - off;
            if (gx < 0 || gx >= n_i) continue;
            ExtFloat sx_val(prec), sx_der(prec);
            for (int b = 0; b <= p; ++b) {
              std::int64_t gy = spany - p + b - off;
              if (gy < 0 || gy >= n_i) continue;
              const ExtFloat& c = coeffs[static_cast<std::size_t>(gx * n_i + gy)];
              fma_acc(sx_val, c, py.val[static_cast<std::size_t>(b)]);
              fma_acc(sx_der, c, py.der[static_cast<std::size_t>(b)]);
            }
            fma_acc(uhx, sx_val, px.der[static_cast<std::size_t>(a)]);
            fma_acc(uhy, sx_der, px.val[static_cast<std::size_t>(a)]);
          }
          ExtFloat dux = pi2 * px.c2 * py.s3 - uhx;
          ExtFloat duy = pi3 * px.s2 * py.c3 - uhy;
          ExtFloat w2 = rule.weights[qx] * rule.weights[qy] * jac * jac;
          fma_acc(total, w2, dux * dux + duy * duy);
        }
      }
    }
  }
  (void)colc;
  return ext_sqrt(total);
}

ExtFloat energy_norm_of_u(const ProblemSpec& spec, mpfr_prec_t prec) {
  return energy_error(vecx(unknown_count(spec), prec), spec, prec);
}

VecX reference_solve(const Discretization& d, mpfr_prec_t prec) {
  if (d.a.rows <= 10000) {
    BandedCholesky chol(d.a, prec);
    VecX x = d.b;
    chol.solve(x);
    return x;
  }
  ExtFloat tol = ext_scale2(inf_norm(d.b), -200);
  return cg_solve(d.a, d.b, tol, 500000, prec);
}

CsrExt poisson2d_p1_grid(std::int64_t n, mpfr_prec_t prec) {
  // Closed-form linear-element matrices on a uniform grid, h = 1/(n+1):
  // A1 = (1/h) tridiag(-1, 2, -1), M1 = (h/6) tridiag(1, 4, 1).
  ExtFloat h = ExtFloat(1, prec) / ExtFloat(static_cast<long>(n + 1), prec);
  ExtFloat inv_h = ExtFloat(1, prec) / h;
  ExtFloat h6 = h / ExtFloat(6, prec);
  CsrExt a1, m1;
  a1.rows = a1.cols = m1.rows = m1.cols = n;
  a1.rowptr.assign(1, 0);
  m1.rowptr.assign(1, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = std::max<std::int64_t>(0, i - 1); j <= std::min(n - 1, i + 1); ++j) {
      a1.col.push_back(j);
      m1.col.push_back(j);
      if (i == j) {
        a1.val.push_back(ExtFloat(2, prec) * inv_h);
        m1.val.push_back(ExtFloat(4, prec) * h6);
      } else {
        a1.val.push_back(-inv_h);
        m1.val.push_back(h6);
      }
    }
    a1.rowptr.push_back(static_cast<std::int64_t>(a1.col.size()));
    m1.rowptr.push_back(static_cast<std::int64_t>(m1.col.size()));
  }
  return kron_sum(a1, m1, prec);
}

std::string write_coo(const CsrExt& a, int digits) {
  std::ostringstream os;
  os << "# " << a.rows << ' ' << a.cols << '\n';
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t k = a.rowptr[static_cast<std::size_t>(i)];
         k < a.rowptr[static_cast<std::size_t>(i) + 1]; ++k)
      os << i << ' ' << a.col[static_cast<std::size_t>(k)] << ' '
         << a.val[static_cast<std::size_t>(k)].str(digits) << '\n';
  return os.str();
}

std::string write_coo_vec(const VecX& v, int digits) {
  std::ostringstream os;
  os << "# " << v.size() << " 1\n";
  for (std::size_t i = 0; i < v.size(); ++i) os << i << " 0 " << v[i].str(digits) << '\n';
  return os.str();
}

}  // namespace bfpmg
