#include "bfpmg/bfp.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace bfpmg {

namespace {

void check_fits(const std::vector<mpz_class>& m, std::int64_t q) {
  for (const auto& v : m)
    if (!fits_width(v, q)) throw std::domain_error("BfpBlock: mantissa does not fit T_q");
}

// Largest msb over the block's mantissas, or 0 if all zero.
std::int64_t max_msb(const std::vector<mpz_class>& m) {
  std::int64_t mu = 0;
  for (const auto& v : m)
    if (mpz_sgn(v.get_mpz_t()) != 0) mu = std::max(mu, msb(v));
  return mu;
}

}  // namespace

BfpBlock BfpBlock::scalar(const WideInt& m, std::int64_t e) {
  return scalar_raw(m.value(), m.width(), e);
}

BfpBlock BfpBlock::scalar_raw(mpz_class m, std::int64_t q, std::int64_t e) {
  BfpBlock b;
  if (!fits_width(m, q)) throw std::domain_error("BfpBlock: mantissa does not fit T_q");
  b.q_ = q;
  b.e_ = e;
  b.layout_ = Layout::scalar;
  b.rows_ = b.cols_ = 1;
  b.m_.assign(1, std::move(m));
  return b;
}

BfpBlock BfpBlock::vec(std::vector<mpz_class> m, std::int64_t q, std::int64_t e) {
  check_fits(m, q);
  BfpBlock b;
  b.q_ = q;
  b.e_ = e;
  b.layout_ = Layout::vector;
  b.rows_ = static_cast<std::int64_t>(m.size());
  b.cols_ = 1;
  b.m_ = std::move(m);
  return b;
}

BfpBlock BfpBlock::zero_vec(std::int64_t n, std::int64_t q) {
  return vec(std::vector<mpz_class>(static_cast<std::size_t>(n)), q, 0);
}

BfpBlock BfpBlock::dense(std::vector<mpz_class> m, std::int64_t rows, std::int64_t cols,
                         std::int64_t q, std::int64_t e) {
  if (static_cast<std::int64_t>(m.size()) != rows * cols)
    throw std::invalid_argument("BfpBlock::dense: size mismatch");
  check_fits(m, q);
  BfpBlock b;
  b.q_ = q;
  b.e_ = e;
  b.layout_ = Layout::matrix;
  b.rows_ = rows;
  b.cols_ = cols;
  b.m_ = std::move(m);
  return b;
}

mpq_class BfpBlock::rational(std::size_t i) const {
  if (e_ >= 0) return mpq_class(m_[i] << static_cast<unsigned long>(e_));
  mpq_class r(m_[i], mpz_class(1) << static_cast<unsigned long>(-e_));
  r.canonicalize();
  return r;
}

bool BfpBlock::is_zero() const {
  for (const auto& v : m_)
    if (mpz_sgn(v.get_mpz_t()) != 0) return false;
  return true;
}

bool BfpBlock::is_normalized() const {
  if (is_zero()) return true;
  return max_msb(m_) == q_;
}

BfpBlock BfpBlock::with_width(std::int64_t w) const {
  BfpBlock b = *this;
  check_fits(b.m_, w);
  b.q_ = w;
  return b;
}

BfpBlock normalize(const BfpBlock& x) {
  BfpBlock b = x;
  if (x.is_zero()) {
    b.e_ = 0;
    return b;
  }
  std::int64_t shift = x.q_ - max_msb(x.m_);  // >= 0: mantissas widen in place
  if (shift == 0) return b;
  for (auto& v : b.m_) detail::shift_floor(v, -shift);
  b.e_ -= shift;
  return b;
}

BfpBlock quantize(const BfpBlock& x, std::int64_t w) {
  if (w < 1) throw std::invalid_argument("quantize: width must be >= 1");
  BfpBlock b = x;
  b.q_ = w;
  if (x.is_zero()) {
    b.e_ = 0;
    return b;
  }
  std::int64_t s = max_msb(x.m_) - w;
  for (auto& v : b.m_) detail::shift_floor(v, s);
  b.e_ += s;
  return b;
}

BfpScalar inf_norm_upper(const BfpBlock& x, std::int64_t q_gamma) {
  if (q_gamma < 2) throw std::invalid_argument("inf_norm_upper: q_gamma must be >= 2");
  mpz_class mx = 0;
  for (const auto& v : x.mantissas()) {
    mpz_class a = abs(v);
    if (a > mx) mx = a;
  }
  if (mx == 0) {
    // gamma must stay > 0: report one quantum of the block.
    return BfpBlock::scalar_raw(mpz_class(1) << static_cast<unsigned long>(q_gamma - 2),
                                q_gamma, x.e() - (q_gamma - 2));
  }
  std::int64_t s = msb(mx) - q_gamma;
  mpz_class m;
  if (s <= 0) {
    m = mx << static_cast<unsigned long>(-s);
  } else {
    mpz_cdiv_q_2exp(m.get_mpz_t(), mx.get_mpz_t(), static_cast<mp_bitcnt_t>(s));
    if (msb(m) > q_gamma) {  // ceil spilled into the next binade
      m >>= 1;
      ++s;
    }
  }
  return BfpBlock::scalar_raw(std::move(m), q_gamma, x.e() + s);
}

mpq_class epsilon_of(std::int64_t q) {
  if (q < 1) throw std::invalid_argument("epsilon_of: q must be >= 1");
  if (q == 1) return mpq_class(1);
  return mpq_class(1, mpz_class(1) << static_cast<unsigned long>(q - 1));
}

std::vector<mpq_class> to_rational(const BfpBlock& x) {
  std::vector<mpq_class> r;
  r.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.push_back(x.rational(i));
  return r;
}

BfpBlock quantize_exact(std::span<const mpz_class> z, std::span<const std::int64_t> k,
                        std::int64_t w, Layout layout, std::int64_t rows, std::int64_t cols) {
  if (z.size() != k.size()) throw std::invalid_argument("quantize_exact: size mismatch");
  std::int64_t top = INT64_MIN;  // max over entries of msb position in value space
  for (std::size_t i = 0; i < z.size(); ++i)
    if (mpz_sgn(z[i].get_mpz_t()) != 0) top = std::max(top, msb(z[i]) + k[i]);
  std::vector<mpz_class> m(z.size());
  std::int64_t e_out = 0;
  if (top != INT64_MIN) {
    e_out = top - w;
    for (std::size_t i = 0; i < z.size(); ++i) {
      m[i] = z[i];
      detail::shift_floor(m[i], e_out - k[i]);
    }
  }
  switch (layout) {
    case Layout::scalar:
      return BfpBlock::scalar_raw(std::move(m[0]), w, e_out);
    case Layout::vector:
      return BfpBlock::vec(std::move(m), w, e_out);
    case Layout::matrix:
      return BfpBlock::dense(std::move(m), rows, cols, w, e_out);
  }
  throw std::logic_error("quantize_exact: bad layout");
}

BfpBlock from_extfloat(std::span<const ExtFloat> v, std::int64_t w) {
  std::vector<mpz_class> z(v.size());
  std::vector<std::int64_t> k(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i].to_mpz_2exp(z[i], k[i]);
  return quantize_exact(z, k, w, Layout::vector, static_cast<std::int64_t>(v.size()), 1);
}

BfpBlock from_rationals(std::span<const mpq_class> v, std::int64_t w) {
  // Scale every entry to a common power of two so values become exact
  // integers; denominators of BFP-representable inputs are powers of two, and
  // general rationals only need enough scaled bits to survive the final floor
  // at w bits, so we widen via ExtFloat with generous precision.
  std::vector<ExtFloat> f;
  f.reserve(v.size());
  for (const auto& q : v) f.push_back(ExtFloat::from_mpq(q, 512 + 4 * w));
  return from_extfloat(f, w);
}

ExtFloat to_extfloat(const BfpBlock& x, std::size_t i, mpfr_prec_t prec) {
  return ExtFloat::from_mpz_2exp(x.mant(i), x.e(), prec);
}

std::vector<ExtFloat> to_extfloat_vec(const BfpBlock& x, mpfr_prec_t prec) {
  std::vector<ExtFloat> r;
  r.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.push_back(to_extfloat(x, i, prec));
  return r;
}

BfpCsr::BfpCsr(std::int64_t rows, std::int64_t cols, std::vector<std::int64_t> rowptr,
               std::vector<std::int64_t> col, std::vector<mpz_class> m, std::int64_t q,
               std::int64_t e)
    : q_(q), e_(e), rows_(rows), cols_(cols), rowptr_(std::move(rowptr)), col_(std::move(col)),
      m_(std::move(m)), max_row_nnz_(0) {
  if (rowptr_.size() != static_cast<std::size_t>(rows_) + 1 || col_.size() != m_.size())
    throw std::invalid_argument("BfpCsr: inconsistent structure");
  check_fits(m_, q_);
  for (std::int64_t i = 0; i < rows_; ++i)
    max_row_nnz_ = std::max(max_row_nnz_, rowptr_[i + 1] - rowptr_[i]);
}

std::string dump_block(const BfpBlock& x) {
  std::ostringstream os;
  os << x.q() << ' ' << x.e() << ' ';
  switch (x.layout()) {
    case Layout::scalar: os << "scalar"; break;
    case Layout::vector: os << x.rows(); break;
    case Layout::matrix: os << x.rows() << 'x' << x.cols(); break;
  }
  os << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) os << x.mant(i) << '\n';
  return os.str();
}

BfpBlock parse_block(const std::string& text) {
  std::istringstream is(text);
  std::int64_t q, e;
  std::string d;
  if (!(is >> q >> e >> d)) throw std::invalid_argument("parse_block: bad header");
  std::int64_t rows = 1, cols = 1;
  Layout layout = Layout::scalar;
  if (d != "scalar") {
    auto xpos = d.find('x');
    if (xpos == std::string::npos) {
      layout = Layout::vector;
      rows = std::stoll(d);
    } else {
      layout = Layout::matrix;
      rows = std::stoll(d.substr(0, xpos));
      cols = std::stoll(d.substr(xpos + 1));
    }
  }
  std::vector<mpz_class> m;
  m.reserve(static_cast<std::size_t>(rows * cols));
  std::string tok;
  while (is >> tok) m.emplace_back(tok);
  if (static_cast<std::int64_t>(m.size()) != rows * cols)
    throw std::invalid_argument("parse_block: entry count mismatch");
  switch (layout) {
    case Layout::scalar: return BfpBlock::scalar_raw(std::move(m[0]), q, e);
    case Layout::vector: return BfpBlock::vec(std::move(m), q, e);
    default: return BfpBlock::dense(std::move(m), rows, cols, q, e);
  }
}

mpq_class inf_norm_exact(const BfpBlock& x) {
  mpz_class mx = 0;
  for (const auto& v : x.mantissas()) {
    mpz_class a = abs(v);
    if (a > mx) mx = a;
  }
  if (x.e() >= 0) return mpq_class(mx << static_cast<unsigned long>(x.e()));
  mpq_class r(mx, mpz_class(1) << static_cast<unsigned long>(-x.e()));
  r.canonicalize();
  return r;
}

}  // namespace bfpmg
