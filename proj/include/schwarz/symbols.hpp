#ifndef SCHWARZ_SYMBOLS_HPP
#define SCHWARZ_SYMBOLS_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace schwarz {

using cplx = std::complex<double>;

/** Exact pole (vanishing denominator) in a symbol or convergence factor. */
struct PoleError : std::runtime_error {
  explicit PoleError(const std::string& what) : std::runtime_error(what) {}
};

/** An iterative kernel (root finder, optimizer, power iteration) gave up. */
struct ConvergenceError : std::runtime_error {
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/** Invalid or inconsistent configuration (bad keys, empty sets, short fits). */
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/**
 * Principal square root with the cut on (-inf, 0): Re >= 0 everywhere,
 * and on the cut the value lies on the positive imaginary semi-axis.
 * Every square root in the library goes through here.
 */
inline cplx sqrt_branch(cplx z) {
  if (z.imag() == 0.0) z = cplx(z.real(), +0.0);
  return std::sqrt(z);
}

/**
 * Homogeneous medium on the unit strip: eta > 0 is the screened Laplacian
 * (eta - Delta), eta < 0 the Helmholtz operator with eta = -omega^2.
 */
struct Medium {
  double eta = 1.0;

  bool wave() const { return eta < 0.0; }
  double omega() const { return std::sqrt(-eta); }
};

/// Half-plane DtN symbol s(k) = sqrt(k^2 + eta).
inline cplx dtn_unbounded(cplx k, const Medium& m) {
  return sqrt_branch(k * k + m.eta);
}

enum class Termination { Dirichlet, Neumann };

/** Perfectly matched layer: width D, strength gamma, far-end termination. */
struct PmlSpec {
  double D = 0.1;
  double gamma = 1.0;
  Termination termination = Termination::Dirichlet;
};

/**
 * Boundary operator in first-order form -+ q d/dx + p (minus at a left
 * boundary, plus at a right boundary, i.e. q multiplies the outward normal
 * derivative). Dirichlet is (0, 1), Neumann (1, 0), Robin (1, p).
 */
struct QP {
  cplx q{1.0, 0.0};
  cplx p{0.0, 0.0};
};

enum class Side { Left, Right };

/// DtN symbol of the truncated exterior piece between the interface at
/// interface_pos and the outer boundary of the unit domain carrying `outer`.
/// side says which side of the subdomain the interface is on (side == Right
/// means the exterior extends to the right, up to x = 1).
cplx dtn_bounded(cplx k, const Medium& m, Side side, double interface_pos,
                 QP outer);

/// DtN symbol of a PML of width D appended at the interface.
cplx pml_dtn(cplx xi, const Medium& m, const PmlSpec& pml);

/// R = (sigma - s)/(sigma + s): amplitude reflected by the transmission
/// symbol sigma relative to the transparent symbol s(k).
cplx reflection_coefficient(cplx sigma, cplx k, const Medium& m);

enum class SymbolKind {
  Dirichlet,
  Neumann,
  Robin,
  Taylor0,
  DtNUnbounded,
  DtNBounded,
  Pml
};

/**
 * A transmission or outer boundary symbol: evaluates to a (q, p) pair per
 * frequency. Frequency-independent kinds (Dirichlet/Neumann/Robin) ignore
 * their arguments; Taylor0 and Pml may carry their own eta (used by the
 * layered-media velocity policies), otherwise the ambient medium applies.
 */
class SymbolFn {
 public:
  static SymbolFn dirichlet() { return SymbolFn(SymbolKind::Dirichlet); }
  static SymbolFn neumann() { return SymbolFn(SymbolKind::Neumann); }
  static SymbolFn robin(cplx p) {
    SymbolFn f(SymbolKind::Robin);
    f.p_ = p;
    return f;
  }
  static SymbolFn taylor0() { return SymbolFn(SymbolKind::Taylor0); }
  static SymbolFn taylor0_of(double eta) {
    SymbolFn f(SymbolKind::Taylor0);
    f.eta_override_ = eta;
    f.has_override_ = true;
    return f;
  }
  static SymbolFn transparent() { return SymbolFn(SymbolKind::DtNUnbounded); }
  static SymbolFn dtn_bdd(Side side, double interface_pos, QP outer) {
    SymbolFn f(SymbolKind::DtNBounded);
    f.side_ = side;
    f.pos_ = interface_pos;
    f.outer_ = outer;
    return f;
  }
  static SymbolFn pml(const PmlSpec& spec) {
    SymbolFn f(SymbolKind::Pml);
    f.pml_ = spec;
    return f;
  }
  static SymbolFn pml_of(double eta, const PmlSpec& spec) {
    SymbolFn f = pml(spec);
    f.eta_override_ = eta;
    f.has_override_ = true;
    return f;
  }

  QP eval(cplx k, const Medium& m) const;

  SymbolKind kind() const { return kind_; }
  cplx robin_p() const { return p_; }
  const PmlSpec& pml_spec() const { return pml_; }
  std::string describe() const;

 private:
  explicit SymbolFn(SymbolKind kind) : kind_(kind) {}

  Medium effective(const Medium& m) const {
    return has_override_ ? Medium{eta_override_} : m;
  }

  SymbolKind kind_;
  cplx p_{0.0, 0.0};
  Side side_ = Side::Right;
  double pos_ = 0.5;
  QP outer_{};
  PmlSpec pml_{};
  double eta_override_ = 0.0;
  bool has_override_ = false;
};

}  // namespace schwarz

#endif  // SCHWARZ_SYMBOLS_HPP
