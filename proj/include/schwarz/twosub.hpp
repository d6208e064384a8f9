#ifndef SCHWARZ_TWOSUB_HPP
#define SCHWARZ_TWOSUB_HPP

#include <cstdint>
#include <vector>

#include "schwarz/spectrum.hpp"
#include "schwarz/symbols.hpp"

namespace schwarz {

/**
 * Two overlapping subdomains (0, X1r) and (X2l, 1) of the unit strip,
 * 0 < X2l <= X1r < 1, overlap L = X1r - X2l. outer_* act at x = 0 and x = 1;
 * trans_right_of_1 is the transmission operator of subdomain 1 at X1r,
 * trans_left_of_2 the one of subdomain 2 at X2l. An unbounded outer problem
 * is expressed by transparent() outer symbols.
 */
struct TwoSubConfig {
  Medium medium{};
  double X1r = 0.55;
  double X2l = 0.45;
  SymbolFn outer_left = SymbolFn::dirichlet();
  SymbolFn outer_right = SymbolFn::dirichlet();
  SymbolFn trans_right_of_1 = SymbolFn::dirichlet();
  SymbolFn trans_left_of_2 = SymbolFn::dirichlet();
  CrossSection cross_section{};

  double overlap() const { return X1r - X2l; }
};

struct RhoFactors {
  cplx rho1;
  cplx rho2;
};

/// One alternating double iteration contracts interface data by rho1*rho2.
RhoFactors rho_factors(cplx k, const TwoSubConfig& cfg);

/// rho1*rho2, evaluated in scaled form (safe for large |Re s|).
cplx rho(cplx k, const TwoSubConfig& cfg);

/// Unbounded-domain factor (sigma1-s)(sigma2-s)/((sigma1+s)(sigma2+s)) e^{-2Ls}.
cplx rho_unbounded(cplx k, const Medium& m, cplx sigma1, cplx sigma2, double L);
cplx rho_unbounded(cplx k, const Medium& m, QP t1, QP t2, double L);

struct CurvePoint {
  cplx k;
  cplx value;
  double abs_value;
};

struct ConvergenceCurve {
  std::vector<CurvePoint> points;
  std::vector<cplx> poles;  // frequencies skipped on PoleError
};

struct MaxRhoResult {
  double max_abs = 0.0;
  cplx argmax_k{};
  ConvergenceCurve curve;
  int n_max_used = 0;              // discrete mode
  double doubling_change = 0.0;    // |max| change at the last doubling
  double k_cap_used = 0.0;         // continuous mode
};

MaxRhoResult max_rho(const TwoSubConfig& cfg, const FreqPolicy& policy);

struct RobinOpt {
  cplx p_star{};
  double max_abs = 0.0;
  cplx k_bar{};
  int iterations = 0;
  bool fallback_used = false;
};

/**
 * Equioscillating real Robin parameter for eta > 0 over continuous k in
 * [k_min, inf): solves |rho(k_min)| = |rho(k_bar)|, d|rho|/dk(k_bar) = 0 by
 * damped Newton seeded from the asymptotic constants, with a golden-section
 * fallback. Positions are re-centered symmetrically to overlap L.
 */
RobinOpt optimize_robin_real(TwoSubConfig cfg, double L, double k_min);

/**
 * Complex Robin parameter minimizing max|rho| under the given frequency
 * policy (Nelder-Mead, multistart; the Taylor-0 symbol is always one of the
 * candidates, so the result never loses to it). extra_starts allows warm
 * starting a ladder of overlaps.
 */
RobinOpt optimize_robin_complex(TwoSubConfig cfg, double L,
                                const FreqPolicy& policy,
                                std::uint64_t seed = 20240901,
                                const std::vector<cplx>& extra_starts = {});

/// Geometry constant of the L -> 0 equioscillation asymptotics (eta > 0).
double geometry_constant(const TwoSubConfig& cfg);

/// p* ~ (1/2) (C/2)^{2/3} L^{-1/3}
double p_star_asymptotic(double C, double L);
/// max|rho| ~ 1 - 2 (2/C)^{2/3} L^{1/3}
double rho_star_asymptotic(double C, double L);
/// Unbounded-domain version: p* = (1/2)(4(k_min^2+eta))^{1/3} L^{-1/3}
double p_star_unbounded(double k_min, double eta, double L);

struct TaylorCoeffs {
  cplx p1r;
  cplx p2l;
};

/// Zeroth-order (k = 0) expansion of the exterior DtN at each interface.
TaylorCoeffs taylor_coefficients(const TwoSubConfig& cfg);

struct TaylorAsympt {
  double k_bar;
  double rho;
};

/// k_bar ~ sqrt((p1r+p2l)/L), max|rho| ~ 1 - 4 sqrt((p1r+p2l) L)  (eta > 0).
TaylorAsympt taylor_asymptotics(cplx p1r, cplx p2l, double L);

/// Waveguide Taylor-0 asymptotics: max|rho| = 1 - (8 - 4 ln 2 - 4 ln L) L.
double helmholtz_taylor_asymptotic(double L);

}  // namespace schwarz

#endif  // SCHWARZ_TWOSUB_HPP
