#ifndef SCHWARZ_MANYSUB_HPP
#define SCHWARZ_MANYSUB_HPP

#include <Eigen/Dense>
#include <vector>

#include "schwarz/spectrum.hpp"
#include "schwarz/symbols.hpp"

namespace schwarz {

/**
 * Piecewise-constant velocity profiles on [0, X] with v = 1 near both ends;
 * eta(x) = -omega^2 / v(x)^2. Vel1 has one fast/slow inclusion in the middle
 * third, Vel2 two inclusions, VelL l inclusions of width X/(2l+1).
 */
struct LayeredMedium {
  enum class Model { Constant, Vel1, Vel2, VelL };
  Model model = Model::Constant;
  double v1 = 1.0;
  int l = 1;
  double omega = 0.0;
  double X = 1.0;

  // side < 0: left limit at x, side > 0: right limit (they differ only on
  // breakpoints).
  double velocity(double x, int side = 0) const;
  double eta(double x, int side = 0) const;
  double average_velocity() const;
  std::vector<double> breakpoints() const;
};

/// What medium value the transmission symbols see in a layered chain.
enum class TcPolicy { DomainAverage, InterfaceValue, NeighborValue, OwnValue };

/**
 * N subdomains ((j-1)H, jH + 2L) of (0, X), X = N H + 2L; adjacent
 * subdomains overlap by 2L. One transmission symbol serves every interior
 * interface operator (evaluated, in layered media, with the tc_policy's
 * local medium).
 */
struct ChainSpec {
  int N = 2;
  double H = 0.5;
  double L = 0.0;
  double X = 1.0;
  Medium medium{};
  SymbolFn transmission = SymbolFn::dirichlet();
  SymbolFn outer_left = SymbolFn::dirichlet();
  SymbolFn outer_right = SymbolFn::dirichlet();
  CrossSection cross_section{};
  LayeredMedium layered{};
  TcPolicy tc_policy = TcPolicy::DomainAverage;

  double Xl(int j) const { return (j - 1) * H; }
  double Xr(int j) const { return j * H + 2.0 * L; }
  void validate() const;

  static ChainSpec uniform(int N, double H, double L, Medium m, SymbolFn tc,
                           SymbolFn outer);
};

struct I2ICoeffs {
  cplx a{};  // g_j^l -> g_{j+1}^l
  cplx b{};  // g_j^r -> g_{j+1}^l
  cplx c{};  // g_j^r -> g_{j-1}^r
  cplx d{};  // g_j^l -> g_{j-1}^r
};

/// Interface-to-interface response of subdomain j at transverse frequency xi.
I2ICoeffs i2i_symbols(cplx xi, int j, const ChainSpec& spec);

/**
 * Fixed-point system for the stacked data (g_2^l..g_N^l | g_1^r..g_{N-1}^r):
 * matrix() = [[I-A, -B], [-D, I-C]], rhs() the outer-data contribution.
 */
struct InterfaceSystem {
  Eigen::MatrixXcd A, B, C, D;
  cplx a1{};
  cplx cN{};

  Eigen::MatrixXcd matrix() const;
  Eigen::VectorXcd rhs(cplx g_left, cplx g_right) const;
};

InterfaceSystem build_interface_system(cplx xi, const ChainSpec& spec);

enum class IterKind { POSM, DOSM, COSM };

struct IterationMatrix {
  IterKind kind = IterKind::POSM;
  Eigen::MatrixXcd T;
};

IterationMatrix iteration_matrix(IterKind kind, cplx xi,
                                 const ChainSpec& spec);

/// Dense solve up to dimension 1024, power iteration beyond.
double spectral_radius(const Eigen::MatrixXcd& T);

struct LimitSpectrum {
  std::vector<cplx> values;
  double radius = 0.0;
};

/**
 * N -> infinity spectrum of the parallel iteration matrix with constant
 * interior coefficients (a = c): lambda(mu) = a cos(2mu) +-
 * sqrt(bd - a^2 sin^2(2mu)), mu in [-pi, pi].
 */
LimitSpectrum limiting_spectrum(cplx a, cplx b, cplx d, int mu_points = 721);

enum class NormChoice { MaxRowSum, Spectral };

/**
 * A-priori contraction bounds from block norms: with S(t) the partial
 * geometric sum over the block powers, rho_bar = |B||D| S(|A|) S(|C|).
 * applicable is false when rho_bar >= 1 (the bounds say nothing).
 */
struct NormBound {
  double rho_bar = 0.0;
  double c0 = 0.0;
  bool applicable = false;
  int N = 0;

  double posm(int n) const;  // valid for n >= 2N
  double dosm(int n) const;  // valid for n >= 2
};

NormBound norm_bound(cplx xi, const ChainSpec& spec, NormChoice nc);

struct ChainCurvePoint {
  cplx xi;
  double radius;
};

struct ChainMax {
  double max_rho = 0.0;
  cplx argmax_xi{};
  bool divergent = false;
  int n_max_used = 0;
  double doubling_change = 0.0;
  double k_cap_used = 0.0;
  std::vector<ChainCurvePoint> curve;
  std::vector<cplx> poles;
};

ChainMax max_rho_chain(const ChainSpec& spec, const FreqPolicy& policy,
                       IterKind kind);

struct ScalingPoint {
  double param = 0.0;
  ChainSpec spec;
};

struct ScalingFit {
  bool valid = false;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  double intercept = 0.0;
  int points_used = 0;
};

/** The frequency policy is shared by every point so caps stay comparable. */
struct ScalingPlan {
  std::vector<ScalingPoint> points;
  IterKind kind = IterKind::POSM;
  FreqPolicy freq{};
  bool fit_one_minus = true;  // fit 1 - max_rho against param (else max_rho)
  int jobs = 1;               // ladder points evaluated in parallel
};

struct ScalingResult {
  std::vector<double> param;
  std::vector<double> max_rho;
  std::vector<bool> divergent;
  std::vector<int> n_max_used;
  ScalingFit fit;
};

/**
 * Runs the plan and fits a log-log slope over the largest decade of the
 * parameter (param >= max/10). Divergent points are flagged and excluded
 * from 1-max_rho fits; fewer than 4 usable points leaves fit.valid false.
 */
ScalingResult scaling_sweep(const ScalingPlan& plan);

struct PolicyEtas {
  std::vector<double> left_op;   // eta seen by B_j^l, index j-1
  std::vector<double> right_op;  // eta seen by B_j^r, index j-1
};

PolicyEtas layered_policy(const ChainSpec& spec, TcPolicy policy);

}  // namespace schwarz

#endif  // SCHWARZ_MANYSUB_HPP
