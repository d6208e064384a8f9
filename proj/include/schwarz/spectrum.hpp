#ifndef SCHWARZ_SPECTRUM_HPP
#define SCHWARZ_SPECTRUM_HPP

#include <functional>
#include <vector>

#include "schwarz/symbols.hpp"

namespace schwarz {

enum class CrossBC { Dirichlet, Neumann, Taylor0, Pml };

/**
 * Cross-section (0, Y) of the strip with its top/bottom boundary condition.
 * Taylor0 carries the absorbing parameter omega; Pml carries the layer spec
 * used to extend the cross-section.
 */
struct CrossSection {
  double Y = 1.0;
  CrossBC bc = CrossBC::Dirichlet;
  double omega = 0.0;
  PmlSpec pml{};
};

enum class Provenance { ClosedForm, RootFound };

/** Transverse frequencies, sorted by increasing |Re xi|. */
struct FrequencySet {
  std::vector<cplx> values;
  Provenance provenance = Provenance::ClosedForm;
  std::vector<double> residuals;  // normalized residuals when root-found

  std::size_t count() const { return values.size(); }
};

/// xi_n = n*pi/Y, n = 1..n_max.
FrequencySet freqs_dirichlet(double Y, int n_max);

/// xi_n = n*pi/Y, n = 0..n_max.
FrequencySet freqs_neumann(double Y, int n_max);

/// Cross-section extended by a PML on both ends: xi_j = j*pi / ((2-i*gamma)*D + Y),
/// j >= 1 for Dirichlet termination, j >= 0 for Neumann termination.
FrequencySet freqs_pml_extended(double Y, const PmlSpec& pml, int n_max);

/// Roots of (xi^2+omega^2)*sin(xi*Y) - 2i*omega*xi*cos(xi*Y) = 0 in the
/// upper half plane Re xi >= 0 (absorbing conditions d/dn + i*omega at both
/// ends). Equivalently e^{2 i xi Y} = ((xi-omega)/(xi+omega))^2, which has
/// exactly one root per branch of the logarithm; returns the n_max + 1
/// branch-m roots, m = 0..n_max, each tending to m*pi/Y as omega -> 0.
FrequencySet freqs_robin_taylor0(double Y, double omega, int n_max);

FrequencySet cross_section_freqs(const CrossSection& cs, int n_max);

/// Branch-m root of the Taylor-0 characteristic equation for real m >= 0;
/// integer m recovers the modes of freqs_robin_taylor0, continuous m traces
/// the curve the spectrum lies on.
cplx taylor0_mode(double Y, double omega, double m);

/// Point on the cross-section's frequency locus with nominal (real)
/// frequency t: the real axis for Dirichlet/Neumann, the Taylor-0 curve
/// (branch index t*Y/pi), or the rotated PML line. Continuous-mode scans
/// maximize along this locus; discrete scans use the spectrum itself.
cplx locus_point(const CrossSection& cs, double t);

/// Cap for continuous-frequency scans: max(50, 10*sqrt|eta|) * (1 + 1/sqrt(g)),
/// g the relevant geometric scale (overlap, or subdomain width if no overlap).
double default_k_cap(const Medium& m, double geom_scale);

/// Logarithmic grid [k_min, k_cap]; k_min <= 0 prepends an exact zero.
std::vector<double> log_grid(double k_min, double k_cap, int points);

/** How to take the maximum of a quantity over transverse frequencies. */
struct FreqPolicy {
  enum class Mode { Discrete, Continuous };
  Mode mode = Mode::Discrete;
  // Discrete: start at n_max and, if auto_n, double it until the maximum
  // moves by less than 1e-6 (or n_limit is reached).
  int n_max = 64;
  bool auto_n = true;
  int n_limit = 1 << 17;
  // Continuous: log grid plus golden-section refinement of the leading
  // local maxima; k_cap <= 0 derives the cap from the medium and the
  // geometric scale supplied by the caller.
  double k_min = 0.0;
  double k_cap = 0.0;
  int points = 512;
  double geom_scale = 0.0;
  // Continuous: nominal frequencies that get a dense pinpoint window each,
  // so narrow features (near-poles of a trial transmission symbol) cannot
  // slip between grid points.
  std::vector<double> extra_t;

  static FreqPolicy discrete(int n0 = 64, bool auto_doubling = true) {
    FreqPolicy p;
    p.mode = Mode::Discrete;
    p.n_max = n0;
    p.auto_n = auto_doubling;
    return p;
  }
  static FreqPolicy continuous(double k_min = 0.0, double k_cap = 0.0,
                               int points = 512) {
    FreqPolicy p;
    p.mode = Mode::Continuous;
    p.k_min = k_min;
    p.k_cap = k_cap;
    p.points = points;
    return p;
  }
};

struct ScanResult {
  double max_val = -1.0;
  cplx argmax{};
  std::vector<cplx> poles;       // frequencies skipped on PoleError
  int n_max_used = 0;            // discrete mode
  double doubling_change = 0.0;  // |max| change at the last doubling
  double k_cap_used = 0.0;       // continuous mode
};

/**
 * Maximum of f over the transverse frequencies selected by the policy.
 * f may throw PoleError for isolated frequencies; those are recorded and
 * skipped. Waveguide media get an extra uniform window around omega in
 * continuous mode. Throws ConvergenceError if no frequency is evaluable.
 */
ScanResult scan_max(const std::function<double(cplx)>& f, const Medium& m,
                    const CrossSection& cs, const FreqPolicy& policy,
                    double geom_scale_fallback);

}  // namespace schwarz

#endif  // SCHWARZ_SPECTRUM_HPP
