#include "schwarz/twosub.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace schwarz {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// 1 - e^{-z} without cancellation for small |z|.
cplx one_minus_exp_neg(cplx z) {
  if (std::abs(z) < 1e-4) {
    return z * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0);
  }
  return 1.0 - std::exp(-z);
}

struct ScaledFactor {
  cplx num;       // N~
  cplx den;       // D~
  cplx exponent;  // true factor = e^{exponent} * num / den
};

// Transmission operator (qt, pt) of subdomain 1 applied at X1r to its own
// mode (denominator) and to subdomain 2's mode (numerator), both scaled by
// e^{-s x_span} so that num/den stay bounded for large Re(s).
ScaledFactor factor1(cplx s, const TwoSubConfig& cfg, QP ol, QP orr, QP t1) {
  const double X1r = cfg.X1r;
  const double del = 1.0 - X1r;
  const cplx mF = one_minus_exp_neg(2.0 * s * X1r);   // 1 - F
  const cplx pF = 2.0 - mF;                           // 1 + F
  const cplx mG = one_minus_exp_neg(2.0 * s * del);
  const cplx pG = 2.0 - mG;
  ScaledFactor f;
  f.den = ol.q * s * (t1.q * s * mF + t1.p * pF) +
          ol.p * (t1.q * s * pF + t1.p * mF);
  f.num = orr.q * s * (-t1.q * s * mG + t1.p * pG) +
          orr.p * (-t1.q * s * pG + t1.p * mG);
  f.exponent = s * (1.0 - 2.0 * X1r);
  return f;
}

ScaledFactor factor2(cplx s, const TwoSubConfig& cfg, QP ol, QP orr, QP t2) {
  const double X2l = cfg.X2l;
  const double del = 1.0 - X2l;
  const cplx mF = one_minus_exp_neg(2.0 * s * X2l);
  const cplx pF = 2.0 - mF;
  const cplx mG = one_minus_exp_neg(2.0 * s * del);
  const cplx pG = 2.0 - mG;
  ScaledFactor f;
  f.num = ol.q * s * (-t2.q * s * mF + t2.p * pF) +
          ol.p * (-t2.q * s * pF + t2.p * mF);
  f.den = orr.q * s * (t2.q * s * mG + t2.p * pG) +
          orr.p * (t2.q * s * pG + t2.p * mG);
  f.exponent = s * (2.0 * X2l - 1.0);
  return f;
}

// s -> 0 limits of num/den (both vanish linearly in s).
void limit_s0(const TwoSubConfig& cfg, QP ol, QP orr, QP t1, QP t2,
              cplx* r1, cplx* r2) {
  const double d1 = 1.0 - cfg.X1r;
  const double d2 = 1.0 - cfg.X2l;
  cplx n1 = orr.q * t1.p + orr.p * (-t1.q + t1.p * d1);
  cplx e1 = ol.q * t1.p + ol.p * (t1.q + t1.p * cfg.X1r);
  cplx n2 = ol.q * t2.p + ol.p * (-t2.q + t2.p * cfg.X2l);
  cplx e2 = orr.q * t2.p + orr.p * (t2.q + t2.p * d2);
  if (e1 == cplx(0.0) || e2 == cplx(0.0)) {
    throw PoleError("two-subdomain factor has a pole at s = 0");
  }
  *r1 = n1 / e1;
  *r2 = n2 / e2;
}

void check_positions(const TwoSubConfig& cfg) {
  if (!(cfg.X2l > 0.0) || !(cfg.X1r < 1.0) || cfg.X2l > cfg.X1r) {
    throw ConfigError("interfaces must satisfy 0 < X2l <= X1r < 1");
  }
}

TwoSubConfig with_robin(TwoSubConfig cfg, cplx p) {
  cfg.trans_right_of_1 = SymbolFn::robin(p);
  cfg.trans_left_of_2 = SymbolFn::robin(p);
  return cfg;
}

double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return fc > fd ? c : d;
}

template <typename F>
double nelder_mead2(F&& f, std::array<double, 2>* x, double step, int max_iter,
                    int* iters_out) {
  std::array<std::array<double, 2>, 3> xs = {
      *x,
      {(*x)[0] + step, (*x)[1]},
      {(*x)[0], (*x)[1] + step}};
  std::array<double, 3> fs = {f(xs[0]), f(xs[1]), f(xs[2])};
  int it = 0;
  auto sort3 = [&]() {
    for (int a = 0; a < 2; ++a)
      for (int b = a + 1; b < 3; ++b)
        if (fs[b] < fs[a]) {
          std::swap(fs[a], fs[b]);
          std::swap(xs[a], xs[b]);
        }
  };
  for (; it < max_iter; ++it) {
    sort3();
    double diam = 0.0;
    for (int d = 0; d < 2; ++d) {
      diam = std::max(diam, std::abs(xs[1][d] - xs[0][d]));
      diam = std::max(diam, std::abs(xs[2][d] - xs[0][d]));
    }
    double scale = 1.0 + std::abs(xs[0][0]) + std::abs(xs[0][1]);
    if (diam < 1e-7 * scale &&
        fs[2] - fs[0] < 5e-10 * std::max(1.0, std::abs(fs[0]))) {
      break;
    }
    std::array<double, 2> c = {0.5 * (xs[0][0] + xs[1][0]),
                               0.5 * (xs[0][1] + xs[1][1])};
    auto lerp = [&](double t) {
      return std::array<double, 2>{c[0] + t * (c[0] - xs[2][0]),
                                   c[1] + t * (c[1] - xs[2][1])};
    };
    std::array<double, 2> xr = lerp(1.0);
    double fr = f(xr);
    if (fr < fs[0]) {
      std::array<double, 2> xe = lerp(2.0);
      double fe = f(xe);
      if (fe < fr) {
        xs[2] = xe;
        fs[2] = fe;
      } else {
        xs[2] = xr;
        fs[2] = fr;
      }
    } else if (fr < fs[1]) {
      xs[2] = xr;
      fs[2] = fr;
    } else {
      std::array<double, 2> xc = lerp(fr < fs[2] ? 0.5 : -0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fs[2])) {
        xs[2] = xc;
        fs[2] = fc;
      } else {
        for (int j = 1; j < 3; ++j) {
          for (int d = 0; d < 2; ++d)
            xs[j][d] = xs[0][d] + 0.5 * (xs[j][d] - xs[0][d]);
          fs[j] = f(xs[j]);
        }
      }
    }
  }
  sort3();
  *x = xs[0];
  if (iters_out != nullptr) *iters_out += it;
  return fs[0];
}

double geometry_constant_at(const TwoSubConfig& cfg, double k_min) {
  if (!(cfg.medium.eta > 0.0)) {
    throw ConfigError("geometry constant is defined for eta > 0");
  }
  const double s = std::sqrt(k_min * k_min + cfg.medium.eta);
  const QP ol = cfg.outer_left.eval(cplx(k_min), cfg.medium);
  const QP orr = cfg.outer_right.eval(cplx(k_min), cfg.medium);
  const double X = cfg.X2l;
  const double del = 1.0 - X;
  const cplx sh = std::sinh(cplx(s));
  const cplx ch = std::cosh(cplx(s));
  cplx num = 2.0 * s *
             ((ol.q * orr.q * s * s + ol.p * orr.p) * sh +
              s * (orr.q * ol.p + ol.q * orr.p) * ch);
  cplx den = (orr.p * std::sinh(cplx(s * del)) +
              orr.q * s * std::cosh(cplx(s * del))) *
             (ol.p * std::sinh(cplx(s * X)) +
              ol.q * s * std::cosh(cplx(s * X)));
  if (den == cplx(0.0)) throw PoleError("geometry constant denominator is zero");
  cplx C = num / den;
  if (std::abs(C.imag()) > 1e-9 * std::max(1.0, std::abs(C.real()))) {
    throw ConfigError("geometry constant came out complex; outer symbols "
                      "must be real for eta > 0");
  }
  return C.real();
}

double derive_k_min(const CrossSection& cs) {
  switch (cs.bc) {
    case CrossBC::Dirichlet:
      return kPi / cs.Y;
    case CrossBC::Neumann:
      return 0.0;
    default:
      throw ConfigError(
          "geometry constant needs a Dirichlet or Neumann cross-section");
  }
}

}  // namespace

RhoFactors rho_factors(cplx k, const TwoSubConfig& cfg) {
  check_positions(cfg);
  const Medium& m = cfg.medium;
  const cplx s = sqrt_branch(k * k + m.eta);
  const QP ol = cfg.outer_left.eval(k, m);
  const QP orr = cfg.outer_right.eval(k, m);
  const QP t1 = cfg.trans_right_of_1.eval(k, m);
  const QP t2 = cfg.trans_left_of_2.eval(k, m);
  if (s == cplx(0.0)) {
    RhoFactors out;
    limit_s0(cfg, ol, orr, t1, t2, &out.rho1, &out.rho2);
    return out;
  }
  ScaledFactor f1 = factor1(s, cfg, ol, orr, t1);
  ScaledFactor f2 = factor2(s, cfg, ol, orr, t2);
  if (f1.den == cplx(0.0) || f2.den == cplx(0.0) ||
      !std::isfinite(std::abs(f1.den)) || !std::isfinite(std::abs(f2.den))) {
    throw PoleError("two-subdomain factor denominator vanished");
  }
  return {std::exp(f1.exponent) * f1.num / f1.den,
          std::exp(f2.exponent) * f2.num / f2.den};
}

cplx rho(cplx k, const TwoSubConfig& cfg) {
  check_positions(cfg);
  const Medium& m = cfg.medium;
  const cplx s = sqrt_branch(k * k + m.eta);
  const QP ol = cfg.outer_left.eval(k, m);
  const QP orr = cfg.outer_right.eval(k, m);
  const QP t1 = cfg.trans_right_of_1.eval(k, m);
  const QP t2 = cfg.trans_left_of_2.eval(k, m);
  if (s == cplx(0.0)) {
    cplx r1, r2;
    limit_s0(cfg, ol, orr, t1, t2, &r1, &r2);
    return r1 * r2;
  }
  ScaledFactor f1 = factor1(s, cfg, ol, orr, t1);
  ScaledFactor f2 = factor2(s, cfg, ol, orr, t2);
  cplx den = f1.den * f2.den;
  if (den == cplx(0.0) || !std::isfinite(std::abs(den))) {
    throw PoleError("two-subdomain factor denominator vanished");
  }
  // Combined exponent is -2 s L, which never overflows for Re(s) >= 0.
  return std::exp(f1.exponent + f2.exponent) * (f1.num * f2.num) / den;
}

cplx rho_unbounded(cplx k, const Medium& m, cplx sigma1, cplx sigma2,
                   double L) {
  const cplx s = sqrt_branch(k * k + m.eta);
  return reflection_coefficient(sigma1, k, m) *
         reflection_coefficient(sigma2, k, m) * std::exp(-2.0 * L * s);
}

cplx rho_unbounded(cplx k, const Medium& m, QP t1, QP t2, double L) {
  const cplx s = sqrt_branch(k * k + m.eta);
  cplx d1 = t1.p + t1.q * s;
  cplx d2 = t2.p + t2.q * s;
  if (d1 == cplx(0.0) || d2 == cplx(0.0)) {
    throw PoleError("reflection coefficient pole");
  }
  return (t1.p - t1.q * s) / d1 * (t2.p - t2.q * s) / d2 *
         std::exp(-2.0 * L * s);
}

MaxRhoResult max_rho(const TwoSubConfig& cfg, const FreqPolicy& policy) {
  check_positions(cfg);
  MaxRhoResult res;
  auto f = [&](cplx k) {
    cplx r = rho(k, cfg);  // PoleError propagates to the scan engine
    double a = std::abs(r);
    res.curve.points.push_back({k, r, a});
    return a;
  };
  const double geom = cfg.overlap() > 0.0
                          ? cfg.overlap()
                          : std::min(cfg.X2l, 1.0 - cfg.X1r);
  ScanResult s = scan_max(f, cfg.medium, cfg.cross_section, policy, geom);
  res.curve.poles = s.poles;
  res.max_abs = s.max_val;
  res.argmax_k = s.argmax;
  res.n_max_used = s.n_max_used;
  res.doubling_change = s.doubling_change;
  res.k_cap_used = s.k_cap_used;
  return res;
}

RobinOpt optimize_robin_real(TwoSubConfig cfg, double L, double k_min) {
  if (!(L > 0.0)) throw ConfigError("optimize_robin_real needs overlap L > 0");
  const double mid = 0.5 * (cfg.X1r + cfg.X2l);
  cfg.X2l = mid - 0.5 * L;
  cfg.X1r = mid + 0.5 * L;
  check_positions(cfg);

  TwoSubConfig touching = cfg;
  touching.X1r = touching.X2l = mid;
  const double C = geometry_constant_at(touching, k_min);

  auto val = [&](double k, double p) {
    return std::abs(rho(cplx(k), with_robin(cfg, cplx(p))));
  };
  auto eqs = [&](double p, double kb, double out[2]) {
    const double h = 1e-5 * (1.0 + kb);
    out[0] = val(k_min, p) - val(kb, p);
    out[1] = (val(kb + h, p) - val(kb - h, p)) / (2.0 * h);
  };

  double p = p_star_asymptotic(C, L);
  double kb = std::pow(0.5 * C, 1.0 / 3.0) * std::pow(L, -2.0 / 3.0);
  kb = std::max(kb, k_min + 1e-6 * (1.0 + k_min));
  double F[2];
  eqs(p, kb, F);
  auto norm_of = [&](const double f[2]) {
    return std::abs(f[0]) + std::abs(f[1]) * (1.0 + kb);
  };
  bool converged = false;
  int it = 0;
  for (; it < 80; ++it) {
    double n0 = norm_of(F);
    if (n0 < 1e-11) {
      converged = true;
      break;
    }
    const double hp = 1e-6 * (1.0 + std::abs(p));
    const double hk = 1e-4 * (1.0 + kb);
    double fp[2], fm[2], gp[2], gm[2];
    eqs(p + hp, kb, fp);
    eqs(p - hp, kb, fm);
    eqs(p, kb + hk, gp);
    eqs(p, kb - hk, gm);
    const double J00 = (fp[0] - fm[0]) / (2.0 * hp);
    const double J10 = (fp[1] - fm[1]) / (2.0 * hp);
    const double J01 = (gp[0] - gm[0]) / (2.0 * hk);
    const double J11 = (gp[1] - gm[1]) / (2.0 * hk);
    const double det = J00 * J11 - J01 * J10;
    if (!(std::abs(det) > 1e-300)) break;
    const double dp = (F[0] * J11 - F[1] * J01) / det;
    const double dk = (J00 * F[1] - J10 * F[0]) / det;
    bool stepped = false;
    for (double t = 1.0; t > 1e-7; t *= 0.5) {
      double pn = std::max(p - t * dp, 1e-12);
      double kn = std::max(kb - t * dk, k_min + 1e-9 * (1.0 + k_min));
      double Fn[2];
      eqs(pn, kn, Fn);
      if (norm_of(Fn) < n0 * (1.0 - 1e-4 * t)) {
        p = pn;
        kb = kn;
        F[0] = Fn[0];
        F[1] = Fn[1];
        stepped = true;
        break;
      }
    }
    if (!stepped) break;
  }

  FreqPolicy pol = FreqPolicy::continuous(k_min, 0.0, 512);
  pol.geom_scale = L;
  RobinOpt out;
  out.iterations = it;
  MaxRhoResult check = max_rho(with_robin(cfg, cplx(p)), pol);
  const double equi = val(k_min, p);
  bool ok = converged &&
            std::abs(check.max_abs - equi) <=
                1e-3 * std::max(1.0, equi) + 1e-9;
  if (!ok) {
    out.fallback_used = true;
    FreqPolicy coarse = FreqPolicy::continuous(k_min, 0.0, 192);
    coarse.geom_scale = L;
    const double lp0 = std::log10(std::max(p_star_asymptotic(C, L), 1e-12));
    auto fneg = [&](double lp) {
      return -max_rho(with_robin(cfg, cplx(std::pow(10.0, lp))), coarse)
                  .max_abs;
    };
    double lp = golden_max(fneg, lp0 - 1.5, lp0 + 1.5, 1e-10);
    p = std::pow(10.0, lp);
    check = max_rho(with_robin(cfg, cplx(p)), pol);
  }
  out.p_star = cplx(p);
  out.max_abs = check.max_abs;
  out.k_bar = check.argmax_k;
  return out;
}

RobinOpt optimize_robin_complex(TwoSubConfig cfg, double L,
                                const FreqPolicy& policy, std::uint64_t seed,
                                const std::vector<cplx>& extra_starts) {
  if (L < 0.0) throw ConfigError("negative overlap");
  const double mid = 0.5 * (cfg.X1r + cfg.X2l);
  cfg.X2l = mid - 0.5 * L;
  cfg.X1r = mid + 0.5 * L;
  check_positions(cfg);

  const cplx p_taylor = sqrt_branch(cplx(cfg.medium.eta, 0.0));
  MaxRhoResult base = max_rho(with_robin(cfg, p_taylor), policy);
  FreqPolicy fixed = policy;
  if (policy.mode == FreqPolicy::Mode::Discrete) {
    fixed.auto_n = false;
    fixed.n_max = base.n_max_used;
  } else if (fixed.k_cap <= 0.0) {
    fixed.k_cap = base.k_cap_used;
  }

  const double eta = cfg.medium.eta;
  // |rho| develops a narrow spike where the subdomain symbol comes close to
  // -p, i.e. near xi = sqrt(p^2 - eta); pin the scan there so the trial
  // measurement cannot miss it.
  auto guarded = [&](const FreqPolicy& pol, cplx pp) {
    FreqPolicy out = pol;
    cplx xs = sqrt_branch(pp * pp - cplx(eta, 0.0));
    if (std::isfinite(xs.real()) && xs.real() > 0.0)
      out.extra_t.push_back(xs.real());
    return out;
  };

  cplx best_p = p_taylor;
  double best_f = base.max_abs;
  auto obj = [&](std::array<double, 2> x) {
    cplx pp(x[0], x[1]);
    double v;
    try {
      v = max_rho(with_robin(cfg, pp), guarded(fixed, pp)).max_abs;
    } catch (const std::exception&) {
      return 1e9;
    }
    if (!std::isfinite(v)) return 1e9;
    if (v < best_f) {
      best_f = v;
      best_p = pp;
    }
    return v;
  };

  const double m0 =
      L > 0.0 ? 0.5 * std::cbrt(4.0 * std::max(1.0, std::abs(eta))) /
                    std::cbrt(L)
              : std::max(1.0, std::sqrt(std::abs(eta)));
  std::vector<cplx> starts = {p_taylor, m0 * cplx(1.0, 1.0) / std::sqrt(2.0),
                              m0 * cplx(0.2, 1.0)};
  if (eta < 0.0) {
    const double w = std::sqrt(-eta);
    for (double c : {0.05, 0.15, 0.3, 0.5, 0.8}) starts.push_back(cplx(0.0, c * w));
    starts.push_back(w * cplx(0.5, 0.7));
    starts.push_back(w * cplx(1.2, 1.4));
  }
  starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> umag(-0.7, 1.2);
  std::uniform_real_distribution<double> uang(-0.25 * kPi, 0.75 * kPi);
  for (int i = 0; i < 6; ++i) {
    double mag = m0 * std::pow(10.0, umag(rng));
    double th = uang(rng);
    starts.push_back(mag * cplx(std::cos(th), std::sin(th)));
  }

  int iters = 0;
  for (cplx s0 : starts) {
    std::array<double, 2> x = {s0.real(), s0.imag()};
    double step = 0.1 * (1.0 + std::abs(s0));
    nelder_mead2(obj, &x, step, 220, &iters);
  }

  MaxRhoResult fin = max_rho(with_robin(cfg, best_p), guarded(policy, best_p));
  RobinOpt out;
  if (fin.max_abs > base.max_abs) {
    best_p = p_taylor;
    fin = base;
  }
  out.p_star = best_p;
  out.max_abs = fin.max_abs;
  out.k_bar = fin.argmax_k;
  out.iterations = iters;
  return out;
}

double geometry_constant(const TwoSubConfig& cfg) {
  return geometry_constant_at(cfg, derive_k_min(cfg.cross_section));
}

double p_star_asymptotic(double C, double L) {
  return 0.5 * std::pow(0.5 * C, 2.0 / 3.0) * std::pow(L, -1.0 / 3.0);
}

double rho_star_asymptotic(double C, double L) {
  return 1.0 - 2.0 * std::pow(2.0 / C, 2.0 / 3.0) * std::pow(L, 1.0 / 3.0);
}

double p_star_unbounded(double k_min, double eta, double L) {
  const double s2 = k_min * k_min + eta;
  if (!(s2 > 0.0)) throw ConfigError("k_min^2 + eta must be positive");
  return 0.5 * std::cbrt(4.0 * s2) / std::cbrt(L);
}

TaylorCoeffs taylor_coefficients(const TwoSubConfig& cfg) {
  check_positions(cfg);
  const Medium& m = cfg.medium;
  TaylorCoeffs tc;
  tc.p1r = dtn_bounded(cplx(0.0), m, Side::Right, cfg.X1r,
                       cfg.outer_right.eval(cplx(0.0), m));
  tc.p2l = dtn_bounded(cplx(0.0), m, Side::Left, cfg.X2l,
                       cfg.outer_left.eval(cplx(0.0), m));
  return tc;
}

TaylorAsympt taylor_asymptotics(cplx p1r, cplx p2l, double L) {
  const double sum = (p1r + p2l).real();
  if (!(sum > 0.0) || !(L > 0.0)) {
    throw ConfigError("Taylor asymptotics need Re(p1r+p2l) > 0 and L > 0");
  }
  return {std::sqrt(sum / L), 1.0 - 4.0 * std::sqrt(sum * L)};
}

double helmholtz_taylor_asymptotic(double L) {
  return 1.0 - (8.0 - 4.0 * std::log(2.0) - 4.0 * std::log(L)) * L;
}

}  // namespace schwarz
