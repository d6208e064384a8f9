#include "schwarz/spectrum.hpp"

#include <algorithm>
#include <cmath>

namespace schwarz {

namespace {

constexpr double kPi = 3.14159265358979323846;

// The characteristic equation (xi^2 + w^2) sin(xi Y) = 2i w xi cos(xi Y)
// is equivalent to e^{2 i xi Y} = ((xi - w)/(xi + w))^2, so each root is the
// unique upper-half-plane zero of one branch
//   W_m(xi) = 2 i xi Y - 2 Log((xi - w)/(xi + w)) - 2 pi i m,  m = 0, 1, ...
// The Moebius ratio maps the upper half plane into itself, so Log stays on
// the principal branch and W_m' = 2iY - 4w/(xi^2 - w^2) never vanishes there.
// As w -> 0 the branch-m root tends to m pi / Y (the Neumann mode).
struct CharFn {
  double Y, omega;

  cplx ratio(cplx xi) const { return (xi - omega) / (xi + omega); }
  cplx W(cplx xi, double m) const {
    return 2.0 * cplx(0.0, 1.0) * xi * Y - 2.0 * std::log(ratio(xi)) -
           cplx(0.0, 2.0 * kPi * m);
  }
  cplx dW(cplx xi) const {
    return 2.0 * cplx(0.0, 1.0) * Y - 4.0 * omega / (xi * xi - omega * omega);
  }
  // Residual of the original form, scaled by the magnitude of its terms.
  double residual(cplx xi) const {
    const cplx t1 = (xi * xi + omega * omega) * std::sin(xi * Y);
    const cplx t2 = 2.0 * cplx(0.0, 1.0) * omega * xi * std::cos(xi * Y);
    return std::abs(t1 - t2) / (std::abs(t1) + std::abs(t2) + 1e-300);
  }
};

cplx newton_mode(const CharFn& f, double m) {
  const cplx seed((m + 0.5) * kPi / f.Y,
                  (1.0 + std::log1p(2.0 * f.omega * f.Y)) / f.Y);
  for (int restart = 0; restart < 8; ++restart) {
    cplx xi = seed;
    if (restart > 0) {
      const double ang = 0.7 * restart;
      xi += 0.5 * (1.0 + std::abs(seed)) *
            cplx(std::cos(ang), std::sin(ang)) / double(restart + 1);
      if (xi.imag() <= 0.0) xi = cplx(xi.real(), std::abs(xi.imag()) + 0.1);
    }
    bool settled = false;
    for (int it = 0; it < 80; ++it) {
      const cplx step = f.W(xi, m) / f.dW(xi);
      xi -= step;
      if (std::abs(step) <= 1e-14 * (1.0 + std::abs(xi))) {
        settled = true;
        break;
      }
    }
    const double wres =
        std::abs(f.W(xi, m)) / (1.0 + 2.0 * std::abs(xi) * f.Y + 2.0 * kPi * m);
    if (settled && wres <= 1e-10 && xi.real() >= 0.0 && xi.imag() >= -1e-12)
      return xi;
  }
  throw ConvergenceError("taylor0 mode did not converge");
}

}  // namespace

FrequencySet freqs_dirichlet(double Y, int n_max) {
  if (Y <= 0.0) throw ConfigError("freqs_dirichlet: Y must be positive");
  FrequencySet out;
  for (int n = 1; n <= n_max; ++n) out.values.emplace_back(n * (kPi / Y), 0.0);
  return out;
}

FrequencySet freqs_neumann(double Y, int n_max) {
  if (Y <= 0.0) throw ConfigError("freqs_neumann: Y must be positive");
  FrequencySet out;
  for (int n = 0; n <= n_max; ++n) out.values.emplace_back(n * (kPi / Y), 0.0);
  return out;
}

FrequencySet freqs_pml_extended(double Y, const PmlSpec& pml, int n_max) {
  if (Y <= 0.0) throw ConfigError("freqs_pml_extended: Y must be positive");
  FrequencySet out;
  const cplx stretch = cplx(2.0, -pml.gamma) * pml.D + Y;
  const cplx base = kPi / stretch;
  const int j0 = pml.termination == Termination::Neumann ? 0 : 1;
  for (int j = j0; j <= n_max; ++j) out.values.push_back(double(j) * base);
  return out;
}

FrequencySet freqs_robin_taylor0(double Y, double omega, int n_max) {
  if (Y <= 0.0) throw ConfigError("freqs_robin_taylor0: Y must be positive");
  if (omega == 0.0) return freqs_neumann(Y, n_max);

  const CharFn f{Y, omega};
  FrequencySet out;
  out.provenance = Provenance::RootFound;

  const double dedup = 1e-8 * kPi / Y;
  for (int m = 0; m <= n_max; ++m) {
    const cplx xi = newton_mode(f, double(m));
    const double gres = f.residual(xi);
    if (gres > 1e-6)
      throw ConvergenceError("freqs_robin_taylor0: mode did not converge");
    bool dup = false;
    for (const cplx prev : out.values)
      if (std::abs(prev - xi) < dedup) dup = true;
    if (dup)
      throw ConvergenceError("freqs_robin_taylor0: duplicate mode");
    out.values.push_back(xi);
    out.residuals.push_back(gres);
  }

  std::vector<std::size_t> order(out.values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(out.values[a].real()) < std::abs(out.values[b].real());
  });
  FrequencySet sorted;
  sorted.provenance = out.provenance;
  for (std::size_t i : order) {
    sorted.values.push_back(out.values[i]);
    sorted.residuals.push_back(out.residuals[i]);
  }
  return sorted;
}

cplx taylor0_mode(double Y, double omega, double m) {
  if (Y <= 0.0) throw ConfigError("taylor0_mode: Y must be positive");
  if (m < 0.0) throw ConfigError("taylor0_mode: branch index must be >= 0");
  if (omega == 0.0) return cplx(m * kPi / Y, 0.0);
  return newton_mode(CharFn{Y, omega}, m);
}

cplx locus_point(const CrossSection& cs, double t) {
  switch (cs.bc) {
    case CrossBC::Dirichlet:
    case CrossBC::Neumann:
      return cplx(t, 0.0);
    case CrossBC::Taylor0:
      return taylor0_mode(cs.Y, cs.omega, t * cs.Y / kPi);
    case CrossBC::Pml: {
      const cplx stretch = cplx(2.0, -cs.pml.gamma) * cs.pml.D + cs.Y;
      return t * (cs.Y + 2.0 * cs.pml.D) / stretch;
    }
  }
  throw ConfigError("locus_point: unknown boundary condition");
}

FrequencySet cross_section_freqs(const CrossSection& cs, int n_max) {
  switch (cs.bc) {
    case CrossBC::Dirichlet:
      return freqs_dirichlet(cs.Y, n_max);
    case CrossBC::Neumann:
      return freqs_neumann(cs.Y, n_max);
    case CrossBC::Taylor0:
      return freqs_robin_taylor0(cs.Y, cs.omega, n_max);
    case CrossBC::Pml:
      return freqs_pml_extended(cs.Y, cs.pml, n_max);
  }
  throw ConfigError("cross_section_freqs: unknown boundary condition");
}

double default_k_cap(const Medium& m, double geom_scale) {
  const double base = std::max(50.0, 10.0 * std::sqrt(std::abs(m.eta)));
  const double g = std::max(geom_scale, 1e-12);
  return std::min(base * (1.0 + 1.0 / std::sqrt(g)), 1e7);
}

std::vector<double> log_grid(double k_min, double k_cap, int points) {
  if (points < 2 || k_cap <= 0.0 || k_cap <= k_min)
    throw ConfigError("log_grid: need points >= 2 and k_cap > max(k_min, 0)");
  std::vector<double> ks;
  ks.reserve(points);
  double lo = k_min;
  if (k_min <= 0.0) {
    ks.push_back(0.0);
    lo = k_cap * 1e-5;
    --points;
  }
  const double llo = std::log(lo), lhi = std::log(k_cap);
  for (int i = 0; i < points; ++i)
    ks.push_back(std::exp(llo + (lhi - llo) * i / double(points - 1)));
  return ks;
}

namespace {

double golden_max_1d(const std::function<double(double)>& f, double a,
                     double b, double tol) {
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

}  // namespace

ScanResult scan_max(const std::function<double(cplx)>& f, const Medium& m,
                    const CrossSection& cs, const FreqPolicy& policy,
                    double geom_scale_fallback) {
  ScanResult res;
  auto probe = [&](cplx k) -> double {
    try {
      double v = f(k);
      if (std::isnan(v)) throw PoleError("scan value is NaN");
      return v;
    } catch (const PoleError&) {
      res.poles.push_back(k);
      return -1.0;
    }
  };

  if (policy.mode == FreqPolicy::Mode::Discrete) {
    auto pass = [&](int nn, double* mx, cplx* arg) {
      FrequencySet fs = cross_section_freqs(cs, nn);
      *mx = -1.0;
      for (cplx xi : fs.values) {
        double v = probe(xi);
        if (v > *mx) {
          *mx = v;
          *arg = xi;
        }
      }
    };
    int n = std::max(1, policy.n_max);
    double mx = -1.0;
    cplx arg{};
    pass(n, &mx, &arg);
    if (policy.auto_n) {
      while (2 * n <= policy.n_limit) {
        double mx2 = -1.0;
        cplx arg2{};
        pass(2 * n, &mx2, &arg2);
        res.doubling_change = std::abs(mx2 - mx);
        n *= 2;
        mx = mx2;
        arg = arg2;
        if (res.doubling_change < 1e-6 * std::max(1.0, std::abs(mx))) break;
      }
    }
    if (mx < 0.0) throw ConvergenceError("scan_max: every frequency is a pole");
    res.max_val = mx;
    res.argmax = arg;
    res.n_max_used = n;
    return res;
  }

  const double g =
      policy.geom_scale > 0.0 ? policy.geom_scale : geom_scale_fallback;
  const double cap =
      policy.k_cap > 0.0 ? policy.k_cap : default_k_cap(m, g);
  res.k_cap_used = cap;
  std::vector<double> ts = log_grid(policy.k_min, cap, policy.points);
  if (m.wave()) {
    const double w = m.omega();
    const int nw = 257;
    for (int i = 0; i < nw; ++i) {
      double t = 0.8 * w + 0.4 * w * double(i) / double(nw - 1);
      if (t > policy.k_min && t < cap) ts.push_back(t);
    }
  }
  if (!policy.extra_t.empty()) {
    static constexpr double off[] = {0.0,   1e-4,  -1e-4, 3e-4,  -3e-4,
                                     1e-3,  -1e-3, 3e-3,  -3e-3, 1e-2,
                                     -1e-2, 3e-2,  -3e-2, 1e-1,  -1e-1};
    for (double te : policy.extra_t) {
      if (!std::isfinite(te) || te <= 0.0) continue;
      for (double u : off) {
        double t = te * (1.0 + u);
        if (t > policy.k_min && t < cap) ts.push_back(t);
      }
    }
  }
  if (ts.size() > static_cast<std::size_t>(policy.points)) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) {
                           return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a));
                         }),
             ts.end());
  }

  // t is the nominal (real) frequency; the evaluation point lies on the
  // cross-section's frequency locus.
  auto ft = [&](double t) { return probe(locus_point(cs, t)); };
  std::vector<double> vals(ts.size());
  double arg_t = ts.empty() ? 0.0 : ts[0];
  for (std::size_t i = 0; i < ts.size(); ++i) {
    vals[i] = ft(ts[i]);
    if (vals[i] > res.max_val) {
      res.max_val = vals[i];
      arg_t = ts[i];
    }
  }
  if (res.max_val < 0.0)
    throw ConvergenceError("scan_max: every frequency is a pole");

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double l = i > 0 ? vals[i - 1] : -2.0;
    double r = i + 1 < ts.size() ? vals[i + 1] : -2.0;
    if (vals[i] >= l && vals[i] >= r && vals[i] >= 0.0) cand.push_back(i);
  }
  std::sort(cand.begin(), cand.end(),
            [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  if (cand.size() > 12) cand.resize(12);
  for (std::size_t i : cand) {
    if (i == 0 || i + 1 >= ts.size()) continue;
    double tt =
        golden_max_1d(ft, ts[i - 1], ts[i + 1], 1e-8 * std::max(1.0, ts[i]));
    double v = ft(tt);
    if (v > res.max_val) {
      res.max_val = v;
      arg_t = tt;
    }
  }
  res.argmax = locus_point(cs, arg_t);
  return res;
}

}  // namespace schwarz
