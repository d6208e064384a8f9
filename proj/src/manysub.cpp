#include "schwarz/manysub.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace schwarz {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

struct Profile {
  std::vector<double> knots;  // interior breakpoints
  std::vector<double> vals;   // knots.size() + 1 segment velocities
};

Profile profile_of(const LayeredMedium& lm) {
  Profile p;
  switch (lm.model) {
    case LayeredMedium::Model::Constant:
      p.vals = {1.0};
      break;
    case LayeredMedium::Model::Vel1:
      p.knots = {lm.X / 3.0, 2.0 * lm.X / 3.0};
      p.vals = {1.0, lm.v1, 1.0};
      break;
    case LayeredMedium::Model::Vel2:
      p.knots = {lm.X / 6.0, lm.X / 3.0, 2.0 * lm.X / 3.0, 5.0 * lm.X / 6.0};
      p.vals = {1.0, lm.v1, 1.0, lm.v1, 1.0};
      break;
    case LayeredMedium::Model::VelL: {
      if (lm.l < 1) throw ConfigError("VelL needs l >= 1");
      const double W = lm.X / double(2 * lm.l + 1);
      for (int i = 1; i <= 2 * lm.l; ++i) p.knots.push_back(i * W);
      for (int i = 0; i <= 2 * lm.l; ++i)
        p.vals.push_back(i % 2 == 1 ? lm.v1 : 1.0);
      break;
    }
  }
  return p;
}

double piecewise_value(const Profile& p, double x, int side) {
  std::size_t i = 0;
  for (; i < p.knots.size(); ++i) {
    if (side < 0 ? x <= p.knots[i] : x < p.knots[i]) break;
  }
  return p.vals[i];
}

// Medium seen by an interior transmission operator at x_op. orient is +1 for
// a right operator B_j^r (its exterior lies to the right), -1 for B_j^l.
Medium op_medium(const ChainSpec& sp, double x_op, int orient) {
  if (sp.layered.model == LayeredMedium::Model::Constant) return sp.medium;
  const LayeredMedium& lm = sp.layered;
  double v;
  switch (sp.tc_policy) {
    case TcPolicy::DomainAverage:
      v = lm.average_velocity();
      break;
    case TcPolicy::InterfaceValue:
      v = 0.5 * (lm.velocity(x_op, -1) + lm.velocity(x_op, +1));
      break;
    case TcPolicy::NeighborValue:
      v = lm.velocity(x_op, orient);
      break;
    case TcPolicy::OwnValue:
      v = lm.velocity(x_op, -orient);
      break;
    default:
      throw ConfigError("unknown tc_policy");
  }
  return Medium{-lm.omega * lm.omega / (v * v)};
}

Medium boundary_medium(const ChainSpec& sp, double x, int inward) {
  if (sp.layered.model == LayeredMedium::Model::Constant) return sp.medium;
  return Medium{sp.layered.eta(x, inward)};
}

double subdomain_eta(const ChainSpec& sp, int j) {
  if (sp.layered.model == LayeredMedium::Model::Constant)
    return sp.medium.eta;
  return sp.layered.eta(0.5 * (sp.Xl(j) + sp.Xr(j)));
}

bool subdomain_uniform(const ChainSpec& sp, int j, double tol) {
  if (sp.layered.model == LayeredMedium::Model::Constant) return true;
  const double xl = sp.Xl(j), xr = sp.Xr(j);
  for (double b : sp.layered.breakpoints())
    if (b > xl + tol && b < xr - tol) return false;
  return true;
}

struct OpSet {
  QP own_l, own_r;  // B_j^l, B_j^r
  QP nb_l, nb_r;    // B_{j+1}^l (j<N), B_{j-1}^r (j>1)
};

OpSet operators_of(cplx xi, int j, const ChainSpec& sp) {
  OpSet ops;
  ops.own_l = j == 1 ? sp.outer_left.eval(xi, boundary_medium(sp, 0.0, +1))
                     : sp.transmission.eval(xi, op_medium(sp, sp.Xl(j), -1));
  ops.own_r = j == sp.N
                  ? sp.outer_right.eval(xi, boundary_medium(sp, sp.X, -1))
                  : sp.transmission.eval(xi, op_medium(sp, sp.Xr(j), +1));
  if (j < sp.N)
    ops.nb_l = sp.transmission.eval(xi, op_medium(sp, sp.Xl(j + 1), -1));
  if (j > 1)
    ops.nb_r = sp.transmission.eval(xi, op_medium(sp, sp.Xr(j - 1), +1));
  return ops;
}

I2ICoeffs i2i_uniform(cplx xi, int j, const ChainSpec& sp, const OpSet& ops) {
  const cplx s = sqrt_branch(xi * xi + subdomain_eta(sp, j));
  const double H = sp.H, L = sp.L, W = H + 2.0 * L;
  const cplx eH = std::exp(-s * H);
  const cplx e2L = std::exp(-s * (2.0 * L));
  const cplx eW = std::exp(-s * W);
  const cplx eWH = std::exp(-s * (W + H));
  const cplx eH4L = std::exp(-s * (H + 4.0 * L));
  const cplx mlp = ops.own_l.p + ops.own_l.q * s;
  const cplx mlm = ops.own_l.p - ops.own_l.q * s;
  const cplx mrp = ops.own_r.p + ops.own_r.q * s;
  const cplx mrm = ops.own_r.p - ops.own_r.q * s;
  const cplx det = mlp * mrp - mlm * mrm * eW * eW;
  if (det == cplx(0.0) || !std::isfinite(std::abs(det)))
    throw PoleError("subdomain response has a pole");
  I2ICoeffs out;
  if (j < sp.N) {
    const cplx nlp = ops.nb_l.p + ops.nb_l.q * s;
    const cplx nlm = ops.nb_l.p - ops.nb_l.q * s;
    out.a = (mrp * nlp * eH - mrm * nlm * eH4L) / det;
    out.b = (mlp * nlm * e2L - mlm * nlp * eWH) / det;
  }
  if (j > 1) {
    const cplx nrp = ops.nb_r.p + ops.nb_r.q * s;
    const cplx nrm = ops.nb_r.p - ops.nb_r.q * s;
    out.c = (mlp * nrp * eH - mlm * nrm * eH4L) / det;
    out.d = (mrp * nrm * e2L - mrm * nrp * eWH) / det;
  }
  return out;
}

I2ICoeffs i2i_layered(cplx xi, int j, const ChainSpec& sp, const OpSet& ops) {
  const double xl = sp.Xl(j), xr = sp.Xr(j);
  const double tol = 1e-12 * std::max(1.0, sp.X);
  std::vector<double> knots = {xl};
  for (double b : sp.layered.breakpoints())
    if (b > xl + tol && b < xr - tol) knots.push_back(b);
  knots.push_back(xr);
  const int M = int(knots.size()) - 1;

  std::vector<cplx> s(M), ew(M);
  for (int i = 0; i < M; ++i) {
    const double mid = 0.5 * (knots[i] + knots[i + 1]);
    s[i] = sqrt_branch(xi * xi + sp.layered.eta(mid));
    ew[i] = std::exp(-s[i] * (knots[i + 1] - knots[i]));
  }

  // Unknowns (alpha_i, beta_i): u_i = alpha_i e^{-s_i (x - x_i)}
  //                                 + beta_i  e^{ s_i (x - x_{i+1})}.
  Eigen::MatrixXcd sys = Eigen::MatrixXcd::Zero(2 * M, 2 * M);
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(2 * M, 2);
  sys(0, 0) = ops.own_l.p + ops.own_l.q * s[0];
  sys(0, 1) = (ops.own_l.p - ops.own_l.q * s[0]) * ew[0];
  rhs(0, 0) = 1.0;
  for (int i = 0; i + 1 < M; ++i) {
    const int r = 1 + 2 * i;
    sys(r, 2 * i) = ew[i];
    sys(r, 2 * i + 1) = 1.0;
    sys(r, 2 * i + 2) = -1.0;
    sys(r, 2 * i + 3) = -ew[i + 1];
    sys(r + 1, 2 * i) = -s[i] * ew[i];
    sys(r + 1, 2 * i + 1) = s[i];
    sys(r + 1, 2 * i + 2) = s[i + 1];
    sys(r + 1, 2 * i + 3) = -s[i + 1] * ew[i + 1];
  }
  sys(2 * M - 1, 2 * M - 2) = (ops.own_r.p - ops.own_r.q * s[M - 1]) * ew[M - 1];
  sys(2 * M - 1, 2 * M - 1) = ops.own_r.p + ops.own_r.q * s[M - 1];
  rhs(2 * M - 1, 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys);
  Eigen::MatrixXcd sol = lu.solve(rhs);
  if (!sol.allFinite() ||
      (sys * sol - rhs).norm() > 1e-8 * (1.0 + sol.norm())) {
    throw PoleError("subdomain response has a pole");
  }

  auto eval_op = [&](QP op, double x, int sign, int col) {
    int i = 0;
    while (i + 1 < M && x >= knots[i + 1] - tol) ++i;
    const cplx av = std::exp(-s[i] * (x - knots[i]));
    const cplx bv = std::exp(s[i] * (x - knots[i + 1]));
    const cplx al = sol(2 * i, col), be = sol(2 * i + 1, col);
    const cplx u = al * av + be * bv;
    const cplx ux = -s[i] * al * av + s[i] * be * bv;
    return sign > 0 ? op.q * ux + op.p * u : -op.q * ux + op.p * u;
  };

  I2ICoeffs out;
  if (j < sp.N) {
    out.a = eval_op(ops.nb_l, sp.Xl(j + 1), -1, 0);
    out.b = eval_op(ops.nb_l, sp.Xl(j + 1), -1, 1);
  }
  if (j > 1) {
    out.d = eval_op(ops.nb_r, sp.Xr(j - 1), +1, 0);
    out.c = eval_op(ops.nb_r, sp.Xr(j - 1), +1, 1);
  }
  return out;
}

Medium scan_medium(const ChainSpec& sp) {
  if (sp.layered.model == LayeredMedium::Model::Constant) return sp.medium;
  return Medium{-sp.layered.omega * sp.layered.omega};
}

double power_radius(const Eigen::MatrixXcd& T) {
  const Eigen::Index n = T.rows();
  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = 0.0;
  for (int restart = 0; restart < 3; ++restart) {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(gauss(rng), gauss(rng));
    v.normalize();
    double est = 0.0, prev = -1.0;
    int stable = 0;
    for (int it = 0; it < 2000; ++it) {
      Eigen::VectorXcd w = T * v;
      const double nw = w.norm();
      if (nw < 1e-300) {
        est = 0.0;
        break;
      }
      est = nw;
      v = w / nw;
      if (std::abs(est - prev) < 1e-10 * std::max(est, 1e-30)) {
        if (++stable >= 3) break;
      } else {
        stable = 0;
      }
      prev = est;
    }
    best = std::max(best, est);
  }
  return best;
}

}  // namespace

double LayeredMedium::velocity(double x, int side) const {
  return piecewise_value(profile_of(*this), x, side);
}

double LayeredMedium::eta(double x, int side) const {
  const double v = velocity(x, side);
  return -omega * omega / (v * v);
}

double LayeredMedium::average_velocity() const {
  const Profile p = profile_of(*this);
  double acc = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < p.knots.size(); ++i) {
    acc += (p.knots[i] - prev) * p.vals[i];
    prev = p.knots[i];
  }
  acc += (X - prev) * p.vals.back();
  return acc / X;
}

std::vector<double> LayeredMedium::breakpoints() const {
  return profile_of(*this).knots;
}

void ChainSpec::validate() const {
  if (N < 2) throw ConfigError("chain needs N >= 2 subdomains");
  if (!(H > 0.0) || L < 0.0) throw ConfigError("chain needs H > 0, L >= 0");
  if (std::abs(X - (N * H + 2.0 * L)) > 1e-9 * std::max(1.0, X))
    throw ConfigError("chain geometry violates X = N H + 2 L");
  if (layered.model != LayeredMedium::Model::Constant &&
      std::abs(layered.X - X) > 1e-9 * std::max(1.0, X))
    throw ConfigError("layered medium length disagrees with the chain");
}

ChainSpec ChainSpec::uniform(int N, double H, double L, Medium m, SymbolFn tc,
                             SymbolFn outer) {
  ChainSpec sp;
  sp.N = N;
  sp.H = H;
  sp.L = L;
  sp.X = N * H + 2.0 * L;
  sp.medium = m;
  sp.transmission = tc;
  sp.outer_left = outer;
  sp.outer_right = outer;
  return sp;
}

I2ICoeffs i2i_symbols(cplx xi, int j, const ChainSpec& spec) {
  if (j < 1 || j > spec.N) throw ConfigError("subdomain index out of range");
  const OpSet ops = operators_of(xi, j, spec);
  const double tol = 1e-12 * std::max(1.0, spec.X);
  if (subdomain_uniform(spec, j, tol)) return i2i_uniform(xi, j, spec, ops);
  return i2i_layered(xi, j, spec, ops);
}

Eigen::MatrixXcd InterfaceSystem::matrix() const {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXcd M(2 * n, 2 * n);
  M.topLeftCorner(n, n) = Eigen::MatrixXcd::Identity(n, n) - A;
  M.topRightCorner(n, n) = -B;
  M.bottomLeftCorner(n, n) = -D;
  M.bottomRightCorner(n, n) = Eigen::MatrixXcd::Identity(n, n) - C;
  return M;
}

Eigen::VectorXcd InterfaceSystem::rhs(cplx g_left, cplx g_right) const {
  const Eigen::Index n = A.rows();
  Eigen::VectorXcd r = Eigen::VectorXcd::Zero(2 * n);
  r(0) = a1 * g_left;
  r(2 * n - 1) = cN * g_right;
  return r;
}

InterfaceSystem build_interface_system(cplx xi, const ChainSpec& spec) {
  spec.validate();
  const int n = spec.N - 1;
  InterfaceSystem sys;
  sys.A = Eigen::MatrixXcd::Zero(n, n);
  sys.B = Eigen::MatrixXcd::Zero(n, n);
  sys.C = Eigen::MatrixXcd::Zero(n, n);
  sys.D = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 1; j <= spec.N; ++j) {
    const I2ICoeffs co = i2i_symbols(xi, j, spec);
    if (j < spec.N) {
      sys.B(j - 1, j - 1) = co.b;
      if (j >= 2)
        sys.A(j - 1, j - 2) = co.a;
      else
        sys.a1 = co.a;
    }
    if (j > 1) {
      sys.D(j - 2, j - 2) = co.d;
      if (j <= spec.N - 1)
        sys.C(j - 2, j - 1) = co.c;
      else
        sys.cN = co.c;
    }
  }
  return sys;
}

IterationMatrix iteration_matrix(IterKind kind, cplx xi,
                                 const ChainSpec& spec) {
  const InterfaceSystem sys = build_interface_system(xi, spec);
  const Eigen::Index n = sys.A.rows();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  IterationMatrix out;
  out.kind = kind;
  switch (kind) {
    case IterKind::POSM: {
      out.T.resize(2 * n, 2 * n);
      out.T.topLeftCorner(n, n) = sys.A;
      out.T.topRightCorner(n, n) = sys.B;
      out.T.bottomLeftCorner(n, n) = sys.D;
      out.T.bottomRightCorner(n, n) = sys.C;
      break;
    }
    case IterKind::DOSM: {
      Eigen::MatrixXcd FB = (I - sys.A).partialPivLu().solve(sys.B);
      out.T = (I - sys.C).partialPivLu().solve(sys.D * FB);
      break;
    }
    case IterKind::COSM: {
      Eigen::MatrixXcd FB = (I - sys.A).partialPivLu().solve(sys.B);
      Eigen::MatrixXcd BD = (I - sys.C).partialPivLu().solve(sys.D);
      out.T = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
      out.T.topRightCorner(n, n) = FB;
      out.T.bottomLeftCorner(n, n) = BD;
      break;
    }
  }
  return out;
}

double spectral_radius(const Eigen::MatrixXcd& T) {
  const Eigen::Index n = T.rows();
  if (n == 0) return 0.0;
  if (!T.allFinite()) throw PoleError("iteration matrix is not finite");
  if (n <= 1024) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(T, false);
    if (es.info() == Eigen::Success)
      return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return power_radius(T);
}

LimitSpectrum limiting_spectrum(cplx a, cplx b, cplx d, int mu_points) {
  if (mu_points < 2) throw ConfigError("limiting_spectrum needs >= 2 points");
  LimitSpectrum out;
  out.values.reserve(2 * mu_points);
  for (int i = 0; i < mu_points; ++i) {
    const double mu = -kPi + 2.0 * kPi * double(i) / double(mu_points - 1);
    const cplx root = sqrt_branch(b * d - a * a * std::sin(2.0 * mu) *
                                             std::sin(2.0 * mu));
    const cplx base = a * std::cos(2.0 * mu);
    out.values.push_back(base + root);
    out.values.push_back(base - root);
  }
  for (const cplx v : out.values)
    out.radius = std::max(out.radius, std::abs(v));
  return out;
}

namespace {

double block_norm(const Eigen::MatrixXcd& M, NormChoice nc) {
  if (M.rows() == 0) return 0.0;
  if (nc == NormChoice::MaxRowSum)
    return M.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  return svd.singularValues()(0);
}

double geom_sum(double q, int terms) {
  if (terms <= 0) return 0.0;
  if (std::abs(q - 1.0) < 1e-14) return double(terms);
  return (1.0 - std::pow(q, terms)) / (1.0 - q);
}

}  // namespace

double NormBound::posm(int n) const {
  if (!applicable || n < 2 * N)
    return std::numeric_limits<double>::infinity();
  const double e = std::floor(double(n) / double(2 * N - 2) - 1.5);
  return c0 * std::pow(rho_bar, e) / (1.0 - rho_bar);
}

double NormBound::dosm(int n) const {
  if (!applicable || n < 2) return std::numeric_limits<double>::infinity();
  return c0 * (1.0 + rho_bar) * std::pow(rho_bar, n - 1);
}

NormBound norm_bound(cplx xi, const ChainSpec& spec, NormChoice nc) {
  const InterfaceSystem sys = build_interface_system(xi, spec);
  const double na = block_norm(sys.A, nc);
  const double nb = block_norm(sys.B, nc);
  const double ncc = block_norm(sys.C, nc);
  const double nd = block_norm(sys.D, nc);
  NormBound out;
  out.N = spec.N;
  out.rho_bar =
      nb * nd * geom_sum(na, spec.N - 1) * geom_sum(ncc, spec.N - 1);
  if (out.rho_bar == 0.0) {
    out.c0 = 1.0;
  } else {
    out.c0 = (1.0 + out.rho_bar / nb) *
             (1.0 + out.rho_bar / nd + out.rho_bar / (nb * nd));
  }
  out.applicable = out.rho_bar < 1.0;
  return out;
}

ChainMax max_rho_chain(const ChainSpec& spec, const FreqPolicy& policy,
                       IterKind kind) {
  spec.validate();
  ChainMax out;
  auto f = [&](cplx xi) {
    const double r = spectral_radius(iteration_matrix(kind, xi, spec).T);
    out.curve.push_back({xi, r});
    return r;
  };
  const double geom = spec.L > 0.0 ? 2.0 * spec.L : spec.H;
  const ScanResult s =
      scan_max(f, scan_medium(spec), spec.cross_section, policy, geom);
  out.max_rho = s.max_val;
  out.argmax_xi = s.argmax;
  out.divergent = s.max_val >= 1.0;
  out.n_max_used = s.n_max_used;
  out.doubling_change = s.doubling_change;
  out.k_cap_used = s.k_cap_used;
  out.poles = s.poles;
  return out;
}

ScalingResult scaling_sweep(const ScalingPlan& plan) {
  const std::size_t np = plan.points.size();
  std::vector<ChainMax> cms(np);
  const int jobs =
      std::max(1, std::min<int>(plan.jobs, static_cast<int>(np)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < np; ++i)
      cms[i] = max_rho_chain(plan.points[i].spec, plan.freq, plan.kind);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(np);
    auto work = [&]() {
      for (std::size_t i = next.fetch_add(1); i < np; i = next.fetch_add(1)) {
        try {
          cms[i] = max_rho_chain(plan.points[i].spec, plan.freq, plan.kind);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
    for (const std::string& e : errors)
      if (!e.empty()) throw ConvergenceError(e);
  }

  ScalingResult res;
  for (std::size_t i = 0; i < np; ++i) {
    res.param.push_back(plan.points[i].param);
    res.max_rho.push_back(cms[i].max_rho);
    res.divergent.push_back(cms[i].divergent);
    res.n_max_used.push_back(cms[i].n_max_used);
  }

  double pmax = 0.0;
  for (double p : res.param) pmax = std::max(pmax, p);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < res.param.size(); ++i) {
    if (res.param[i] < pmax / 10.0 * (1.0 - 1e-12)) continue;
    double y = plan.fit_one_minus ? 1.0 - res.max_rho[i] : res.max_rho[i];
    if (plan.fit_one_minus && res.divergent[i]) continue;
    if (!(y > 0.0)) continue;
    xs.push_back(std::log(res.param[i]));
    ys.push_back(std::log(y));
  }
  const int n = int(xs.size());
  if (n >= 4) {
    double xm = 0.0, ym = 0.0;
    for (int i = 0; i < n; ++i) {
      xm += xs[i];
      ym += ys[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < n; ++i) {
      sxx += (xs[i] - xm) * (xs[i] - xm);
      sxy += (xs[i] - xm) * (ys[i] - ym);
    }
    const double slope = sxy / sxx;
    const double icept = ym - slope * xm;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = ys[i] - (icept + slope * xs[i]);
      ssr += r * r;
    }
    res.fit.valid = true;
    res.fit.exponent = slope;
    res.fit.exponent_stderr =
        n > 2 ? std::sqrt(ssr / double(n - 2) / sxx) : 0.0;
    res.fit.intercept = icept;
    res.fit.points_used = n;
  }
  return res;
}

PolicyEtas layered_policy(const ChainSpec& spec, TcPolicy policy) {
  spec.validate();
  ChainSpec sp = spec;
  sp.tc_policy = policy;
  PolicyEtas out;
  for (int j = 1; j <= sp.N; ++j) {
    out.left_op.push_back(j == 1 ? boundary_medium(sp, 0.0, +1).eta
                                 : op_medium(sp, sp.Xl(j), -1).eta);
    out.right_op.push_back(j == sp.N
                               ? boundary_medium(sp, sp.X, -1).eta
                               : op_medium(sp, sp.Xr(j), +1).eta);
  }
  return out;
}

}  // namespace schwarz
