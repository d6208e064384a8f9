#include "oracles.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace oracle {
namespace {

constexpr double kPi = 3.14159265358979323846;

int aligned_index(double x, double a, double h) {
  const double t = (x - a) / h;
  const int i = static_cast<int>(std::llround(t));
  if (std::abs(t - i) > 1e-8)
    throw std::invalid_argument("point not aligned with the oracle grid");
  return i;
}

/// Richardson table for r[k] at h, h/2, h/4, ... whose error expansion
/// starts at h^order (order + 1, order + 2, ... beyond).
cplx richardson(std::vector<cplx> r, double order = 2.0) {
  while (r.size() > 1) {
    const double w = std::pow(2.0, order);
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
      r[i] = (w * r[i + 1] - r[i]) / (w - 1.0);
    r.pop_back();
    order += 1.0;
  }
  return r[0];
}

cplx eta_at(const ChainSpec& spec, double x) {
  if (spec.layered.model == schwarz::LayeredMedium::Model::Constant)
    return spec.medium.eta;
  // trapezoid value at breakpoints keeps the scheme second order there
  return 0.5 * (spec.layered.eta(x, -1) + spec.layered.eta(x, +1));
}

}  // namespace

cplx BvpSolution::value(double x) const {
  return u[aligned_index(x, a, h)];
}

cplx BvpSolution::deriv(double x) const {
  const int i = aligned_index(x, a, h);
  const int n = static_cast<int>(u.size()) - 1;
  if (i == 0) return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  if (i == n) return (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
  return (u[i + 1] - u[i - 1]) / (2.0 * h);
}

BvpSolution solve_bvp(const Bvp& bvp, int n) {
  if (n < 4) throw std::invalid_argument("need at least 4 intervals");
  const double h = (bvp.b - bvp.a) / n;
  const double ih2 = 1.0 / (h * h);
  using Trip = Eigen::Triplet<cplx>;
  std::vector<Trip> trip;
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n + 1);

  // left row: -q u'(a) + p u(a) = gl, one-sided second-order derivative
  trip.emplace_back(0, 0, 3.0 * bvp.left.q / (2.0 * h) + bvp.left.p);
  trip.emplace_back(0, 1, -2.0 * bvp.left.q / h);
  trip.emplace_back(0, 2, bvp.left.q / (2.0 * h));
  rhs(0) = bvp.gl;

  for (int i = 1; i < n; ++i) {
    const double x = bvp.a + i * h;
    trip.emplace_back(i, i, 2.0 * ih2 + bvp.coef(x));
    trip.emplace_back(i, i - 1, cplx(-ih2, 0.0));
    trip.emplace_back(i, i + 1, cplx(-ih2, 0.0));
  }

  // right row: q u'(b) + p u(b) = gr
  trip.emplace_back(n, n, 3.0 * bvp.right.q / (2.0 * h) + bvp.right.p);
  trip.emplace_back(n, n - 1, -2.0 * bvp.right.q / h);
  trip.emplace_back(n, n - 2, bvp.right.q / (2.0 * h));
  rhs(n) = bvp.gr;

  Eigen::SparseMatrix<cplx> A(n + 1, n + 1);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("oracle BVP is singular");
  Eigen::VectorXcd sol = lu.solve(rhs);

  BvpSolution out;
  out.a = bvp.a;
  out.h = h;
  out.u.assign(sol.data(), sol.data() + sol.size());
  return out;
}

cplx dtn_sigma(double a, double b, const std::function<cplx(double)>& coef,
               Side side, QP outer, int n0, int levels) {
  std::vector<cplx> seq;
  for (int l = 0; l < levels; ++l) {
    const int n = n0 << l;
    Bvp bvp;
    bvp.a = a;
    bvp.b = b;
    bvp.coef = coef;
    if (side == Side::Right) {
      bvp.left = QP{cplx(0.0, 0.0), cplx(1.0, 0.0)};
      bvp.gl = 1.0;
      bvp.right = outer;
      BvpSolution s = solve_bvp(bvp, n);
      seq.push_back(-s.deriv(a) / s.value(a));
    } else {
      bvp.right = QP{cplx(0.0, 0.0), cplx(1.0, 0.0)};
      bvp.gr = 1.0;
      bvp.left = outer;
      BvpSolution s = solve_bvp(bvp, n);
      seq.push_back(s.deriv(b) / s.value(b));
    }
  }
  return richardson(std::move(seq));
}

cplx pml_sigma(cplx xi, const Medium& m, const PmlSpec& pml, int n0,
               int levels) {
  const cplx c = m.wave() ? cplx(2.0, -pml.gamma) : cplx(2.0 + pml.gamma, 0.0);
  const cplx ms = 0.5 * c;
  const cplx coef = ms * ms * (xi * xi + m.eta);
  const QP outer = pml.termination == schwarz::Termination::Dirichlet
                       ? QP{cplx(0.0, 0.0), cplx(1.0, 0.0)}
                       : QP{cplx(1.0, 0.0), cplx(0.0, 0.0)};
  // sigma seen by the subdomain is the stretched flux -(1/ms) u'(0) / u(0)
  const cplx raw = dtn_sigma(
      0.0, pml.D, [coef](double) { return coef; }, Side::Right, outer, n0,
      levels);
  return raw / ms;
}

cplx alternating_ratio(cplx k, const TwoSubConfig& cfg, int n0, int levels) {
  const Medium& m = cfg.medium;
  std::vector<cplx> seq;
  for (int l = 0; l < levels; ++l) {
    const int n = n0 << l;
    const double h = 1.0 / n;
    const QP b1 = cfg.trans_right_of_1.eval(k, m);
    const QP b2 = cfg.trans_left_of_2.eval(k, m);
    auto coef = [&](double) { return cplx(k * k + m.eta); };

    // subdomain 1 on (0, X1r) with datum g at X1r
    Bvp p1;
    p1.a = 0.0;
    p1.b = cfg.X1r;
    p1.coef = coef;
    p1.left = cfg.outer_left.eval(k, m);
    p1.right = b1;
    p1.gr = 1.0;
    BvpSolution u1 = solve_bvp(p1, aligned_index(cfg.X1r, 0.0, h));

    // subdomain 2 datum: B2 u1 at X2l (interior to subdomain 1)
    const cplx g2 = -b2.q * u1.deriv(cfg.X2l) + b2.p * u1.value(cfg.X2l);

    Bvp p2;
    p2.a = cfg.X2l;
    p2.b = 1.0;
    p2.coef = coef;
    p2.left = b2;
    p2.gl = g2;
    p2.right = cfg.outer_right.eval(k, m);
    BvpSolution u2 = solve_bvp(p2, aligned_index(1.0, cfg.X2l, h));

    // next subdomain 1 datum: B1 u2 at X1r
    seq.push_back(b1.q * u2.deriv(cfg.X1r) + b1.p * u2.value(cfg.X1r));
  }
  return richardson(std::move(seq));
}

int winding_count(const std::function<cplx(cplx)>& f, cplx lo, cplx hi,
                  int samples_per_edge) {
  const cplx corners[5] = {lo, cplx(hi.real(), lo.imag()), hi,
                           cplx(lo.real(), hi.imag()), lo};
  double total = 0.0;
  cplx prev = f(lo);
  if (std::abs(prev) == 0.0)
    throw std::runtime_error("zero on the winding contour");
  for (int e = 0; e < 4; ++e)
    for (int i = 1; i <= samples_per_edge; ++i) {
      const double t = static_cast<double>(i) / samples_per_edge;
      const cplx z = corners[e] + t * (corners[e + 1] - corners[e]);
      const cplx v = f(z);
      if (std::abs(v) == 0.0)
        throw std::runtime_error("zero on the winding contour");
      total += std::arg(v / prev);
      prev = v;
    }
  const double winds = total / (2.0 * kPi);
  const int count = static_cast<int>(std::llround(winds));
  if (std::abs(winds - count) > 0.1)
    throw std::runtime_error("winding number failed to settle");
  return count;
}

I2ICoeffs i2i_fd(cplx xi, int j, const ChainSpec& spec, QP own_l, QP own_r,
                 QP nb_l, QP nb_r, int n0, int levels) {
  const double xl = spec.Xl(j);
  const double xr = spec.Xr(j);
  auto coef = [&](double x) { return xi * xi + eta_at(spec, x); };

  // a reaction-coefficient jump inside the subdomain leaves a first-order
  // defect at its node, so the extrapolation table must start at h^1
  double order = 2.0;
  const double tol = 1e-12 * std::max(1.0, spec.X);
  for (double bp : spec.layered.breakpoints())
    if (bp > xl + tol && bp < xr - tol) order = 1.0;

  std::vector<cplx> sa, sb, sc, sd;
  for (int l = 0; l < levels; ++l) {
    const int n = n0 << l;
    const double h = (xr - xl) / n;
    for (int pass = 0; pass < 2; ++pass) {
      Bvp bvp;
      bvp.a = xl;
      bvp.b = xr;
      bvp.coef = coef;
      bvp.left = own_l;
      bvp.right = own_r;
      bvp.gl = pass == 0 ? 1.0 : 0.0;
      bvp.gr = pass == 0 ? 0.0 : 1.0;
      BvpSolution u = solve_bvp(bvp, n);

      cplx to_next{}, to_prev{};
      if (j < spec.N) {
        const double x = spec.Xl(j + 1);
        aligned_index(x, xl, h);
        to_next = -nb_l.q * u.deriv(x) + nb_l.p * u.value(x);
      }
      if (j > 1) {
        const double x = spec.Xr(j - 1);
        aligned_index(x, xl, h);
        to_prev = nb_r.q * u.deriv(x) + nb_r.p * u.value(x);
      }
      (pass == 0 ? sa : sb).push_back(to_next);
      (pass == 0 ? sd : sc).push_back(to_prev);
    }
  }

  I2ICoeffs out;
  out.a = richardson(std::move(sa), order);
  out.b = richardson(std::move(sb), order);
  out.c = richardson(std::move(sc), order);
  out.d = richardson(std::move(sd), order);
  return out;
}

}  // namespace oracle
