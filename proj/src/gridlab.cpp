#include "schwarz/gridlab.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <optional>

namespace schwarz {
namespace {

struct Box {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;  // half-open column/row ranges
  int w() const { return i1 - i0; }
  int hgt() const { return j1 - j0; }
  int n() const { return w() * hgt(); }
  bool contains(int i, int j) const {
    return i >= i0 && i < i1 && j >= j0 && j < j1;
  }
};

std::vector<int> cuts_of(int n, int parts) {
  std::vector<int> c(parts + 1);
  for (int t = 0; t <= parts; ++t)
    c[t] = static_cast<int>(std::llround(static_cast<double>(t) * n / parts));
  return c;
}

struct Layout {
  int px = 1, py = 1;
  std::vector<int> cx, cy;       // base cuts
  std::vector<Box> base;         // non-overlapping partition
  std::vector<Box> extended;     // with algebraic overlap
  int count() const { return px * py; }
  int id(int tx, int ty) const { return ty * px + tx; }
};

Layout make_layout(const Grid2D& g, const Decomposition& dec) {
  Layout lay;
  lay.px = dec.px;
  lay.py = dec.kind == Decomposition::Kind::Strip ? 1 : dec.py;
  if (lay.px < 1 || lay.py < 1) throw ConfigError("empty decomposition");
  lay.cx = cuts_of(g.nx, lay.px);
  lay.cy = cuts_of(g.ny, lay.py);
  const int ov = dec.overlap;
  const int el = ov / 2, er = ov - el;  // right box reaches el back, left box er forward
  for (int ty = 0; ty < lay.py; ++ty)
    for (int tx = 0; tx < lay.px; ++tx) {
      Box b{lay.cx[tx], lay.cx[tx + 1], lay.cy[ty], lay.cy[ty + 1]};
      lay.base.push_back(b);
      Box e = b;
      if (tx > 0) e.i0 -= el;
      if (tx + 1 < lay.px) e.i1 += er;
      if (ty > 0) e.j0 -= el;
      if (ty + 1 < lay.py) e.j1 += er;
      if (e.i0 < 0 || e.i1 > g.nx || e.j0 < 0 || e.j1 > g.ny || e.w() < 2 ||
          e.hgt() < 2)
        throw ConfigError("overlap does not fit the grid");
      lay.extended.push_back(e);
    }
  for (int t = 0; t < lay.count(); ++t)
    if (lay.base[t].w() <= dec.overlap || lay.base[t].hgt() < 1)
      throw ConfigError("subdomains too thin for the requested overlap");
  return lay;
}

Eigen::MatrixXcd column_block(const Grid2D& g, const Medium& m, int height) {
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(height, height);
  const double ih2 = 1.0 / (g.h * g.h);
  for (int j = 0; j < height; ++j) {
    Y(j, j) = 2.0 * ih2 + m.eta;
    if (j > 0) Y(j, j - 1) = -ih2;
    if (j + 1 < height) Y(j, j + 1) = -ih2;
  }
  return Y;
}

/**
 * Dense closure of a constant-stretch absorbing layer of `layers` cells
 * appended beyond a strip interface column. Cell stretch is c/2 with
 * c = 2+gamma for diffusion and 2-i*gamma for waves, matching the continuous
 * layer symbol; node rows carry the trapezoid average of the adjacent cell
 * stretches. The transmission functional on the interface column is
 * B(w) = phi * w_col + cl * w_inward.
 */
struct PmlSide {
  Eigen::MatrixXcd phi;
  cplx cl{};
};

PmlSide pml_side(const Grid2D& g, const Medium& m, int height,
                 const DiscreteTC& tc) {
  if (tc.layers < 1) throw ConfigError("absorbing layer needs >= 1 cell");
  const cplx c = m.wave() ? cplx(2.0, -tc.gamma) : cplx(2.0 + tc.gamma, 0.0);
  const cplx ms = 0.5 * c;
  const double ih2 = 1.0 / (g.h * g.h);
  const Eigen::MatrixXcd Y = column_block(g, m, height);
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(height, height);

  const cplx xdiag_layer = 2.0 / (ms * ms) * ih2;
  const cplx coup_layer = -1.0 / (ms * ms) * ih2;
  Eigen::MatrixXcd S = xdiag_layer * I + Y;
  for (int l = tc.layers - 1; l >= 1; --l) {
    Eigen::MatrixXcd Sinv = S.partialPivLu().solve(I);
    S = xdiag_layer * I + Y - (coup_layer * coup_layer) * Sinv;
  }

  const cplx mbar = 0.5 * (1.0 + ms);
  const cplx xdiag_if = (1.0 / mbar) * (1.0 + 1.0 / ms) * ih2;
  const cplx cr_if = -1.0 / (mbar * ms) * ih2;
  Eigen::MatrixXcd Sinv = S.partialPivLu().solve(I);
  PmlSide out;
  out.phi = xdiag_if * I + Y - (cr_if * coup_layer) * Sinv;
  out.cl = -(1.0 / mbar) * ih2;
  return out;
}

struct Subproblem {
  Box box;
  bool if_l = false, if_r = false, if_b = false, if_t = false;
  std::vector<int> global_of_local;
  Eigen::SparseMatrix<cplx> M;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  std::optional<PmlSide> pml_l, pml_r;

  int li(int i, int j) const {
    return (i - box.i0) * box.hgt() + (j - box.j0);
  }
};

bool robin_row_x(const Subproblem& s, int i) {
  return (s.if_r && i == s.box.i1 - 1) || (s.if_l && i == s.box.i0);
}

bool robin_row_y(const Subproblem& s, int j) {
  return (s.if_t && j == s.box.j1 - 1) || (s.if_b && j == s.box.j0);
}

void build_subproblem(Subproblem& s, const System2D& sys,
                      const DiscreteTC& tc) {
  const Grid2D& g = sys.grid;
  const double ih2 = 1.0 / (g.h * g.h);
  const double ih = 1.0 / g.h;
  const Box& b = s.box;
  s.global_of_local.resize(b.n());
  for (int i = b.i0; i < b.i1; ++i)
    for (int j = b.j0; j < b.j1; ++j) s.global_of_local[s.li(i, j)] = g.idx(i, j);

  if (tc.kind == DiscreteTC::Kind::DiscretePML) {
    if (s.if_b || s.if_t)
      throw ConfigError("discrete absorbing layers support strips only");
    if (s.if_l) s.pml_l = pml_side(g, sys.medium, b.hgt(), tc);
    if (s.if_r) s.pml_r = pml_side(g, sys.medium, b.hgt(), tc);
  }

  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(b.n()) * 5);
  for (int i = b.i0; i < b.i1; ++i)
    for (int j = b.j0; j < b.j1; ++j) {
      const int row = s.li(i, j);
      if (tc.kind == DiscreteTC::Kind::Robin && robin_row_x(s, i)) {
        const int dir = i == b.i1 - 1 ? -1 : 1;  // inward neighbor
        trip.emplace_back(row, row, tc.p + ih);
        trip.emplace_back(row, s.li(i + dir, j), cplx(-ih, 0.0));
        continue;
      }
      if (tc.kind == DiscreteTC::Kind::Robin && robin_row_y(s, j)) {
        const int dir = j == b.j1 - 1 ? -1 : 1;
        trip.emplace_back(row, row, tc.p + ih);
        trip.emplace_back(row, s.li(i, j + dir), cplx(-ih, 0.0));
        continue;
      }
      if (tc.kind == DiscreteTC::Kind::DiscretePML &&
          ((s.pml_r && i == b.i1 - 1) || (s.pml_l && i == b.i0))) {
        const PmlSide& ps = i == b.i0 ? *s.pml_l : *s.pml_r;
        const int inward = i == b.i0 ? i + 1 : i - 1;
        for (int jc = b.j0; jc < b.j1; ++jc)
          trip.emplace_back(row, s.li(i, jc), ps.phi(j - b.j0, jc - b.j0));
        trip.emplace_back(row, s.li(inward, j), ps.cl);
        continue;
      }
      trip.emplace_back(row, row, 4.0 * ih2 + sys.medium.eta);
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int q = 0; q < 4; ++q) {
        const int ii = i + di[q], jj = j + dj[q];
        if (b.contains(ii, jj))
          trip.emplace_back(row, s.li(ii, jj), cplx(-ih2, 0.0));
        // a neighbor outside the box is either the homogeneous outer
        // boundary or Dirichlet transmission data handled in the rhs
      }
    }
  s.M.resize(b.n(), b.n());
  s.M.setFromTriplets(trip.begin(), trip.end());
  s.M.makeCompressed();
  s.lu.compute(s.M);
  if (s.lu.info() != Eigen::Success)
    throw PoleError("singular subdomain system");
}

Eigen::VectorXcd subproblem_rhs(const Subproblem& s, const System2D& sys,
                                const DiscreteTC& tc,
                                const Eigen::VectorXcd& v) {
  const Grid2D& g = sys.grid;
  const double ih2 = 1.0 / (g.h * g.h);
  const double ih = 1.0 / g.h;
  const Box& b = s.box;
  Eigen::VectorXcd rhs(b.n());
  for (int i = b.i0; i < b.i1; ++i)
    for (int j = b.j0; j < b.j1; ++j) {
      const int row = s.li(i, j);
      if (tc.kind == DiscreteTC::Kind::Robin && robin_row_x(s, i)) {
        const int dir = i == b.i1 - 1 ? -1 : 1;
        rhs(row) = (tc.p + ih) * v(g.idx(i, j)) - ih * v(g.idx(i + dir, j));
        continue;
      }
      if (tc.kind == DiscreteTC::Kind::Robin && robin_row_y(s, j)) {
        const int dir = j == b.j1 - 1 ? -1 : 1;
        rhs(row) = (tc.p + ih) * v(g.idx(i, j)) - ih * v(g.idx(i, j + dir));
        continue;
      }
      if (tc.kind == DiscreteTC::Kind::DiscretePML &&
          ((s.pml_r && i == b.i1 - 1) || (s.pml_l && i == b.i0))) {
        const PmlSide& ps = i == b.i0 ? *s.pml_l : *s.pml_r;
        const int inward = i == b.i0 ? i + 1 : i - 1;
        cplx acc = ps.cl * v(g.idx(inward, j));
        for (int jc = b.j0; jc < b.j1; ++jc)
          acc += ps.phi(j - b.j0, jc - b.j0) * v(g.idx(i, jc));
        rhs(row) = acc;
        continue;
      }
      cplx acc = sys.f(g.idx(i, j));
      const int di[4] = {1, -1, 0, 0};
      const int dj[4] = {0, 0, 1, -1};
      for (int q = 0; q < 4; ++q) {
        const int ii = i + di[q], jj = j + dj[q];
        if (b.contains(ii, jj)) continue;
        if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) continue;
        acc += ih2 * v(g.idx(ii, jj));  // Dirichlet transmission data
      }
      rhs(row) = acc;
    }
  return rhs;
}

void require_overlap(const Decomposition& dec, const DiscreteTC& tc) {
  const int need = tc.kind == DiscreteTC::Kind::Dirichlet ? 1 : 2;
  if (dec.overlap < need)
    throw ConfigError("transmission condition needs more overlap");
}

/* ---------------------------------------------------------------- strips */

struct StripBlocks {
  std::vector<Box> boxes;
  std::vector<Eigen::MatrixXcd> A;  // dense diagonal blocks
  std::vector<Eigen::VectorXcd> f;
};

StripBlocks strip_blocks(const System2D& sys, const Decomposition& dec) {
  if (dec.kind != Decomposition::Kind::Strip)
    throw ConfigError("strip partition required");
  const Grid2D& g = sys.grid;
  Decomposition base = dec;
  base.overlap = 0;
  Layout lay = make_layout(g, base);
  StripBlocks sb;
  sb.boxes = lay.base;
  for (const Box& b : sb.boxes) {
    Eigen::MatrixXcd Ab = Eigen::MatrixXcd::Zero(b.n(), b.n());
    Eigen::VectorXcd fb(b.n());
    const double ih2 = 1.0 / (g.h * g.h);
    auto loc = [&](int i, int j) { return (i - b.i0) * b.hgt() + (j - b.j0); };
    for (int i = b.i0; i < b.i1; ++i)
      for (int j = b.j0; j < b.j1; ++j) {
        const int r = loc(i, j);
        Ab(r, r) = 4.0 * ih2 + sys.medium.eta;
        if (i > b.i0) Ab(r, loc(i - 1, j)) = -ih2;
        if (i + 1 < b.i1) Ab(r, loc(i + 1, j)) = -ih2;
        if (j > b.j0) Ab(r, loc(i, j - 1)) = -ih2;
        if (j + 1 < b.j1) Ab(r, loc(i, j + 1)) = -ih2;
        fb(r) = sys.f(g.idx(i, j));
      }
    sb.A.push_back(std::move(Ab));
    sb.f.push_back(std::move(fb));
  }
  return sb;
}

// (S^+_{i+1})^{-1} restricted to its first-column block, scaled by 1/h^4
Eigen::MatrixXcd half_chain_correction(const Eigen::MatrixXcd& Snext,
                                       int height, double h) {
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(Snext.rows(), height);
  for (int j = 0; j < height; ++j) E(j, j) = 1.0;
  Eigen::MatrixXcd Z = Snext.partialPivLu().solve(E);
  return Z.topRows(height) / (h * h * h * h);
}

Eigen::MatrixXcd mirrored_correction(const Eigen::MatrixXcd& Sprev,
                                     int height, double h) {
  const int n = static_cast<int>(Sprev.rows());
  Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(n, height);
  for (int j = 0; j < height; ++j) E(n - height + j, j) = 1.0;
  Eigen::MatrixXcd Z = Sprev.partialPivLu().solve(E);
  return Z.bottomRows(height) / (h * h * h * h);
}

/* ---------------------------------------------------------------- blocks */

struct BlockMatrix {
  Layout lay;
  std::vector<std::vector<int>> nodes;         // per block, global indices
  std::vector<int> block_of, local_of;         // per node
  std::vector<std::vector<Eigen::MatrixXcd>> blk;  // [i][j], empty if zero
  std::vector<Eigen::VectorXcd> f;
};

BlockMatrix split_blocks(const System2D& sys, const Decomposition& dec) {
  const Grid2D& g = sys.grid;
  Decomposition base = dec;
  base.overlap = 0;
  BlockMatrix bm;
  bm.lay = make_layout(g, base);
  const int P = bm.lay.count();
  bm.nodes.resize(P);
  bm.block_of.resize(g.size());
  bm.local_of.resize(g.size());
  for (int t = 0; t < P; ++t) {
    const Box& b = bm.lay.base[t];
    for (int i = b.i0; i < b.i1; ++i)
      for (int j = b.j0; j < b.j1; ++j) {
        const int n = g.idx(i, j);
        bm.block_of[n] = t;
        bm.local_of[n] = static_cast<int>(bm.nodes[t].size());
        bm.nodes[t].push_back(n);
      }
  }
  bm.blk.assign(P, std::vector<Eigen::MatrixXcd>(P));
  for (int k = 0; k < sys.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(sys.A, k); it; ++it) {
      const int br = bm.block_of[it.row()], bc = bm.block_of[it.col()];
      Eigen::MatrixXcd& B = bm.blk[br][bc];
      if (B.size() == 0)
        B = Eigen::MatrixXcd::Zero(bm.nodes[br].size(), bm.nodes[bc].size());
      B(bm.local_of[it.row()], bm.local_of[it.col()]) = it.value();
    }
  bm.f.resize(P);
  for (int t = 0; t < P; ++t) {
    bm.f[t].resize(bm.nodes[t].size());
    for (std::size_t l = 0; l < bm.nodes[t].size(); ++l)
      bm.f[t](l) = sys.f(bm.nodes[t][l]);
  }
  return bm;
}

std::vector<int> elimination_order(const Layout& lay, BlockOrdering ord) {
  std::vector<int> order;
  const int px = lay.px, py = lay.py;
  switch (ord) {
    case BlockOrdering::Lexicographic:
      for (int ty = 0; ty < py; ++ty)
        for (int tx = 0; tx < px; ++tx) order.push_back(lay.id(tx, ty));
      break;
    case BlockOrdering::LSweep:
      // fronts max(tx,ty)=k, walked down the column then back along the row
      for (int k = 0; k < std::max(px, py); ++k) {
        for (int ty = 0; ty <= k; ++ty)
          if (ty < py && k < px) order.push_back(lay.id(k, ty));
        for (int tx = k - 1; tx >= 0; --tx)
          if (k < py && tx < px) order.push_back(lay.id(tx, k));
      }
      break;
    case BlockOrdering::DSweep:
      // anti-diagonal fronts tx+ty=s
      for (int s = 0; s <= px + py - 2; ++s)
        for (int ty = 0; ty <= s; ++ty) {
          const int tx = s - ty;
          if (tx >= 0 && tx < px && ty < py) order.push_back(lay.id(tx, ty));
        }
      break;
  }
  return order;
}

int block_nnz(const Eigen::MatrixXcd& B, double tol) {
  int n = 0;
  for (Eigen::Index c = 0; c < B.cols(); ++c)
    for (Eigen::Index r = 0; r < B.rows(); ++r)
      if (std::abs(B(r, c)) > tol) ++n;
  return n;
}

}  // namespace

Grid2D Grid2D::square(int nx) {
  if (nx < 2) throw ConfigError("grid too small");
  Grid2D g;
  g.nx = nx;
  g.ny = nx;
  g.h = 1.0 / (nx + 1);
  return g;
}

Grid2D Grid2D::strip(int nx, double Y) {
  if (nx < 2) throw ConfigError("grid too small");
  Grid2D g;
  g.nx = nx;
  g.h = 1.0 / (nx + 1);
  const double cells = Y / g.h;
  const int m = static_cast<int>(std::llround(cells));
  if (m < 2 || std::abs(cells - m) > 1e-9)
    throw ConfigError("cross-section height must be a multiple of h");
  g.ny = m - 1;
  return g;
}

System2D assemble(const Grid2D& g, const Medium& m,
                  const std::function<cplx(double, double)>& source) {
  System2D sys;
  sys.grid = g;
  sys.medium = m;
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(g.size()) * 5);
  sys.f.resize(g.size());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      const int r = g.idx(i, j);
      trip.emplace_back(r, r, 4.0 * ih2 + m.eta);
      if (i > 0) trip.emplace_back(r, g.idx(i - 1, j), cplx(-ih2, 0.0));
      if (i + 1 < g.nx) trip.emplace_back(r, g.idx(i + 1, j), cplx(-ih2, 0.0));
      if (j > 0) trip.emplace_back(r, g.idx(i, j - 1), cplx(-ih2, 0.0));
      if (j + 1 < g.ny) trip.emplace_back(r, g.idx(i, j + 1), cplx(-ih2, 0.0));
      sys.f(r) = source(g.x(i), g.y(j));
    }
  sys.A.resize(g.size(), g.size());
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

Eigen::VectorXcd reference_solution(const System2D& sys) {
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu(sys.A);
  if (lu.info() != Eigen::Success) throw PoleError("singular system");
  Eigen::VectorXcd u = lu.solve(sys.f);
  const double fs = std::max(sys.f.lpNorm<Eigen::Infinity>(), 1e-300);
  for (int pass = 0; pass < 5; ++pass) {
    Eigen::VectorXcd r = sys.f - sys.A * u;
    if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * fs) break;
    u += lu.solve(r);
  }
  return u;
}

SchwarzRun schwarz_run(const System2D& sys, const Decomposition& dec,
                       const DiscreteTC& tc, SweepOrder order, int sweeps) {
  require_overlap(dec, tc);
  const Grid2D& g = sys.grid;
  Layout lay = make_layout(g, dec);
  const int P = lay.count();

  std::vector<Subproblem> sub(P);
  for (int t = 0; t < P; ++t) {
    const int tx = t % lay.px, ty = t / lay.px;
    sub[t].box = lay.extended[t];
    sub[t].if_l = tx > 0;
    sub[t].if_r = tx + 1 < lay.px;
    sub[t].if_b = ty > 0;
    sub[t].if_t = ty + 1 < lay.py;
    build_subproblem(sub[t], sys, tc);
  }

  // base-partition partition of unity for the parallel glue
  std::vector<int> owner(g.size());
  for (int t = 0; t < P; ++t) {
    const Box& b = lay.base[t];
    for (int i = b.i0; i < b.i1; ++i)
      for (int j = b.j0; j < b.j1; ++j) owner[g.idx(i, j)] = t;
  }

  const Eigen::VectorXcd uref = reference_solution(sys);
  const double scale = std::max(uref.lpNorm<Eigen::Infinity>(), 1e-300);

  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(g.size());
  SchwarzRun run;

  auto apply = [&](int t, const Eigen::VectorXcd& data, Eigen::VectorXcd& into,
                   bool restrict_to_base) {
    Eigen::VectorXcd loc = sub[t].lu.solve(subproblem_rhs(sub[t], sys, tc, data));
    const Box& b = sub[t].box;
    const Box& o = lay.base[t];
    for (int i = b.i0; i < b.i1; ++i)
      for (int j = b.j0; j < b.j1; ++j) {
        if (restrict_to_base && !o.contains(i, j)) continue;
        into(g.idx(i, j)) = loc(sub[t].li(i, j));
      }
  };

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    if (order == SweepOrder::Parallel) {
      Eigen::VectorXcd next = u;
      for (int t = 0; t < P; ++t) apply(t, u, next, true);
      u = next;
    } else {
      for (int t = 0; t < P; ++t) apply(t, u, u, false);
      if (order == SweepOrder::DoubleSweep)
        for (int t = P - 2; t >= 0; --t) apply(t, u, u, false);
    }
    run.error_history.push_back((u - uref).lpNorm<Eigen::Infinity>() / scale);
  }
  run.u = u;
  return run;
}

DtnSchurTC dtn_schur_tc(const System2D& sys, const Decomposition& dec,
                        int subdomain, Side side) {
  StripBlocks sb = strip_blocks(sys, dec);
  const int P = static_cast<int>(sb.boxes.size());
  if (subdomain < 0 || subdomain >= P) throw ConfigError("no such subdomain");
  const int height = sys.grid.ny;
  DtnSchurTC out;
  if (side == Side::Right) {
    if (subdomain + 1 >= P) throw ConfigError("no interface on that side");
    Eigen::MatrixXcd S = sb.A[P - 1];
    for (int i = P - 2; i > subdomain; --i) {
      Eigen::MatrixXcd T = half_chain_correction(S, height, sys.grid.h);
      S = sb.A[i];
      S.bottomRightCorner(height, height) -= T;
    }
    out.schur = half_chain_correction(S, height, sys.grid.h);
    out.column = sb.boxes[subdomain].i1 - 1;
  } else {
    if (subdomain == 0) throw ConfigError("no interface on that side");
    Eigen::MatrixXcd S = sb.A[0];
    for (int i = 1; i < subdomain; ++i) {
      Eigen::MatrixXcd T = mirrored_correction(S, height, sys.grid.h);
      S = sb.A[i];
      S.topLeftCorner(height, height) -= T;
    }
    out.schur = mirrored_correction(S, height, sys.grid.h);
    out.column = sb.boxes[subdomain].i0;
  }
  return out;
}

Eigen::VectorXcd dtn_schur_double_sweep(const System2D& sys,
                                        const Decomposition& dec) {
  StripBlocks sb = strip_blocks(sys, dec);
  const int P = static_cast<int>(sb.boxes.size());
  const int height = sys.grid.ny;
  const double ih2 = 1.0 / (sys.grid.h * sys.grid.h);

  // backward pass: eliminate everything to the right, S_i = A_ii - T_i
  std::vector<Eigen::MatrixXcd> S(P);
  S[P - 1] = sb.A[P - 1];
  for (int i = P - 2; i >= 0; --i) {
    Eigen::MatrixXcd T = half_chain_correction(S[i + 1], height, sys.grid.h);
    S[i] = sb.A[i];
    S[i].bottomRightCorner(height, height) -= T;
  }
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu;
  lu.reserve(P);
  for (int i = 0; i < P; ++i) lu.emplace_back(S[i]);

  std::vector<Eigen::VectorXcd> w(P);
  w[P - 1] = lu[P - 1].solve(sb.f[P - 1]);
  for (int i = P - 2; i >= 0; --i) {
    Eigen::VectorXcd rhs = sb.f[i];
    rhs.tail(height) += ih2 * w[i + 1].head(height);  // -A_{i,i+1} w_{i+1}
    w[i] = lu[i].solve(rhs);
  }

  // forward pass: the same right closures, data now exact from the left
  std::vector<Eigen::VectorXcd> u(P);
  u[0] = w[0];
  for (int i = 1; i < P; ++i) {
    Eigen::VectorXcd rhs = sb.f[i];
    rhs.head(height) += ih2 * u[i - 1].tail(height);  // -A_{i,i-1} u_{i-1}
    if (i + 1 < P) rhs.tail(height) += ih2 * w[i + 1].head(height);
    u[i] = lu[i].solve(rhs);
  }

  Eigen::VectorXcd out(sys.grid.size());
  for (int t = 0; t < P; ++t) {
    const Box& b = sb.boxes[t];
    auto loc = [&](int i, int j) { return (i - b.i0) * b.hgt() + (j - b.j0); };
    for (int i = b.i0; i < b.i1; ++i)
      for (int j = b.j0; j < b.j1; ++j)
        out(sys.grid.idx(i, j)) = u[t](loc(i, j));
  }
  return out;
}

BlockLu block_lu_schwarz(const System2D& sys, const Decomposition& dec,
                         BlockOrdering ordering) {
  BlockMatrix bm = split_blocks(sys, dec);
  const int P = bm.lay.count();
  std::vector<int> order = elimination_order(bm.lay, ordering);
  if (static_cast<int>(order.size()) != P)
    throw ConfigError("bad elimination order");

  // permute blocks into stage order
  std::vector<std::vector<Eigen::MatrixXcd>> A(P,
                                               std::vector<Eigen::MatrixXcd>(P));
  std::vector<Eigen::VectorXcd> f(P);
  for (int i = 0; i < P; ++i) {
    f[i] = bm.f[order[i]];
    for (int j = 0; j < P; ++j) A[i][j] = std::move(bm.blk[order[i]][order[j]]);
  }

  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> piv;
  piv.reserve(P);
  std::vector<std::vector<Eigen::MatrixXcd>> U(P,
                                               std::vector<Eigen::MatrixXcd>(P));
  double scale = 0.0;
  for (int k = 0; k < P; ++k) {
    piv.emplace_back(A[k][k]);
    scale = std::max(scale, A[k][k].cwiseAbs().maxCoeff());
    for (int j = k + 1; j < P; ++j)
      if (A[k][j].size() != 0) U[k][j] = piv[k].solve(A[k][j]);
    for (int i = k + 1; i < P; ++i) {
      if (A[i][k].size() == 0) continue;
      for (int j = k + 1; j < P; ++j) {
        if (U[k][j].size() == 0) continue;
        Eigen::MatrixXcd upd = A[i][k] * U[k][j];
        if (A[i][j].size() == 0)
          A[i][j] = -upd;
        else
          A[i][j] -= upd;
      }
    }
  }

  // forward sweep (L y = f, the pivot blocks live on the diagonal of L)
  std::vector<Eigen::VectorXcd> y(P);
  for (int k = 0; k < P; ++k) {
    Eigen::VectorXcd rhs = f[k];
    for (int j = 0; j < k; ++j)
      if (A[k][j].size() != 0) rhs -= A[k][j] * y[j];
    y[k] = piv[k].solve(rhs);
  }
  // backward sweep (U x = y, unit block diagonal)
  std::vector<Eigen::VectorXcd> xs(P);
  for (int k = P - 1; k >= 0; --k) {
    xs[k] = y[k];
    for (int j = k + 1; j < P; ++j)
      if (U[k][j].size() != 0) xs[k] -= U[k][j] * xs[j];
  }

  BlockLu out;
  out.order = order;
  out.u.resize(sys.grid.size());
  for (int k = 0; k < P; ++k) {
    const auto& nodes = bm.nodes[order[k]];
    for (std::size_t l = 0; l < nodes.size(); ++l) out.u(nodes[l]) = xs[k](l);
  }
  out.factor_nnz = Eigen::MatrixXi::Zero(P, P);
  const double tol = 1e-13 * std::max(scale, 1e-300);
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) {
      if (j <= i && A[i][j].size() != 0)
        out.factor_nnz(i, j) = block_nnz(A[i][j], tol);
      if (j > i && U[i][j].size() != 0)
        out.factor_nnz(i, j) = block_nnz(U[i][j], tol);
    }
  return out;
}

Eigen::MatrixXi lu_factor_sparsity(const System2D& sys,
                                   const Decomposition& dec,
                                   BlockOrdering ordering) {
  return block_lu_schwarz(sys, dec, ordering).factor_nnz;
}

}  // namespace schwarz
