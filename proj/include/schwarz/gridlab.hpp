#ifndef SCHWARZ_GRIDLAB_HPP
#define SCHWARZ_GRIDLAB_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "schwarz/symbols.hpp"

namespace schwarz {

/** Interior nodes of [0,1] x [0, (ny+1)h], h = 1/(nx+1), Dirichlet box. */
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double h = 0.0;

  double x(int i) const { return (i + 1) * h; }
  double y(int j) const { return (j + 1) * h; }
  int idx(int i, int j) const { return i * ny + j; }
  int size() const { return nx * ny; }

  static Grid2D square(int nx);
  static Grid2D strip(int nx, double Y);  // Y must be a multiple of h
};

struct System2D {
  Grid2D grid;
  Medium medium{};
  Eigen::SparseMatrix<cplx> A;
  Eigen::VectorXcd f;
};

/// 5-point Laplacian plus eta, rows scaled by 1/h^2.
System2D assemble(const Grid2D& g, const Medium& m,
                  const std::function<cplx(double, double)>& source);

/// Direct sparse solve refined to backward error <= 1e-13.
Eigen::VectorXcd reference_solution(const System2D& sys);

/**
 * px x py boxes; overlap is algebraic (number of shared columns/rows across
 * each cut). Dirichlet transmission needs overlap >= 1, Robin and PML
 * (one-sided rows reaching one node inward) need overlap >= 2.
 */
struct Decomposition {
  enum class Kind { Strip, Checkerboard };
  Kind kind = Kind::Strip;
  int px = 2;
  int py = 1;
  int overlap = 2;
};

struct DiscreteTC {
  enum class Kind { Dirichlet, Robin, DiscretePML };
  Kind kind = Kind::Dirichlet;
  cplx p{};
  int layers = 8;
  double gamma = 1.0;

  static DiscreteTC dirichlet() { return {}; }
  static DiscreteTC robin(cplx p) {
    DiscreteTC tc;
    tc.kind = Kind::Robin;
    tc.p = p;
    return tc;
  }
  static DiscreteTC pml(int layers, double gamma) {
    DiscreteTC tc;
    tc.kind = Kind::DiscretePML;
    tc.layers = layers;
    tc.gamma = gamma;
    return tc;
  }
};

enum class SweepOrder { Parallel, Alternating, DoubleSweep };

struct SchwarzRun {
  std::vector<double> error_history;  // relative sup error after each sweep
  Eigen::VectorXcd u;
};

/**
 * Iterates the decomposition against the zero initial guess and reports the
 * error relative to the refined direct solution after each sweep. Parallel
 * glues with the base-partition partition of unity; Alternating applies
 * full-patch updates in block order; DoubleSweep counts a forward plus
 * backward pass as one sweep.
 */
SchwarzRun schwarz_run(const System2D& sys, const Decomposition& dec,
                       const DiscreteTC& tc, SweepOrder order, int sweeps);

struct DtnSchurTC {
  int column = 0;          // global column the closure acts on
  Eigen::MatrixXcd schur;  // dense ny x ny correction block
};

/**
 * Exact elimination of everything beyond `side` of strip subdomain i: the
 * correction T with (S u)|_iface = (A_ii u)|_iface - T u_iface. Built on the
 * non-overlapping base partition.
 */
DtnSchurTC dtn_schur_tc(const System2D& sys, const Decomposition& dec,
                        int subdomain, Side side);

/// One backward + forward elimination sweep over the strips (exact).
Eigen::VectorXcd dtn_schur_double_sweep(const System2D& sys,
                                        const Decomposition& dec);

enum class BlockOrdering { Lexicographic, LSweep, DSweep };

struct BlockLu {
  Eigen::VectorXcd u;
  std::vector<int> order;      // block elimination order (base-partition ids)
  Eigen::MatrixXi factor_nnz;  // factor nonzeros per (stage row, stage col)
};

/**
 * Exact block LU (Doolittle: L carries the pivot blocks, U is unit
 * block-diagonal) on the non-overlapping base partition, eliminating in the
 * given ordering; the triangular solves are one forward and one backward
 * sweep over the subdomains.
 */
BlockLu block_lu_schwarz(const System2D& sys, const Decomposition& dec,
                         BlockOrdering ordering);

Eigen::MatrixXi lu_factor_sparsity(const System2D& sys,
                                   const Decomposition& dec,
                                   BlockOrdering ordering);

}  // namespace schwarz

#endif  // SCHWARZ_GRIDLAB_HPP
