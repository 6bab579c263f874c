#pragma once

#include "calabi/common.hpp"
#include "calabi/symplin.hpp"

#include <vector>

// Explicit smooth based null-homotopies A_{s,t} for balanced rotation
// loops, built from unit-quaternion belt contractions, together with the
// quadratic Hamiltonians H_{s,t} = <x, Q_{s,t} x> that generate them in
// the s direction.

namespace calabi::nullhomotopy {

// One weight transfer: +count turns in plane `from`, -count in plane `to`
// (1-based plane indices).
struct Transfer {
  int from = 0;
  int to = 0;
  long count = 0;
};

// Greedy reduction of a balanced weight vector into two-plane transfers
// with sum_k c_k (e_i - e_j) = a exactly (integer arithmetic).
std::vector<Transfer> pair_decompose(const symplin::WeightVector& a);

// Two-parameter family A(s,t) with A(0,.) = Id, A(1,.) = target loop,
// A(.,0) = A(.,1) = Id, every value orthogonal symplectic.
class BasedHomotopy {
 public:
  BasedHomotopy() = default;
  // identity homotopy in dimension 2n
  static BasedHomotopy identity(int n);
  // belt contraction of the weight-(c,-c) two-plane loop on R^4
  static BasedHomotopy belt(long c);
  // embedded product of belt factors realizing rotation_loop(a)
  static BasedHomotopy for_weights(const symplin::WeightVector& a);

  int n() const { return n_; }
  Mat operator()(double s, double t) const;
  // analytic d/ds of the family (exact, not finite differences)
  Mat ds(double s, double t) const;
  bool has_analytic_ds() const { return true; }

  // sp(2n)-valued generator S(s,t) = (d_s A) A^{-1} from the analytic
  // derivative.
  Mat generator(double s, double t) const;

  int grid_s = 21;  // default sampling for grid consumers
  int grid_t = 21;

  // Max over a (grid_s x grid_t) sweep of all four boundary residuals
  // and of the symplecticity residual.
  struct BoundaryReport {
    double base_s0 = 0.0;       // ||A(s,0) - Id||
    double base_s1 = 0.0;       // ||A(s,1) - Id||
    double start_identity = 0.0;  // ||A(0,t) - Id||
    double end_matches_loop = 0.0;  // ||A(1,t) - target(t)||
    double symplecticity = 0.0;
    double max() const;
  };
  BoundaryReport boundary_report(const symplin::MatrixLoop& target) const;

  std::string grid_to_csv() const;  // (s, t, row-major entries)

 private:
  struct BeltFactor {
    int plane_from = 0;  // 0-based
    int plane_to = 0;
    long c = 1;
  };
  int n_ = 0;
  std::vector<BeltFactor> factors_;

  void factor_matrix(const BeltFactor& f, double s, double t, Mat& out) const;
  void factor_matrix_ds(const BeltFactor& f, double s, double t, Mat& out) const;
};

struct QuadraticHamiltonian {
  Mat Q;  // symmetric
  double operator()(const Vec& x) const { return x.dot(Q * x); }
};

// Q_{s,t} = 1/2 J (d_s A) A^{-1}, central differences in s with step h_s,
// then symmetrized. The pre-symmetrization antisymmetric residual
// certifies that d_s A A^{-1} lies in sp(2n).
QuadraticHamiltonian homotopy_hamiltonian(const BasedHomotopy& A, double s, double t,
                                          double h_s = 1e-5,
                                          double antisym_tol = 1e-6);

// Same quantity from the analytic derivative (fast path; the finite
// difference version above stays as the oracle).
QuadraticHamiltonian homotopy_hamiltonian_analytic(const BasedHomotopy& A, double s, double t);

}  // namespace calabi::nullhomotopy
