#pragma once

#include "calabi/common.hpp"

#include <functional>
#include <optional>
#include <vector>

// Linear symplectic algebra over R^{2n}: membership tests for Sp(2n),
// sampled loops of symplectic matrices, and the Maslov index computed as
// the winding number of det_C of the polar unitary part.

namespace calabi::symplin {

inline constexpr double kTolSp = 1e-9;  // symplecticity tolerance for closed-form matrices

bool is_symplectic(const Mat& M, double tol = kTolSp);

// Integer rotation weights, one full turn per unit time and per unit weight.
struct WeightVector {
  std::vector<long> a;
  int n() const { return static_cast<int>(a.size()); }
  long sum() const;
  bool balanced() const { return sum() == 0; }
};

// A loop of symplectic matrices sampled on the uniform grid t_k = k/K,
// based at the identity. `eval` is an optional closed form behind the
// samples (kept so consumers can refine without resampling losses).
struct MatrixLoop {
  int n = 0;
  std::vector<double> t;
  std::vector<Mat> samples;
  std::function<Mat(double)> eval;

  int sample_count() const { return static_cast<int>(samples.size()); }
  // Verifies the loop invariants: base point Id at both ends, every
  // sample symplectic.
  void validate(double tol = kTolSp) const;
};

// t |-> blockdiag of R(2 pi a_j t) acting on the (q_j, p_j) planes,
// i.e. z_j |-> exp(2 pi i a_j t) z_j under the ledger identification.
Mat rotation_matrix(const WeightVector& a, double t);
MatrixLoop rotation_loop(const WeightVector& a, int K = 256);

// Pointwise product loop (factors must share n and grid).
MatrixLoop pointwise_product(const MatrixLoop& lhs, const MatrixLoop& rhs);

// Polar retraction M -> U = M (M^T M)^{-1/2} onto the orthogonal
// symplectic subgroup.
Mat unitary_part(const Mat& M, double tol = kTolSp);

// arg det(A + iB) in (-pi, pi] for U = [[A,-B],[B,A]] orthogonal symplectic.
double complex_determinant_phase(const Mat& U, double tol = kTolSp);

struct MaslovResult {
  long index = 0;
  double residual = 0.0;   // |winding - index| before rounding
  double max_jump = 0.0;   // largest consecutive phase step
};

// Winding number of t -> det_C(unitary_part(A_t)). Requires consecutive
// phase jumps < pi/2 and pre-rounding residual < 0.1; anything else is
// reported as insufficient sampling rather than guessed around.
MaslovResult maslov_index_detailed(const MatrixLoop& loop, double tol = kTolSp);
long maslov_index(const MatrixLoop& loop, double tol = kTolSp);

bool is_contractible(const MatrixLoop& loop, double tol = kTolSp);

struct WeightFit {
  WeightVector weights;
  double fit_residual = 0.0;  // sup deviation from the exact rotation loop
};

// Reads per-plane phase windings off a sampled loop and checks that the
// loop really is the corresponding rotation loop; used to self-calibrate
// sign conventions from numerically linearized actions.
WeightFit fit_rotation_weights(const MatrixLoop& loop);

// Row-major CSV (one matrix per row, prefixed by t) for debugging.
std::string loop_to_csv(const MatrixLoop& loop);
std::optional<MatrixLoop> loop_from_csv(const std::string& csv);

}  // namespace calabi::symplin
