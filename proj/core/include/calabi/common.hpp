#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Convention ledger shared by every module:
//   coordinates (q1..qn, p1..pn);  omega0 = sum_j dq_j ^ dp_j;
//   J = [[0,-I],[I,0]];  z_j = q_j + i p_j, so multiplication by i is J;
//   iota_{X_H} omega0 = dH, hence X_H = -J grad H and {F,G} = dF(X_G);
//   integrals against omega^n carry the factor n! relative to Lebesgue.
// Changing any one entry flips downstream signs consistently; nothing
// outside this header and the field/flow code may re-pin a convention.

namespace calabi {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Error : std::runtime_error {
  enum class Kind {
    dimension,
    precondition,
    decomposition,
    structure,
    insufficient_sampling,
    unbalanced_weights,
    not_null_homotopic,
    not_symplectic_direction,
    domain_escape,
    hypothesis,
    budget_exhausted,
    config,
    unsupported,
  };
  Kind kind;
  Error(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

// Pinned standard complex structure on R^{2n}.
Mat standard_J(int n);

// J x without forming the matrix: (q,p) -> (-p, q).
void apply_J(const Vec& x, Vec& out);
Vec apply_J(const Vec& x);

// omega0(u, v) = <J u, v>.
double omega0(const Vec& u, const Vec& v);

// max-norm of M^T J M - J; the symplecticity residual.
double symplectic_residual(const Mat& M);

// Deterministic pairwise summation; the pinned reduction for quadrature
// and tracer sums regardless of how the values were produced.
double pairwise_sum(std::span<const double> values);

// Static-partition parallel map over [0, count); worker(begin, end).
// Results must be written to disjoint slots so thread layout cannot
// change any output.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& worker);

std::size_t hardware_threads();

// Seeded deterministic RNG (splitmix64 stream); enough for tracers and
// quasi-random quadrature without dragging <random> state around.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next_u64();
  double next_double();             // uniform in [0,1)
  double uniform(double a, double b);
};

std::string format_double(double v);  // %.17g, the pinned report format

}  // namespace calabi
