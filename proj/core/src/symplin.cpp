#include "calabi/symplin.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <sstream>

namespace calabi::symplin {

namespace {
constexpr double kPi = std::numbers::pi;
}

long WeightVector::sum() const {
  long s = 0;
  for (long v : a) s += v;
  return s;
}

bool is_symplectic(const Mat& M, double tol) {
  if (M.rows() != M.cols() || M.rows() % 2 != 0)
    throw Error(Error::Kind::dimension, "is_symplectic: matrix must be square of even size");
  return symplectic_residual(M) <= tol;
}

void MatrixLoop::validate(double tol) const {
  if (samples.size() < 2)
    throw Error(Error::Kind::precondition, "MatrixLoop: needs at least 2 samples");
  const Mat id = Mat::Identity(2 * n, 2 * n);
  if ((samples.front() - id).cwiseAbs().maxCoeff() > tol ||
      (samples.back() - id).cwiseAbs().maxCoeff() > tol)
    throw Error(Error::Kind::precondition, "MatrixLoop: loop is not based at the identity");
  for (const Mat& M : samples)
    if (!is_symplectic(M, tol))
      throw Error(Error::Kind::precondition, "MatrixLoop: sample is not symplectic");
}

Mat rotation_matrix(const WeightVector& a, double t) {
  const int n = a.n();
  Mat M = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double th = 2.0 * kPi * static_cast<double>(a.a[j]) * t;
    const double c = std::cos(th), s = std::sin(th);
    M(j, j) = c;
    M(j, n + j) = -s;
    M(n + j, j) = s;
    M(n + j, n + j) = c;
  }
  return M;
}

MatrixLoop rotation_loop(const WeightVector& a, int K) {
  if (K < 2) throw Error(Error::Kind::precondition, "rotation_loop: K must be >= 2");
  MatrixLoop loop;
  loop.n = a.n();
  loop.t.resize(K + 1);
  loop.samples.resize(K + 1);
  for (int k = 0; k <= K; ++k) {
    loop.t[k] = static_cast<double>(k) / K;
    loop.samples[k] = rotation_matrix(a, loop.t[k]);
  }
  WeightVector copy = a;
  loop.eval = [copy](double t) { return rotation_matrix(copy, t); };
  return loop;
}

MatrixLoop pointwise_product(const MatrixLoop& lhs, const MatrixLoop& rhs) {
  if (lhs.n != rhs.n || lhs.sample_count() != rhs.sample_count())
    throw Error(Error::Kind::dimension, "pointwise_product: incompatible loops");
  MatrixLoop out;
  out.n = lhs.n;
  out.t = lhs.t;
  out.samples.resize(lhs.samples.size());
  for (std::size_t k = 0; k < lhs.samples.size(); ++k)
    out.samples[k] = lhs.samples[k] * rhs.samples[k];
  if (lhs.eval && rhs.eval) {
    auto le = lhs.eval, re = rhs.eval;
    out.eval = [le, re](double t) { return le(t) * re(t); };
  }
  return out;
}

Mat unitary_part(const Mat& M, double tol) {
  if (!is_symplectic(M, std::max(tol, 1e-6)))
    throw Error(Error::Kind::precondition, "unitary_part: input is not symplectic");
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 1e-12))
    throw Error(Error::Kind::decomposition, "unitary_part: M^T M not positive definite");
  return svd.matrixU() * svd.matrixV().transpose();
}

double complex_determinant_phase(const Mat& U, double tol) {
  const int n = static_cast<int>(U.rows()) / 2;
  const Mat J = standard_J(n);
  const double comm = (U * J - J * U).cwiseAbs().maxCoeff();
  // commuting with J certifies the [[A,-B],[B,A]] block form
  if (comm > std::max(tol, 1e-7))
    throw Error(Error::Kind::structure, "complex_determinant_phase: matrix does not commute with J");
  Eigen::MatrixXcd Uc(n, n);
  Uc.real() = U.topLeftCorner(n, n);
  Uc.imag() = U.bottomLeftCorner(n, n);
  const std::complex<double> det = Uc.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-6)
    throw Error(Error::Kind::structure, "complex_determinant_phase: |det_C| deviates from 1");
  return std::arg(det);
}

MaslovResult maslov_index_detailed(const MatrixLoop& loop, double tol) {
  loop.validate(tol);
  double total = 0.0;
  double max_jump = 0.0;
  double prev = complex_determinant_phase(unitary_part(loop.samples[0], tol), tol);
  for (int k = 1; k < loop.sample_count(); ++k) {
    const double phase = complex_determinant_phase(unitary_part(loop.samples[k], tol), tol);
    double d = phase - prev;
    // wrap to (-pi, pi]
    while (d <= -kPi) d += 2.0 * kPi;
    while (d > kPi) d -= 2.0 * kPi;
    if (std::abs(d) >= kPi / 2.0)
      throw Error(Error::Kind::insufficient_sampling,
                  "maslov_index: consecutive phase jump >= pi/2, refine the loop sampling");
    max_jump = std::max(max_jump, std::abs(d));
    total += d;
    prev = phase;
  }
  const double winding = total / (2.0 * kPi);
  MaslovResult res;
  res.index = std::lround(winding);
  res.residual = std::abs(winding - static_cast<double>(res.index));
  res.max_jump = max_jump;
  if (res.residual >= 0.1)
    throw Error(Error::Kind::insufficient_sampling,
                "maslov_index: pre-rounding residual >= 0.1, refine the loop sampling");
  return res;
}

long maslov_index(const MatrixLoop& loop, double tol) {
  return maslov_index_detailed(loop, tol).index;
}

bool is_contractible(const MatrixLoop& loop, double tol) {
  return maslov_index(loop, tol) == 0;
}

WeightFit fit_rotation_weights(const MatrixLoop& loop) {
  const int n = loop.n;
  WeightFit fit;
  fit.weights.a.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    double total = 0.0;
    double prev = std::atan2(loop.samples[0](n + j, j), loop.samples[0](j, j));
    for (int k = 1; k < loop.sample_count(); ++k) {
      const double phase = std::atan2(loop.samples[k](n + j, j), loop.samples[k](j, j));
      double d = phase - prev;
      while (d <= -kPi) d += 2.0 * kPi;
      while (d > kPi) d -= 2.0 * kPi;
      if (std::abs(d) >= kPi / 2.0)
        throw Error(Error::Kind::insufficient_sampling,
                    "fit_rotation_weights: phase jump >= pi/2, refine the sampling");
      total += d;
      prev = phase;
    }
    const double winding = total / (2.0 * kPi);
    fit.weights.a[j] = std::lround(winding);
    if (std::abs(winding - static_cast<double>(fit.weights.a[j])) >= 0.1)
      throw Error(Error::Kind::insufficient_sampling,
                  "fit_rotation_weights: non-integer plane winding");
  }
  for (int k = 0; k < loop.sample_count(); ++k) {
    const Mat R = rotation_matrix(fit.weights, loop.t[k]);
    fit.fit_residual =
        std::max(fit.fit_residual, (loop.samples[k] - R).cwiseAbs().maxCoeff());
  }
  return fit;
}

std::string loop_to_csv(const MatrixLoop& loop) {
  std::ostringstream os;
  os << "t";
  const int d = 2 * loop.n;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) os << ",m" << r << c;
  os << "\n";
  for (int k = 0; k < loop.sample_count(); ++k) {
    os << format_double(loop.t[k]);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) os << "," << format_double(loop.samples[k](r, c));
    os << "\n";
  }
  return os.str();
}

std::optional<MatrixLoop> loop_from_csv(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  if (!std::getline(is, line)) return std::nullopt;  // header
  MatrixLoop loop;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() < 5) return std::nullopt;
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(row.size() - 1))));
    if (static_cast<std::size_t>(d) * d + 1 != row.size() || d % 2 != 0) return std::nullopt;
    loop.n = d / 2;
    loop.t.push_back(row[0]);
    Mat M(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) M(r, c) = row[1 + r * d + c];
    loop.samples.push_back(std::move(M));
  }
  if (loop.samples.size() < 2) return std::nullopt;
  return loop;
}

}  // namespace calabi::symplin
