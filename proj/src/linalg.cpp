#include "mlab/linalg.hpp"

#include <mutex>

#include <fftw3.h>
#include <lapacke.h>

namespace mlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Eigen::VectorXd hermitian_eigenvalues(const Eigen::MatrixXcd& m) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  Eigen::VectorXd w(n);
  if (n == 0) return w;
  Eigen::MatrixXcd a = m;
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', n,
                                         reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0) throw Error("hermitian_eigenvalues: LAPACK zheevd failed with info " + std::to_string(info));
  return w;
}

bool positive_definite(const Eigen::MatrixXcd& m) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  Eigen::MatrixXcd a = m;
  return LAPACKE_zpotrf(LAPACK_COL_MAJOR, 'U', n, reinterpret_cast<lapack_complex_double*>(a.data()), n) == 0;
}

double operator_norm(const Eigen::MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && (m - m.adjoint()).norm() <= 1e-14 * m.norm())
    return hermitian_eigenvalues(m).cwiseAbs().maxCoeff();
  const lapack_int r = static_cast<lapack_int>(m.rows()), c = static_cast<lapack_int>(m.cols());
  Eigen::MatrixXcd a = m;
  Eigen::VectorXd s(std::min(r, c));
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', r, c, reinterpret_cast<lapack_complex_double*>(a.data()),
                                         r, s.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw Error("operator_norm: LAPACK zgesdd failed with info " + std::to_string(info));
  return s(0);
}

void fft_axis(std::vector<cd>& data, const std::vector<int>& shape, int axis, int sign) {
  int outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const int n = shape[axis];
  fftw_iodim dim{n, inner, inner};
  fftw_iodim many[2] = {{outer, n * inner, n * inner}, {inner, 1, 1}};
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_guru_dft(1, &dim, 2, many, p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (!plan) throw Error("fft_axis: FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace mlab
