#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rmtlab {

using cplx = std::complex<double>;

// Row-major complex dense matrix. Only what the oracles and the
// eigensolver need; realized structured matrices stay in symbol form.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  const std::vector<cplx>& data() const { return a_; }
  std::vector<cplx>& data() { return a_; }

  Mat adjoint() const;
  Mat transpose() const;
  cplx trace() const;
  double max_abs() const;
  double frob_norm() const;

  Mat operator*(const Mat& rhs) const;
  Mat& operator+=(const Mat& rhs);
  Mat& operator*=(cplx s);
  std::vector<cplx> apply(const std::vector<cplx>& v) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cplx> a_;
};

}  // namespace rmtlab
