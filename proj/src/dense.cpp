#include "rmtlab/dense.hpp"

#include <cmath>

#include "rmtlab/errors.hpp"

namespace rmtlab {

Mat Mat::adjoint() const {
  Mat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

Mat Mat::transpose() const {
  Mat r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

cplx Mat::trace() const {
  cplx t = 0.0;
  for (std::size_t i = 0; i < rows_ && i < cols_; ++i) t += (*this)(i, i);
  return t;
}

double Mat::max_abs() const {
  double m = 0.0;
  for (const auto& x : a_) m = std::max(m, std::abs(x));
  return m;
}

double Mat::frob_norm() const {
  double s = 0.0;
  for (const auto& x : a_) s += std::norm(x);
  return std::sqrt(s);
}

Mat Mat::operator*(const Mat& rhs) const {
  if (cols_ != rhs.rows_)
    throw Error(ErrorCode::DimensionMismatch, "Mat::operator*: shape mismatch");
  Mat r(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      cplx aik = (*this)(i, k);
      if (aik == cplx{}) continue;
      const cplx* brow = &rhs.a_[k * rhs.cols_];
      cplx* rrow = &r.a_[i * rhs.cols_];
      for (std::size_t j = 0; j < rhs.cols_; ++j) rrow[j] += aik * brow[j];
    }
  }
  return r;
}

Mat& Mat::operator+=(const Mat& rhs) {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
    throw Error(ErrorCode::DimensionMismatch, "Mat::operator+=: shape mismatch");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += rhs.a_[i];
  return *this;
}

Mat& Mat::operator*=(cplx s) {
  for (auto& x : a_) x *= s;
  return *this;
}

std::vector<cplx> Mat::apply(const std::vector<cplx>& v) const {
  if (v.size() != cols_)
    throw Error(ErrorCode::DimensionMismatch, "Mat::apply: length mismatch");
  std::vector<cplx> r(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    cplx s = 0.0;
    const cplx* row = &a_[i * cols_];
    for (std::size_t j = 0; j < cols_; ++j) s += row[j] * v[j];
    r[i] = s;
  }
  return r;
}

}  // namespace rmtlab
