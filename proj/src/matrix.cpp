#include "pgate/matrix.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace pgate {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

ConstView view(const Matrix& m) {
  return ConstView(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                   static_cast<Eigen::Index>(m.cols()));
}

View view(Matrix& m) {
  return View(m.data().data(), static_cast<Eigen::Index>(m.rows()),
              static_cast<Eigen::Index>(m.cols()));
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                       " and " + b.shape_string());
}

void require_same(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_error(op, a, b);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw DimensionError("Matrix::from_data: " + std::to_string(data.size()) +
                         " values for shape (" + std::to_string(rows) + "x" +
                         std::to_string(cols) + ")");
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_.assign(data.begin(), data.end());
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return from_data(values.size(), 1, {values.begin(), values.end()});
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix out(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  Matrix out(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  Matrix out(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

void matmul_nt_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) shape_error("matmul_nt_accumulate", a, b);
  if (out.rows() != a.rows() || out.cols() != b.rows()) {
    shape_error("matmul_nt_accumulate (output)", out, a);
  }
  view(out).noalias() += view(a) * view(b).transpose();
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  view(out) = view(a).transpose();
  return out;
}

Matrix map(const Matrix& a, const std::function<double(double)>& f) {
  Matrix out = a;
  for (double& v : out.data()) v = f(v);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same("hadamard", a, b);
  Matrix out(a.rows(), a.cols());
  view(out) = view(a).cwiseProduct(view(b));
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same("add", a, b);
  Matrix out(a.rows(), a.cols());
  view(out) = view(a) + view(b);
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same("sub", a, b);
  Matrix out(a.rows(), a.cols());
  view(out) = view(a) - view(b);
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  view(out) = view(a) * s;
  return out;
}

Matrix add_col_broadcast(const Matrix& a, const Matrix& bias) {
  if (bias.cols() != 1 || bias.rows() != a.rows()) shape_error("add_col_broadcast", a, bias);
  Matrix out = a;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double b = bias(r, 0);
    for (double& v : out.row(r)) v += b;
  }
  return out;
}

Matrix row_sums(const Matrix& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (double v : a.row(r)) s += v;
    out(r, 0) = s;
  }
  return out;
}

void add_inplace(Matrix& dst, const Matrix& src) {
  require_same("add_inplace", dst, src);
  view(dst) += view(src);
}

void axpy_inplace(Matrix& dst, double alpha, const Matrix& src) {
  require_same("axpy_inplace", dst, src);
  view(dst) += alpha * view(src);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace pgate
