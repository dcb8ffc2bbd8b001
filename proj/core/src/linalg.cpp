#include "mfcavi/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace mfcavi {

double Matrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

double Matrix::frobenius_norm() const {
    KahanSum s;
    for (double v : data_) s.add(v * v);
    return std::sqrt(s.value());
}

double Matrix::max_asymmetry() const {
    if (rows_ != cols_) throw std::invalid_argument("max_asymmetry: matrix not square");
    double m = 0.0;
    for (int i = 0; i < rows_; ++i)
        for (int j = i + 1; j < cols_; ++j)
            m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
    return m;
}

void Matrix::symmetrize() {
    if (rows_ != cols_) throw std::invalid_argument("symmetrize: matrix not square");
    for (int i = 0; i < rows_; ++i)
        for (int j = i + 1; j < cols_; ++j) {
            const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
            (*this)(i, j) = v;
            (*this)(j, i) = v;
        }
}

Vector matvec(const Matrix& a, const Vector& x) {
    if (static_cast<int>(x.size()) != a.cols())
        throw std::invalid_argument("matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        KahanSum s;
        for (int j = 0; j < a.cols(); ++j) s.add(a(i, j) * x[j]);
        y[i] = s.value();
    }
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    KahanSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value();
}

double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

double quadratic_form(const Matrix& a, const Vector& x) {
    return dot(x, matvec(a, x));
}

Cholesky::Cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("Cholesky: matrix not square");
    const int n = a.rows();
    lower_ = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            KahanSum s;
            s.add(a(i, j));
            for (int k = 0; k < j; ++k) s.add(-lower_(i, k) * lower_(j, k));
            const double v = s.value();
            if (i == j) {
                if (!(v > 0.0))
                    throw std::runtime_error("Cholesky: matrix not positive definite (pivot " +
                                             std::to_string(i) + " = " + std::to_string(v) + ")");
                lower_(i, i) = std::sqrt(v);
            } else {
                lower_(i, j) = v / lower_(j, j);
            }
        }
    }
}

Vector Cholesky::solve(const Vector& b) const {
    const int n = lower_.rows();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("Cholesky::solve: dimension mismatch");
    Vector y(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= lower_(i, k) * y[k];
        y[i] = s / lower_(i, i);
    }
    Vector x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= lower_(k, i) * x[k];
        x[i] = s / lower_(i, i);
    }
    return x;
}

double Cholesky::log_det() const {
    double s = 0.0;
    for (int i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
    return 2.0 * s;
}

}  // namespace mfcavi
