#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfcavi {

using Vector = std::vector<double>;

/// Dense row-major matrix. Everything in this project is desk scale
/// (d up to a few hundred), so no sparse storage and no views.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    const std::vector<double>& data() const { return data_; }

    double max_abs() const;
    double frobenius_norm() const;
    double max_asymmetry() const;  // max |A_ij - A_ji|; requires square

    /// (A + A^T)/2, in place. Requires square.
    void symmetrize();

private:
    int rows_, cols_;
    std::vector<double> data_;
};

Vector matvec(const Matrix& a, const Vector& x);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& a);

/// x^T A x for square A.
double quadratic_form(const Matrix& a, const Vector& x);

/// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
/// Throws std::runtime_error if a pivot is not strictly positive.
class Cholesky {
public:
    explicit Cholesky(const Matrix& a);

    Vector solve(const Vector& b) const;
    double log_det() const;  // log det A
    int dim() const { return lower_.rows(); }

private:
    Matrix lower_;
};

/// Kahan compensated accumulator for the potential evaluations and the
/// quadrature loops.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace mfcavi
