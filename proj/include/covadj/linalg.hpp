#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace covadj::linalg {

/// Relative tolerance shared by the rank test in least squares and the
/// definiteness test in the Cholesky factorization.
inline constexpr double kPivotTolerance = 1e-10;

/// Dense row-major matrix of finite reals. Immutable once constructed.
///
/// A matrix with zero columns is allowed so that the empty covariate model
/// (k = 0) has a design of its own; every other shape has rows, cols >= 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix zeros(std::size_t rows, std::size_t cols);
    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    /// Builds an rows x columns.size() matrix from column vectors of equal length.
    static Matrix from_columns(std::size_t rows, const std::vector<std::vector<double>>& columns);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * cols_ + j]; }
    std::span<const double> entries() const noexcept { return entries_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {entries_.data() + i * cols_, cols_};
    }
    std::vector<double> column(std::size_t j) const;

    Matrix transpose() const;
    Matrix operator*(const Matrix& rhs) const;
    std::vector<double> operator*(std::span<const double> v) const;
    /// Returns Aᵀ A.
    Matrix gram() const;
    /// Largest absolute entry, 0 for an empty matrix.
    double max_abs() const noexcept;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

struct OlsFit {
    std::vector<double> coefficients;  // one per column of x; zero for aliased columns
    double intercept = 0.0;            // ȳ − x̄ᵀβ when fitted with an intercept, else 0
    std::vector<double> fitted;
    double residual_ss = 0.0;
    double total_ss = 0.0;
    double r_squared = 0.0;
    std::size_t rank = 0;  // includes the intercept when one is fitted
    std::size_t residual_dof = 0;
};

/// Lower-triangular L with L·Lᵀ = a. Throws NotPositiveDefinite when a pivot
/// falls to kPivotTolerance × (largest diagonal entry) or below.
Matrix cholesky(const Matrix& a);

/// Factor of a positive semi-definite matrix: pivots within
/// ±rel_tol × max diagonal are treated as exact zeros and their column of L is
/// zeroed. Throws NotPositiveSemiDefinite when a pivot is clearly negative.
Matrix cholesky_semidefinite(const Matrix& a, double rel_tol = kPivotTolerance);

/// Solves a·x = b for symmetric positive definite a.
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

/// Least squares by Householder QR with column pivoting. With center_y set the
/// fit includes an intercept (x columns and y are centered internally) and
/// total_ss is taken about the mean of y; otherwise total_ss = Σy².
/// Throws DegenerateResponse when total_ss is zero.
OlsFit least_squares(const Matrix& x, std::span<const double> y, bool center_y);

/// Numerical column rank from the same pivoted QR used by least_squares.
std::size_t numeric_rank(const Matrix& x);

}  // namespace covadj::linalg
