#include "covadj/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "covadj/error.hpp"

namespace covadj::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
        fail(ErrorCode::InvalidArgument, "matrix entry count " + std::to_string(entries_.size()) +
                                             " does not match " + std::to_string(rows_) + "x" +
                                             std::to_string(cols_));
    }
    for (double v : entries_) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "matrix entries must be finite");
    }
}

Matrix Matrix::zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
}

Matrix Matrix::identity(std::size_t n) {
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
    return Matrix(n, n, std::move(e));
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> e;
    e.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) fail(ErrorCode::InvalidArgument, "ragged row list");
        e.insert(e.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(e));
}

Matrix Matrix::from_columns(std::size_t rows, const std::vector<std::vector<double>>& columns) {
    const std::size_t c = columns.size();
    std::vector<double> e(rows * c);
    for (std::size_t j = 0; j < c; ++j) {
        if (columns[j].size() != rows) fail(ErrorCode::InvalidArgument, "column length mismatch");
        for (std::size_t i = 0; i < rows; ++i) e[i * c + j] = columns[j][i];
    }
    return Matrix(rows, c, std::move(e));
}

std::vector<double> Matrix::column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
}

Matrix Matrix::transpose() const {
    std::vector<double> e(entries_.size());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) e[j * rows_ + i] = (*this)(i, j);
    return Matrix(cols_, rows_, std::move(e));
}

Matrix Matrix::operator*(const Matrix& rhs) const {
    if (cols_ != rhs.rows_) fail(ErrorCode::InvalidArgument, "matrix product shape mismatch");
    std::vector<double> e(rows_ * rhs.cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t l = 0; l < cols_; ++l) {
            const double a = (*this)(i, l);
            for (std::size_t j = 0; j < rhs.cols_; ++j) e[i * rhs.cols_ + j] += a * rhs(l, j);
        }
    return Matrix(rows_, rhs.cols_, std::move(e));
}

std::vector<double> Matrix::operator*(std::span<const double> v) const {
    if (v.size() != cols_) fail(ErrorCode::InvalidArgument, "matrix-vector shape mismatch");
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

Matrix Matrix::gram() const {
    std::vector<double> e(cols_ * cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const auto r = row(i);
        for (std::size_t a = 0; a < cols_; ++a)
            for (std::size_t b = a; b < cols_; ++b) e[a * cols_ + b] += r[a] * r[b];
    }
    for (std::size_t a = 0; a < cols_; ++a)
        for (std::size_t b = 0; b < a; ++b) e[a * cols_ + b] = e[b * cols_ + a];
    return Matrix(cols_, cols_, std::move(e));
}

double Matrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : entries_) m = std::max(m, std::abs(v));
    return m;
}

namespace {

void require_symmetric(const Matrix& a) {
    if (a.rows() != a.cols() || a.rows() == 0)
        fail(ErrorCode::InvalidArgument, "expected a non-empty square matrix");
    const double scale = a.max_abs();
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale)
                fail(ErrorCode::InvalidArgument, "matrix is not symmetric");
}

double max_diagonal(const Matrix& a) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) d = std::max(d, a(i, i));
    return d;
}

// Pivoted Householder QR of an m x n column-major working copy.
struct PivotedQr {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<double> a;  // column-major; upper triangle holds R
    std::vector<std::size_t> perm;
    std::vector<double> betas;
    std::vector<std::vector<double>> reflectors;
    std::size_t rank = 0;

    double& at(std::size_t i, std::size_t j) { return a[j * m + i]; }

    void apply_reflector(std::size_t step, std::span<double> v) const {
        const auto& u = reflectors[step];
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[step + i];
        s *= betas[step];
        for (std::size_t i = 0; i < u.size(); ++i) v[step + i] -= s * u[i];
    }
};

PivotedQr pivoted_qr(const Matrix& x, std::span<const double> col_shift) {
    PivotedQr qr;
    qr.m = x.rows();
    qr.n = x.cols();
    qr.a.resize(qr.m * qr.n);
    for (std::size_t i = 0; i < qr.m; ++i)
        for (std::size_t j = 0; j < qr.n; ++j)
            qr.at(i, j) = x(i, j) - (col_shift.empty() ? 0.0 : col_shift[j]);
    qr.perm.resize(qr.n);
    std::iota(qr.perm.begin(), qr.perm.end(), std::size_t{0});

    const std::size_t steps = std::min(qr.m, qr.n);
    double first_pivot = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
        // Norms are recomputed each step; the matrices here are small.
        std::size_t best = j;
        double best_norm = -1.0;
        for (std::size_t c = j; c < qr.n; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < qr.m; ++i) s += qr.at(i, c) * qr.at(i, c);
            if (s > best_norm) {
                best_norm = s;
                best = c;
            }
        }
        const double norm = std::sqrt(best_norm);
        if (j == 0) first_pivot = norm;
        if (norm == 0.0 || norm <= kPivotTolerance * first_pivot) break;

        if (best != j) {
            for (std::size_t i = 0; i < qr.m; ++i) std::swap(qr.at(i, j), qr.at(i, best));
            std::swap(qr.perm[j], qr.perm[best]);
        }

        std::vector<double> u(qr.m - j);
        for (std::size_t i = j; i < qr.m; ++i) u[i - j] = qr.at(i, j);
        const double alpha = u[0] >= 0.0 ? -norm : norm;
        u[0] -= alpha;
        double unorm2 = 0.0;
        for (double v : u) unorm2 += v * v;
        const double beta = unorm2 > 0.0 ? 2.0 / unorm2 : 0.0;

        qr.at(j, j) = alpha;
        for (std::size_t i = j + 1; i < qr.m; ++i) qr.at(i, j) = 0.0;
        for (std::size_t c = j + 1; c < qr.n; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < qr.m; ++i) s += u[i - j] * qr.at(i, c);
            s *= beta;
            for (std::size_t i = j; i < qr.m; ++i) qr.at(i, c) -= s * u[i - j];
        }
        qr.reflectors.push_back(std::move(u));
        qr.betas.push_back(beta);
        qr.rank = j + 1;
    }
    return qr;
}

std::vector<double> column_means(const Matrix& x) {
    std::vector<double> means(x.cols(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) means[j] += x(i, j);
    for (double& v : means) v /= static_cast<double>(x.rows());
    return means;
}

}  // namespace

Matrix cholesky(const Matrix& a) {
    require_symmetric(a);
    const std::size_t n = a.rows();
    const double tol = kPivotTolerance * max_diagonal(a);
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t p = 0; p < j; ++p) d -= l[j * n + p] * l[j * n + p];
        if (!(d > tol) || d <= 0.0)
            fail(ErrorCode::NotPositiveDefinite,
                 "pivot " + std::to_string(j) + " is " + std::to_string(d));
        const double ljj = std::sqrt(d);
        l[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l[i * n + p] * l[j * n + p];
            l[i * n + j] = s / ljj;
        }
    }
    return Matrix(n, n, std::move(l));
}

Matrix cholesky_semidefinite(const Matrix& a, double rel_tol) {
    require_symmetric(a);
    const std::size_t n = a.rows();
    const double tol = rel_tol * max_diagonal(a);
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t p = 0; p < j; ++p) d -= l[j * n + p] * l[j * n + p];
        if (d < -tol)
            fail(ErrorCode::NotPositiveSemiDefinite,
                 "pivot " + std::to_string(j) + " is " + std::to_string(d));
        if (d <= tol) continue;  // null direction
        const double ljj = std::sqrt(d);
        l[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t p = 0; p < j; ++p) s -= l[i * n + p] * l[j * n + p];
            l[i * n + j] = s / ljj;
        }
    }
    return Matrix(n, n, std::move(l));
}

std::vector<double> solve_spd(const Matrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) fail(ErrorCode::InvalidArgument, "right-hand side length mismatch");
    const Matrix l = cholesky(a);
    const std::size_t n = a.rows();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t p = 0; p < i; ++p) s -= l(i, p) * y[p];
        y[i] = s / l(i, i);
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t p = ii + 1; p < n; ++p) s -= l(p, ii) * x[p];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

OlsFit least_squares(const Matrix& x, std::span<const double> y, bool center_y) {
    const std::size_t m = x.rows();
    if (y.size() != m) fail(ErrorCode::InvalidArgument, "response length does not match rows");
    if (m < 2) fail(ErrorCode::InvalidArgument, "least squares needs at least two rows");

    const double y_mean =
        center_y ? std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m) : 0.0;
    std::vector<double> x_means;
    if (center_y) x_means = column_means(x);

    std::vector<double> yw(y.begin(), y.end());
    double raw_ss = 0.0;
    double total_ss = 0.0;
    for (double& v : yw) {
        raw_ss += v * v;
        v -= y_mean;
        total_ss += v * v;
    }
    if (total_ss == 0.0 || total_ss <= 1e-24 * raw_ss)
        fail(ErrorCode::DegenerateResponse, "response has zero total sum of squares");

    PivotedQr qr = pivoted_qr(x, x_means);
    std::vector<double> qty = yw;
    for (std::size_t s = 0; s < qr.rank; ++s) qr.apply_reflector(s, qty);

    std::vector<double> z(qr.rank);
    for (std::size_t ii = qr.rank; ii-- > 0;) {
        double s = qty[ii];
        for (std::size_t p = ii + 1; p < qr.rank; ++p) s -= qr.at(ii, p) * z[p];
        z[ii] = s / qr.at(ii, ii);
    }

    OlsFit fit;
    fit.coefficients.assign(x.cols(), 0.0);
    for (std::size_t i = 0; i < qr.rank; ++i) fit.coefficients[qr.perm[i]] = z[i];

    fit.fitted.assign(m, y_mean);
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double f = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j)
            f += (x(i, j) - (center_y ? x_means[j] : 0.0)) * fit.coefficients[j];
        fit.fitted[i] += f;
        const double r = y[i] - fit.fitted[i];
        rss += r * r;
    }
    if (center_y) {
        fit.intercept = y_mean;
        for (std::size_t j = 0; j < x.cols(); ++j) fit.intercept -= x_means[j] * fit.coefficients[j];
    }
    fit.residual_ss = rss;
    fit.total_ss = total_ss;
    fit.r_squared = std::clamp(1.0 - rss / total_ss, 0.0, 1.0);
    fit.rank = qr.rank + (center_y ? 1 : 0);
    fit.residual_dof = m - fit.rank;
    return fit;
}

std::size_t numeric_rank(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) return 0;
    return pivoted_qr(x, {}).rank;
}

}  // namespace covadj::linalg
