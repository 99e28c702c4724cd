#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "covadj/dataset.hpp"
#include "covadj/linalg.hpp"

namespace testing {

inline std::vector<double> normals(std::mt19937_64& g, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(g);
    return v;
}

inline covadj::linalg::Matrix random_matrix(std::mt19937_64& g, std::size_t rows, std::size_t cols) {
    return covadj::linalg::Matrix(rows, cols, normals(g, rows * cols));
}

// A·Aᵀ + n·I is comfortably positive definite.
inline covadj::linalg::Matrix random_spd(std::mt19937_64& g, std::size_t n) {
    const auto a = random_matrix(g, n, n);
    const auto aat = a * a.transpose();
    std::vector<double> e(aat.entries().begin(), aat.entries().end());
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] += double(n);
    return covadj::linalg::Matrix(n, n, e);
}

// Plain two-sided comparison relative to max(1, |b|).
inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Textbook R² of y on [1, columns] through the normal equations, solved by
// Gauss-Jordan with partial pivoting. Independent of the library's QR.
inline double brute_force_r2(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size() + 1;
    auto col = [&](std::size_t j, std::size_t i) { return j == 0 ? 1.0 : columns[j - 1][i]; };
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < p; ++r) {
        for (std::size_t c = 0; c < p; ++c)
            for (std::size_t i = 0; i < n; ++i) a[r][c] += col(r, i) * col(c, i);
        for (std::size_t i = 0; i < n; ++i) a[r][p] += col(r, i) * y[i];
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= double(n);
    double rss = 0.0, tss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += a[j][p] / a[j][j] * col(j, i);
        rss += (y[i] - fit) * (y[i] - fit);
        tss += (y[i] - mean) * (y[i] - mean);
    }
    return 1.0 - rss / tss;
}

inline std::vector<double> arms_as_double(const covadj::ArmAssignment& arms) {
    return {arms.begin(), arms.end()};
}

}  // namespace testing
