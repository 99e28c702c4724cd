#include "covadj/vif.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "covadj/error.hpp"

namespace covadj {

using linalg::Matrix;

std::string_view to_string(VifRoute route) {
    switch (route) {
        case VifRoute::Regression: return "regression";
        case VifRoute::QuadraticForm: return "quadratic";
        case VifRoute::ChiSquare: return "chisq";
        case VifRoute::RaoBridge: return "rao";
    }
    return "unknown";
}

namespace {

ArmCounts checked_counts(const DesignMatrix& design, const ArmAssignment& arms) {
    if (arms.size() != design.matrix.rows())
        fail(ErrorCode::InvalidArgument, "treatment length does not match design rows");
    const auto c = count_arms(arms);
    if (c.n1 == 0 || c.n2 == 0) fail(ErrorCode::NotTwoArms, "an arm is empty");
    return c;
}

VifResult from_r_squared(double r2, ArmCounts c, std::size_t k, VifRoute route) {
    if (r2 >= 1.0 - kConfoundingTolerance)
        fail(ErrorCode::CompleteConfounding, "treatment is predictable from the covariates (R² = " +
                                                 std::to_string(r2) + ")");
    r2 = std::max(r2, 0.0);
    return {1.0 / (1.0 - r2), r2, c.n1, c.n2, k, route};
}

}  // namespace

VifResult vif_regression(const DesignMatrix& design, const ArmAssignment& arms) {
    const auto c = checked_counts(design, arms);
    if (design.k == 0) return {1.0, 0.0, c.n1, c.n2, 0, VifRoute::Regression};
    std::vector<double> z(arms.begin(), arms.end());
    const auto fit = linalg::least_squares(design.matrix, z, true);
    return from_r_squared(fit.r_squared, c, design.k, VifRoute::Regression);
}

VifResult vif_quadratic(const DesignMatrix& design, const ArmAssignment& arms) {
    const auto c = checked_counts(design, arms);
    const std::size_t k = design.k;
    if (k == 0) return {1.0, 0.0, c.n1, c.n2, 0, VifRoute::QuadraticForm};
    if (design.rank < k)
        fail(ErrorCode::RankDeficient, "design rank " + std::to_string(design.rank) + " < k = " + std::to_string(k));

    const Matrix& x = design.matrix;
    std::vector<double> sum1(k, 0.0), sum2(k, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto& s = arms[i] == 0 ? sum1 : sum2;
        for (std::size_t j = 0; j < k; ++j) s[j] += x(i, j);
    }
    std::vector<double> diff(k);
    for (std::size_t j = 0; j < k; ++j)
        diff[j] = sum2[j] / static_cast<double>(c.n2) - sum1[j] / static_cast<double>(c.n1);

    const auto solved = linalg::solve_spd(x.gram(), diff);
    double quad = 0.0;
    for (std::size_t j = 0; j < k; ++j) quad += diff[j] * solved[j];
    const double n = static_cast<double>(c.total());
    const double r2 = static_cast<double>(c.n1) * static_cast<double>(c.n2) / n * quad;
    return from_r_squared(r2, c, k, VifRoute::QuadraticForm);
}

// ---------------------------------------------------------------------------

ContingencyTable::ContingencyTable(std::vector<std::string> labels, std::vector<std::size_t> arm1,
                                   std::vector<std::size_t> arm2)
    : labels_(std::move(labels)) {
    if (labels_.empty() || arm1.size() != labels_.size() || arm2.size() != labels_.size())
        fail(ErrorCode::InvalidArgument, "contingency table shape mismatch");
    counts_[0] = std::move(arm1);
    counts_[1] = std::move(arm2);
    for (std::size_t a = 0; a < 2; ++a)
        for (auto v : counts_[a]) n_[a] += v;
    if (n_[0] == 0 || n_[1] == 0) fail(ErrorCode::EmptyMargin, "an arm has no subjects");
    for (std::size_t j = 0; j < labels_.size(); ++j)
        if (column_total(j) == 0) fail(ErrorCode::EmptyMargin, "category '" + labels_[j] + "' is empty");
}

std::size_t ContingencyTable::column_total(std::size_t category) const {
    return counts_[0][category] + counts_[1][category];
}

ContingencyBuild contingency(const Dataset& d, const std::string& name) {
    const Covariate& c = d.covariate(name);
    if (c.kind.type() == CovariateKind::Type::Continuous)
        fail(ErrorCode::NotCategorical, "covariate '" + name + "' is continuous");
    const auto& levels = c.kind.levels();
    std::vector<std::size_t> a1(levels.size(), 0), a2(levels.size(), 0);
    for (std::size_t i = 0; i < d.n(); ++i) {
        const auto level = static_cast<std::size_t>(c.values[i]);
        (d.arms()[i] == 0 ? a1 : a2)[level]++;
    }
    std::vector<std::string> kept_labels, dropped;
    std::vector<std::size_t> k1, k2;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        if (a1[l] + a2[l] == 0) {
            dropped.push_back(levels[l]);
            continue;
        }
        kept_labels.push_back(levels[l]);
        k1.push_back(a1[l]);
        k2.push_back(a2[l]);
    }
    return {ContingencyTable(std::move(kept_labels), std::move(k1), std::move(k2)), std::move(dropped)};
}

ChiSquareResult chi_square(const ContingencyTable& t) {
    const double n1 = static_cast<double>(t.n1());
    const double n2 = static_cast<double>(t.n2());
    ChiSquareResult r;
    r.per_category.reserve(t.categories());
    for (std::size_t j = 0; j < t.categories(); ++j) {
        const double num = static_cast<double>(t.count(0, j)) * n2 - static_cast<double>(t.count(1, j)) * n1;
        const double contrib = num * num / (n1 * n2 * static_cast<double>(t.column_total(j)));
        r.per_category.push_back(contrib);
        r.chi2 += contrib;
    }
    r.r_squared = r.chi2 / static_cast<double>(t.total());
    return r;
}

VifResult vif_from_chi_square(const ContingencyTable& t) {
    const auto cs = chi_square(t);
    return from_r_squared(cs.r_squared, {t.n1(), t.n2()}, t.categories() - 1, VifRoute::ChiSquare);
}

// ---------------------------------------------------------------------------

double r_squared_from_mahalanobis(double d2_mv, std::size_t n1, std::size_t n2) {
    const double n = static_cast<double>(n1 + n2);
    const double a = static_cast<double>(n1) * static_cast<double>(n2) * d2_mv;
    return a / (n * (n - 2.0) + a);
}

RaoBridge rao_bridge(const DesignMatrix& design, const ArmAssignment& arms) {
    const auto c = checked_counts(design, arms);
    const std::size_t k = design.k;
    if (k == 0) fail(ErrorCode::InvalidArgument, "Rao bridge needs at least one covariate");
    if (design.rank < k) fail(ErrorCode::RankDeficient, "design is not of full column rank");
    const double n = static_cast<double>(c.total());
    const double kd = static_cast<double>(k);
    if (!(n > kd + 1.0)) fail(ErrorCode::DomainError, "Rao bridge needs N > k + 1");

    const double r2 = vif_regression(design, arms).r_squared_z;
    const double n1n2 = static_cast<double>(c.n1) * static_cast<double>(c.n2);
    RaoBridge b;
    b.d2_mv = r2 * n * (n - 2.0) / (n1n2 * (1.0 - r2));
    b.f_rao = (n - kd - 1.0) / ((n - 2.0) * kd) * (n1n2 / n) * b.d2_mv;
    b.lambda = 1.0 + kd * b.f_rao / (n - kd - 1.0);
    return b;
}

MarginalSlopes marginal_decomposition(std::span<const double> y, std::span<const double> z,
                                      std::span<const double> x) {
    const std::size_t n = y.size();
    if (z.size() != n || x.size() != n) fail(ErrorCode::InvalidArgument, "vector length mismatch");
    if (n < 3) fail(ErrorCode::InvalidArgument, "marginal decomposition needs at least 3 subjects");
    if (std::set<double>(z.begin(), z.end()).size() != 2)
        fail(ErrorCode::InvalidArgument, "treatment indicator must take exactly two values");

    const std::vector<double> zv(z.begin(), z.end());
    const std::vector<double> xv(x.begin(), x.end());
    const Matrix zm = Matrix::from_columns(n, {zv});
    const Matrix zx = Matrix::from_columns(n, {zv, xv});

    MarginalSlopes s;
    s.yz = linalg::least_squares(zm, y, true).coefficients[0];
    s.xz = linalg::least_squares(zm, x, true).coefficients[0];
    const auto both = linalg::least_squares(zx, y, true);
    s.yz_given_x = both.coefficients[0];
    s.yx_given_z = both.coefficients[1];
    return s;
}

}  // namespace covadj
