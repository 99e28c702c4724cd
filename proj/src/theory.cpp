#include "covadj/theory.hpp"

#include <cmath>
#include <string>

#include "covadj/error.hpp"

namespace covadj::theory {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::DomainError, what);
}

double d(long v) { return static_cast<double>(v); }

}  // namespace

double contrast_variance(long n1, long n2, double sigma2) {
    require(n1 >= 1 && n2 >= 1, "arm sizes must be >= 1");
    require(sigma2 > 0.0, "sigma2 must be positive");
    return (1.0 / d(n1) + 1.0 / d(n2)) * sigma2;
}

TheoryMoments vif_moments(long n, long k) {
    require(n >= 2 && k >= 0, "vif_moments needs N >= 2 and k >= 0");
    TheoryMoments m{n, k, std::nullopt, std::nullopt};
    if (k == 0) {
        m.expected_vif = 1.0;
        m.vif_variance = 0.0;
        return m;
    }
    // (N−3)/(N−k−3) = 1 + k/(N−k−3); one division keeps it bit-equal to the dof form.
    if (n > k + 3) m.expected_vif = d(n - 3) / d(n - k - 3);
    if (n > k + 5) {
        const double a = d(n - k - 3);
        m.vif_variance = 2.0 * d(k) * d(n - 3) / (a * a * d(n - k - 5));
    }
    return m;
}

double expected_vif_from_dof(long nu, long k) {
    require(k >= 0 && nu > k + 1, "expected VIF needs nu > k + 1");
    return d(nu - 1) / d(nu - k - 1);
}

double t_variance(long n, long k) {
    require(k >= 0 && n - k - 4 > 0, "t variance needs N - k - 4 > 0 (more than 2 residual dof)");
    return d(n - 2 - k) / d(n - 4 - k);
}

double fisher_precision_factor(long nu) {
    require(nu >= 1, "Fisher factor needs nu >= 1");
    return d(nu + 3) / d(nu + 1);
}

ThreeFactorBudget three_factor_budget(long n, long k, double rmse_ratio) {
    require(rmse_ratio > 0.0 && rmse_ratio <= 1.0, "rmse ratio must lie in (0, 1]");
    const auto moments = vif_moments(n, k);
    require(moments.expected_vif.has_value(), "expected VIF undefined for N <= k + 3");
    require(n - 2 - k >= 1, "no residual degrees of freedom");
    ThreeFactorBudget b;
    b.expected_vif = *moments.expected_vif;
    b.rmse_ratio = rmse_ratio;
    b.second_order_ratio = fisher_precision_factor(n - 2 - k) / fisher_precision_factor(n - 2);
    b.combined = b.expected_vif * b.rmse_ratio * b.second_order_ratio;
    return b;
}

AddCovariateRatios add_covariate_ratios(long nu) {
    require(nu >= 3, "adding a covariate needs nu >= 3");
    return {d(nu - 1) / d(nu - 2), d(nu + 2) * d(nu + 1) / (d(nu) * d(nu + 3))};
}

std::string_view to_string(BreakEvenRule rule) {
    switch (rule) {
        case BreakEvenRule::Simple: return "simple";
        case BreakEvenRule::RuleOfThumb: return "rule_of_thumb";
        case BreakEvenRule::Fisher: return "fisher";
    }
    return "unknown";
}

double breakeven(BreakEvenRule rule, long nu) {
    switch (rule) {
        case BreakEvenRule::Simple:
            require(nu >= 2, "simple break-even needs nu >= 2");
            return 1.0 / std::sqrt(d(nu - 1));
        case BreakEvenRule::RuleOfThumb:
            require(nu >= 3, "rule-of-thumb break-even needs nu >= 3");
            return 1.0 / std::sqrt(d(nu - 2));
        case BreakEvenRule::Fisher: {
            // The defining product includes (ν−1)/(ν−2), so ν = 2 is excluded.
            require(nu >= 3, "Fisher break-even needs nu >= 3");
            const double v = d(nu);
            const double radicand = (v * v + 5.0 * v - 2.0) / ((v - 1.0) * (v + 1.0) * (v + 2.0));
            require(radicand > 0.0 && radicand <= 1.0, "Fisher break-even radicand outside (0, 1]");
            return std::sqrt(radicand);
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown break-even rule");
}

HistoricalScoreRatios historical_score_ratios(long n, long k, double rho_current, double rho_historical) {
    require(k >= 1, "historical score needs k >= 1");
    require(n > k + 3, "historical score ratio needs N > k + 3");
    require(std::abs(rho_current) < 1.0 && std::abs(rho_historical) < 1.0,
            "correlations must lie in (-1, 1)");
    return {d(n - 4) / d(n - k - 3),
            (1.0 - rho_current * rho_current) / (1.0 - rho_historical * rho_historical)};
}

FMoments f_moments(long nu, long omega) {
    require(nu >= 1 && omega >= 1, "F moments need nu, omega >= 1");
    FMoments m;
    const double w = d(omega);
    if (omega > 2) m.mean = w / (w - 2.0);
    if (omega > 4) m.variance = 2.0 * w * w * (d(nu) + w - 2.0) / (d(nu) * (w - 2.0) * (w - 2.0) * (w - 4.0));
    return m;
}

double mc_standard_error(double variance, long m) {
    require(variance >= 0.0 && m >= 1, "MC standard error needs variance >= 0 and m >= 1");
    return std::sqrt(variance / d(m));
}

}  // namespace covadj::theory
