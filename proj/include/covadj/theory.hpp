#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

// Closed-form planning quantities for covariate adjustment in a two-arm
// trial of N subjects fitting k covariates. Counts are taken as long so that
// callers can pass differences like N − c − 2 without unsigned wrap-around;
// every function checks its own domain.

namespace covadj::theory {

/// (1/n1 + 1/n2)·σ².
double contrast_variance(long n1, long n2, double sigma2);

/// Mean and variance of λ for multivariate-normal covariates. A moment is
/// empty when it does not exist (mean needs N > k+3, variance N > k+5).
struct TheoryMoments {
    long n = 0;
    long k = 0;
    std::optional<double> expected_vif;
    std::optional<double> vif_variance;
};

TheoryMoments vif_moments(long n, long k);

/// E[λ] in terms of the unadjusted residual dof ν = N − 2 (or N − c − 2 when
/// c centre intercepts are also fitted): (ν − 1)/(ν − k − 1).
double expected_vif_from_dof(long nu, long k);

/// Variance of Student's t on N − 2 − k dof: (N−2−k)/(N−4−k).
double t_variance(long n, long k);

/// Fisher's second-order precision factor (ν+3)/(ν+1).
double fisher_precision_factor(long nu);

struct ThreeFactorBudget {
    double expected_vif = 1.0;
    double rmse_ratio = 1.0;
    double second_order_ratio = 1.0;
    double combined = 1.0;
};

/// Expected VIF × RMSE ratio × (Fisher factor at N−2−k over Fisher factor at N−2).
ThreeFactorBudget three_factor_budget(long n, long k, double rmse_ratio);

struct AddCovariateRatios {
    double r_lambda = 1.0;      // (ν−1)/(ν−2)
    double fisher_ratio = 1.0;  // (ν+2)(ν+1)/(ν(ν+3))
};

/// Ratios (new model over current) from adding one covariate to a model with
/// ν residual dof.
AddCovariateRatios add_covariate_ratios(long nu);

enum class BreakEvenRule { Simple, RuleOfThumb, Fisher };

std::string_view to_string(BreakEvenRule rule);

/// Partial correlation at which an extra covariate breaks even:
/// Simple 1/√(ν−1), RuleOfThumb 1/√(ν−2), Fisher √((ν²+5ν−2)/((ν−1)(ν+1)(ν+2))).
double breakeven(BreakEvenRule rule, long nu);

struct HistoricalScoreRatios {
    double vif_ratio = 1.0;   // (N−4)/(N−k−3): score model over full covariate model
    double rmse_ratio = 1.0;  // (1−ρ_c²)/(1−ρ_h²)
};

HistoricalScoreRatios historical_score_ratios(long n, long k, double rho_current, double rho_historical);

struct FMoments {
    std::optional<double> mean;      // ω/(ω−2), ω > 2
    std::optional<double> variance;  // 2ω²(ν+ω−2)/(ν(ω−2)²(ω−4)), ω > 4
};

FMoments f_moments(long nu, long omega);

/// Monte Carlo standard error √(variance/m).
double mc_standard_error(double variance, long m);

}  // namespace covadj::theory
