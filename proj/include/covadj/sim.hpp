#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "covadj/dataset.hpp"
#include "covadj/rng.hpp"

namespace covadj::sim {

/// How each replicate perturbs the observed trial.
enum class Scheme : std::uint32_t {
    Permutation = 0,         // covariates fixed, treatment re-drawn
    MultivariateNormal = 1,  // treatment fixed, covariates drawn from a fitted MVN
    Bootstrap = 2,           // treatment fixed, covariate rows resampled
};

inline constexpr Scheme kAllSchemes[] = {Scheme::Permutation, Scheme::MultivariateNormal, Scheme::Bootstrap};

std::string_view to_string(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

struct SimConfig {
    std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
    std::vector<ModelSpec> models;
    long replicates = 1000;
    std::uint64_t seed = 0;
    unsigned max_redraws = 100;
    unsigned threads = 0;  // 0: one per hardware thread
    /// Permutation scheme shuffles the observed assignment (fixed n1, n2)
    /// instead of drawing each subject's arm by a fair coin.
    bool fixed_margin_permutation = false;
};

struct SimCell {
    Scheme scheme = Scheme::Permutation;
    std::size_t model_index = 0;
    ModelSpec model;
    std::size_t k = 0;
    /// False for multivariate-normal cells whose model has a multi-level
    /// categorical covariate; such cells carry no estimates.
    bool supported = true;
    std::optional<double> mean_lambda;
    std::optional<double> var_lambda;  // denominator m_effective − 1
    std::optional<double> mc_se_mean;
    std::optional<double> theory_mean;
    std::optional<double> theory_var;
    std::size_t redraw_count = 0;
    std::size_t dropped = 0;
    std::size_t m_effective = 0;

    /// At most 1% of the requested replicates were dropped.
    bool quality_ok(long replicates) const noexcept;
};

/// Each subject independently joins arm 2 with probability ½.
ArmAssignment draw_permutation(RngStream& stream, std::size_t n);

/// Uniformly random reordering of an existing assignment.
ArmAssignment draw_fixed_margin_permutation(RngStream& stream, const ArmAssignment& arms);

/// n draws from N(mean, covariance). Binary covariates are drawn on their
/// ±½ scale and dichotomised at 0; the returned columns use the dataset
/// convention (measured value, or level index 0/1 for binary).
std::vector<std::vector<double>> draw_mvn_covariates(RngStream& stream, const MomentSummary& moments,
                                                     const std::vector<CovariateKind>& kinds, std::size_t n);

/// Factor used by draw_mvn_covariates: Cholesky, retried with a diagonal
/// jitter of 1e-10 × max diagonal. Throws NotPositiveSemiDefinite.
linalg::Matrix mvn_factor(const linalg::Matrix& covariance);

/// Row index (0-based) for each subject position, uniform on [0, n).
std::vector<std::size_t> draw_bootstrap(RngStream& stream, std::size_t n);

/// Number of design columns the model expands to.
std::size_t model_width(const Dataset& d, const ModelSpec& m);

/// Runs every (scheme, model) cell. Degenerate replicates (empty arm,
/// complete confounding, constant or aliased columns) are redrawn up to
/// max_redraws times from fresh streams, then dropped and counted.
/// The result is a pure function of (d, cfg) apart from cfg.threads.
std::vector<SimCell> simulate_cells(const Dataset& d, const SimConfig& cfg);

/// simulate_cells, then throws TooManyRedraws if any cell dropped more than
/// 1% of its replicates.
std::vector<SimCell> run_simulation(const Dataset& d, const SimConfig& cfg);

/// Order-fixed pairwise summation.
double pairwise_sum(const double* values, std::size_t count);

}  // namespace covadj::sim
