#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "covadj/dataset.hpp"

namespace covadj {

enum class VifRoute { Regression, QuadraticForm, ChiSquare, RaoBridge };

std::string_view to_string(VifRoute route);

/// Variance inflation factor λ = 1/(1 − R²_Z) for the treatment contrast.
struct VifResult {
    double lambda = 1.0;
    double r_squared_z = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t k = 0;
    VifRoute route = VifRoute::Regression;
};

/// R²_Z at or above this is treated as complete confounding.
inline constexpr double kConfoundingTolerance = 1e-10;

/// Regresses the 0/1 treatment indicator on the design (with intercept).
/// Aliased design columns are absorbed by the pivoted fit.
VifResult vif_regression(const DesignMatrix& design, const ArmAssignment& arms);

/// 1/λ = 1 − (n1·n2/N)·Dᵀ(XᵀX)⁻¹D, D the arm difference in covariate means.
/// Throws RankDeficient for designs with rank < k; callers fall back to
/// vif_regression.
VifResult vif_quadratic(const DesignMatrix& design, const ArmAssignment& arms);

/// 2 x L table of arm-by-category counts. Categories with no subjects are
/// removed before construction.
class ContingencyTable {
public:
    /// counts[0] holds arm-1 counts per category, counts[1] arm-2 counts.
    /// Throws EmptyMargin when an arm or a category total is zero.
    ContingencyTable(std::vector<std::string> labels, std::vector<std::size_t> arm1,
                     std::vector<std::size_t> arm2);

    std::size_t categories() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t count(std::size_t arm, std::size_t category) const { return counts_[arm][category]; }
    std::size_t n1() const noexcept { return n_[0]; }
    std::size_t n2() const noexcept { return n_[1]; }
    std::size_t column_total(std::size_t category) const;
    std::size_t total() const noexcept { return n_[0] + n_[1]; }

private:
    std::vector<std::string> labels_;
    std::vector<std::size_t> counts_[2];
    std::size_t n_[2] = {0, 0};
};

struct ContingencyBuild {
    ContingencyTable table;
    std::vector<std::string> dropped_levels;
};

/// Cross-classifies a binary or categorical covariate by treatment arm.
ContingencyBuild contingency(const Dataset& d, const std::string& covariate);

struct ChiSquareResult {
    double chi2 = 0.0;
    std::vector<double> per_category;  // contribution of each category
    double r_squared = 0.0;            // chi2 / N
};

ChiSquareResult chi_square(const ContingencyTable& t);

/// λ = 1/(1 − χ²/N); equals the dummy-regression VIF for the same covariate.
VifResult vif_from_chi_square(const ContingencyTable& t);

/// Two-sample multivariate bridge: squared Mahalanobis distance between arm
/// means, Rao's F and the λ implied by it.
struct RaoBridge {
    double d2_mv = 0.0;
    double f_rao = 0.0;
    double lambda = 1.0;
};

/// D² is recovered from the regression R²_Z by inverting
/// R² = n1·n2·D² / (N(N−2) + n1·n2·D²). Needs a full-rank design and N > k+1.
RaoBridge rao_bridge(const DesignMatrix& design, const ArmAssignment& arms);

/// R²_Z implied by a squared Mahalanobis distance.
double r_squared_from_mahalanobis(double d2_mv, std::size_t n1, std::size_t n2);

/// Slopes of the marginalisation identity β_YZ = β_YZ|X + β_YX|Z·β_XZ.
struct MarginalSlopes {
    double yz = 0.0;           // Y on Z
    double yz_given_x = 0.0;   // coefficient of Z in Y on (Z, X)
    double yx_given_z = 0.0;   // coefficient of X in Y on (Z, X)
    double xz = 0.0;           // X on Z

    double identity_residual() const noexcept { return yz - (yz_given_x + yx_given_z * xz); }
};

MarginalSlopes marginal_decomposition(std::span<const double> outcome, std::span<const double> treatment,
                                      std::span<const double> covariate);

}  // namespace covadj
