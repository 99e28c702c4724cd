#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covadj/linalg.hpp"

namespace covadj {

/// Arm index per subject: 0 for the first arm label, 1 for the second.
using ArmAssignment = std::vector<std::uint8_t>;

struct ArmCounts {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    std::size_t total() const noexcept { return n1 + n2; }
};

ArmCounts count_arms(const ArmAssignment& arms);

class CovariateKind {
public:
    enum class Type { Continuous, Binary, Categorical };

    static CovariateKind continuous();
    static CovariateKind binary(std::string first, std::string second);
    static CovariateKind categorical(std::vector<std::string> levels);

    Type type() const noexcept { return type_; }
    const std::vector<std::string>& levels() const noexcept { return levels_; }
    bool is_numeric_codable() const noexcept { return type_ != Type::Categorical; }
    /// Number of design columns this covariate expands to.
    std::size_t design_width() const noexcept;

private:
    CovariateKind(Type type, std::vector<std::string> levels);

    Type type_ = Type::Continuous;
    std::vector<std::string> levels_;
};

/// Binary covariates are coded −½ for the first level and +½ for the second.
inline constexpr double kBinaryLow = -0.5;
inline constexpr double kBinaryHigh = 0.5;

struct Covariate {
    std::string name;
    CovariateKind kind;
    /// Measured value for continuous covariates; level index for the others.
    std::vector<double> values;

    /// Value used in numeric summaries: the raw value, or ±½ for binary.
    double coded(std::size_t subject) const;
};

struct SchemaEntry {
    std::string name;
    CovariateKind kind;
};
using Schema = std::vector<SchemaEntry>;

class Dataset {
public:
    /// Validates the invariants: both arms non-empty, equal column lengths,
    /// level indices within range, continuous values finite.
    Dataset(std::array<std::string, 2> arm_labels, ArmAssignment arms,
            std::vector<Covariate> covariates, std::optional<std::string> outcome_name = {},
            std::optional<std::vector<double>> outcome = {});

    std::size_t n() const noexcept { return arms_.size(); }
    ArmCounts arm_counts() const { return count_arms(arms_); }
    const std::array<std::string, 2>& arm_labels() const noexcept { return arm_labels_; }
    const ArmAssignment& arms() const noexcept { return arms_; }
    const std::vector<Covariate>& covariates() const noexcept { return covariates_; }
    std::vector<std::string> covariate_names() const;
    const Covariate& covariate(const std::string& name) const;
    const std::optional<std::vector<double>>& outcome() const noexcept { return outcome_; }
    const std::optional<std::string>& outcome_name() const noexcept { return outcome_name_; }

    /// Same covariates, different treatment assignment. The assignment may
    /// leave an arm empty; consumers decide whether that is an error.
    Dataset with_arms(ArmAssignment arms) const;
    /// Same treatment, covariate columns replaced (same names and kinds).
    Dataset with_covariate_values(std::vector<std::vector<double>> values) const;
    /// Subject i receives the complete covariate row rows[i]; treatment and
    /// outcome stay with the subject position.
    Dataset with_resampled_rows(const std::vector<std::size_t>& rows) const;

private:
    std::array<std::string, 2> arm_labels_;
    ArmAssignment arms_;
    std::vector<Covariate> covariates_;
    std::optional<std::string> outcome_name_;
    std::optional<std::vector<double>> outcome_;
};

struct DroppedRow {
    std::size_t line = 0;  // 1-based line number in the input, header is line 1
    std::string reason;
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::vector<DroppedRow> dropped;

    /// key: value lines, one "dropped:" line per removed row.
    std::string to_text() const;
};

struct LoadResult {
    Dataset dataset;
    LoadReport report;
};

/// Reads a comma-separated table with a header row. Fields that are empty or
/// "NA" count as missing, and a subject with any missing field in a used
/// column is dropped. Columns not named by the schema are ignored.
LoadResult load_csv(std::istream& in, const Schema& schema, const std::string& treatment_column,
                    const std::optional<std::string>& outcome_column = {});

/// Writes the dataset in the format load_csv reads, numbers at full precision.
void write_csv(std::ostream& out, const Dataset& d, const std::string& treatment_column);

Schema schema_of(const Dataset& d);

struct ModelSpec {
    std::vector<std::string> covariate_names;

    std::string label() const;  // names joined by '+', "none" for the empty model
    bool operator==(const ModelSpec&) const = default;
};

void validate_model(const Dataset& d, const ModelSpec& m);

struct DesignMatrix {
    linalg::Matrix matrix;  // N x k, centered columns
    std::vector<std::string> column_names;
    std::size_t k = 0;
    std::size_t rank = 0;
};

/// Continuous: one centered column. Binary: one centered ±½ column.
/// Categorical with L levels: L−1 centered dummies against the first level.
/// Throws ConstantColumn when a chosen covariate takes a single value.
DesignMatrix build_design(const Dataset& d, const ModelSpec& m);

inline constexpr std::size_t kMaxEnumeratedCovariates = 20;

/// All 2^k subsets ordered by size, then lexicographically by position in
/// the input list.
std::vector<ModelSpec> enumerate_models(const std::vector<std::string>& covariate_names);

struct MomentSummary {
    std::vector<std::string> names;
    std::vector<double> mean;
    linalg::Matrix covariance;  // denominator N−1
    std::vector<std::string> constant_columns;
};

MomentSummary sample_moments(const Dataset& d, const ModelSpec& m);

struct CorrelationRow {
    std::string covariate;
    double outcome_ordinary = 0.0;
    double treatment_ordinary = 0.0;
    double outcome_partial = 0.0;
    double treatment_partial = 0.0;
};

/// Ordinary and partial correlations of each covariate with the outcome and
/// with the 0/1 treatment indicator (second arm = 1). Partial correlations
/// adjust both variables for the remaining covariates.
std::vector<CorrelationRow> correlation_report(const Dataset& d);

/// Pearson correlation; throws DegenerateResponse when either side is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Synthetic stand-in for a small two-arm trial: sex (binary M/F), age,
/// baseline (log FEV1), height, weight and a log FEV1 outcome.
Dataset synthetic_trial(std::uint64_t seed, std::size_t n = 46);
Schema synthetic_trial_schema();
inline constexpr const char* kSyntheticTreatmentColumn = "treatment";
inline constexpr const char* kSyntheticOutcomeColumn = "outcome";

}  // namespace covadj
