#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "covadj/dataset.hpp"
#include "covadj/sim.hpp"

namespace covadj::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSimulationQuality = 3;
inline constexpr int kExitRouteDiscrepancy = 4;

/// Largest tolerated disagreement between VIF routes before `vif` fails.
inline constexpr double kRouteTolerance = 1e-8;

inline constexpr std::uint64_t kDefaultSyntheticSeed = 20240817;

/// Entry point shared by the executable and the tests. args[0] is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit status for a library error.
int exit_code_for(const std::exception& e);

/// Parses "name:kind[:label|label...]" entries separated by commas, where kind
/// is continuous, binary or categorical.
Schema parse_covariate_list(const std::string& text);

/// Full-precision decimal (17 significant digits).
std::string format_full(double v);
std::string format_optional(const std::optional<double>& v);

struct DataOptions {
    std::filesystem::path path;
    std::string treatment;
    std::string covariates;
    std::optional<std::string> outcome;
};

struct VifOptions {
    DataOptions data;
    std::vector<std::string> model;  // empty: every covariate
    std::string route = "all";       // all | regression | quadratic | rao | chisq
    /// Test hook: added to the quadratic-form λ to simulate a broken route.
    double quadratic_perturbation = 0.0;
};

struct PlanOptions {
    long n = 0;
    long k_from = 0;
    long k_to = 5;
    long extra_dof = 0;
    std::optional<double> rmse_ratio;
    bool csv = false;
};

struct BreakevenOptions {
    long nu_from = 2;
    long nu_to = 100;
    bool csv = false;
};

struct ScoreOptions {
    long n = 0;
    long k = 0;
    double rho_current = 0.0;
    double rho_historical = 0.0;
};

struct SimulateOptions {
    DataOptions data;
    std::vector<sim::Scheme> schemes{std::begin(sim::kAllSchemes), std::end(sim::kAllSchemes)};
    long replicates = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    unsigned max_redraws = 100;
    bool fixed_margins = false;
    std::filesystem::path out;
};

/// Each command writes its report to `out` and returns an exit status;
/// library errors propagate as exceptions.
int cmd_vif(const VifOptions& o, std::ostream& out);
int cmd_plan(const PlanOptions& o, std::ostream& out);
int cmd_breakeven(const BreakevenOptions& o, std::ostream& out);
int cmd_score(const ScoreOptions& o, std::ostream& out);
/// Writes cells.csv and summary.json into o.out; exit 3 when a cell dropped
/// too many replicates.
int cmd_simulate(const SimulateOptions& o, std::ostream& out);

/// Per-cell CSV exactly as cmd_simulate writes it.
std::string cells_csv(const std::vector<sim::SimCell>& cells);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

}  // namespace covadj::cli
