#include "covadj/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "covadj/error.hpp"
#include "covadj/theory.hpp"
#include "covadj/vif.hpp"

namespace covadj::sim {

using linalg::Matrix;

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::Permutation: return "permutation";
        case Scheme::MultivariateNormal: return "mvn";
        case Scheme::Bootstrap: return "bootstrap";
    }
    return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
    for (auto s : kAllSchemes)
        if (to_string(s) == name) return s;
    return std::nullopt;
}

bool SimCell::quality_ok(long replicates) const noexcept {
    return static_cast<double>(dropped) <= 0.01 * static_cast<double>(replicates);
}

// ---------------------------------------------------------------------------
// Draws

ArmAssignment draw_permutation(RngStream& stream, std::size_t n) {
    if (n < 2) fail(ErrorCode::InvalidArgument, "permutation draw needs n >= 2");
    ArmAssignment arms(n);
    for (auto& a : arms) a = stream.coin() ? 1 : 0;
    return arms;
}

ArmAssignment draw_fixed_margin_permutation(RngStream& stream, const ArmAssignment& arms) {
    ArmAssignment out = arms;
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[stream.below(i)]);
    return out;
}

Matrix mvn_factor(const Matrix& covariance) {
    const std::size_t k = covariance.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < k; ++i) max_diag = std::max(max_diag, covariance(i, i));
    if (max_diag == 0.0) {
        if (covariance.max_abs() != 0.0)
            fail(ErrorCode::NotPositiveSemiDefinite, "zero diagonal with non-zero covariance");
        return Matrix::zeros(k, k);
    }
    try {
        return linalg::cholesky(covariance);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
    }
    std::vector<double> jittered(covariance.entries().begin(), covariance.entries().end());
    for (std::size_t i = 0; i < k; ++i) jittered[i * k + i] += 1e-10 * max_diag;
    return linalg::cholesky_semidefinite(Matrix(k, k, std::move(jittered)));
}

namespace {

std::vector<std::vector<double>> draw_with_factor(RngStream& stream, const std::vector<double>& mean,
                                                  const Matrix& factor, const std::vector<CovariateKind>& kinds,
                                                  std::size_t n) {
    const std::size_t k = mean.size();
    std::vector<std::vector<double>> cols(k, std::vector<double>(n));
    std::vector<double> z(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : z) v = stream.normal();
        for (std::size_t a = 0; a < k; ++a) {
            double v = mean[a];
            for (std::size_t b = 0; b <= a; ++b) v += factor(a, b) * z[b];
            cols[a][i] = kinds[a].type() == CovariateKind::Type::Binary ? (v > 0.0 ? 1.0 : 0.0) : v;
        }
    }
    return cols;
}

}  // namespace

std::vector<std::vector<double>> draw_mvn_covariates(RngStream& stream, const MomentSummary& moments,
                                                     const std::vector<CovariateKind>& kinds, std::size_t n) {
    if (kinds.size() != moments.mean.size()) fail(ErrorCode::InvalidArgument, "kinds/moments size mismatch");
    for (const auto& kind : kinds)
        if (kind.type() == CovariateKind::Type::Categorical)
            fail(ErrorCode::CategoricalUnsupported, "multivariate normal draws cannot produce categorical covariates");
    if (moments.mean.empty()) return {};
    return draw_with_factor(stream, moments.mean, mvn_factor(moments.covariance), kinds, n);
}

std::vector<std::size_t> draw_bootstrap(RngStream& stream, std::size_t n) {
    if (n < 2) fail(ErrorCode::InvalidArgument, "bootstrap draw needs n >= 2");
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(stream.below(n));
    return rows;
}

std::size_t model_width(const Dataset& d, const ModelSpec& m) {
    std::size_t k = 0;
    for (const auto& name : m.covariate_names) k += d.covariate(name).kind.design_width();
    return k;
}

double pairwise_sum(const double* values, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += values[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

// ---------------------------------------------------------------------------
// Engine

namespace {

// Everything about a cell that does not change across replicates.
struct CellPlan {
    Scheme scheme;
    std::size_t model_index;
    std::size_t k;
    bool supported = true;
    const Dataset* model_data = nullptr;  // dataset restricted to the model's covariates
    std::optional<DesignMatrix> fixed_design;
    std::vector<double> mvn_mean;
    Matrix mvn_factor;
    std::vector<CovariateKind> kinds;
};

Dataset restrict_to(const Dataset& d, const ModelSpec& m) {
    std::vector<Covariate> covs;
    for (const auto& name : m.covariate_names) covs.push_back(d.covariate(name));
    return Dataset(d.arm_labels(), d.arms(), std::move(covs), d.outcome_name(), d.outcome());
}

bool redrawable(ErrorCode code) {
    switch (code) {
        case ErrorCode::CompleteConfounding:
        case ErrorCode::NotTwoArms:
        case ErrorCode::ConstantColumn:
        case ErrorCode::RankDeficient:
        case ErrorCode::DegenerateResponse:
            return true;
        default:
            return false;
    }
}

double lambda_of(const DesignMatrix& design, const ArmAssignment& arms) {
    if (design.rank < design.k) fail(ErrorCode::RankDeficient, "design columns collapsed");
    return vif_regression(design, arms).lambda;
}

double one_replicate(const CellPlan& plan, const SimConfig& cfg, RngStream& stream) {
    const Dataset& data = *plan.model_data;
    const ModelSpec all{data.covariate_names()};
    switch (plan.scheme) {
        case Scheme::Permutation: {
            const ArmAssignment arms = cfg.fixed_margin_permutation
                                           ? draw_fixed_margin_permutation(stream, data.arms())
                                           : draw_permutation(stream, data.n());
            return lambda_of(*plan.fixed_design, arms);
        }
        case Scheme::MultivariateNormal: {
            if (plan.k == 0) return 1.0;
            auto cols = draw_with_factor(stream, plan.mvn_mean, plan.mvn_factor, plan.kinds, data.n());
            const Dataset drawn = data.with_covariate_values(std::move(cols));
            return lambda_of(build_design(drawn, all), drawn.arms());
        }
        case Scheme::Bootstrap: {
            const Dataset drawn = data.with_resampled_rows(draw_bootstrap(stream, data.n()));
            return lambda_of(build_design(drawn, all), drawn.arms());
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown scheme");
}

}  // namespace

std::vector<SimCell> simulate_cells(const Dataset& d, const SimConfig& cfg) {
    if (cfg.replicates < 1) fail(ErrorCode::InvalidArgument, "replicates must be >= 1");
    if (cfg.models.empty()) fail(ErrorCode::InvalidArgument, "no models to simulate");
    if (cfg.schemes.empty()) fail(ErrorCode::InvalidArgument, "no schemes selected");
    if (cfg.max_redraws >= 0xFFFF) fail(ErrorCode::InvalidArgument, "max_redraws must be < 65535");
    if (d.n() < 2) fail(ErrorCode::InvalidArgument, "simulation needs N >= 2");

    std::vector<Dataset> model_data;
    model_data.reserve(cfg.models.size());
    for (const auto& m : cfg.models) {
        validate_model(d, m);
        model_data.push_back(restrict_to(d, m));
    }

    std::vector<CellPlan> plans;
    for (auto scheme : cfg.schemes) {
        for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
            const ModelSpec& m = cfg.models[mi];
            CellPlan p{scheme, mi, model_width(d, m)};
            p.model_data = &model_data[mi];
            for (const auto& name : m.covariate_names) p.kinds.push_back(d.covariate(name).kind);
            if (scheme == Scheme::Permutation) {
                p.fixed_design = build_design(d, m);
            } else if (scheme == Scheme::MultivariateNormal) {
                p.supported = std::all_of(p.kinds.begin(), p.kinds.end(),
                                          [](const CovariateKind& k) { return k.is_numeric_codable(); });
                if (p.supported && p.k > 0) {
                    const auto moments = sample_moments(d, m);
                    p.mvn_mean = moments.mean;
                    p.mvn_factor = mvn_factor(moments.covariance);
                }
            }
            plans.push_back(std::move(p));
        }
    }

    const auto m = static_cast<std::size_t>(cfg.replicates);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> lambdas(plans.size(), std::vector<double>(m, nan));
    std::vector<std::vector<unsigned>> attempts(plans.size(), std::vector<unsigned>(m, 0));

    constexpr std::size_t kChunk = 64;
    const std::size_t chunks_per_cell = (m + kChunk - 1) / kChunk;
    const std::size_t tasks = plans.size() * chunks_per_cell;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        try {
            for (std::size_t t = next++; t < tasks && !abort; t = next++) {
                const std::size_t ci = t / chunks_per_cell;
                const CellPlan& plan = plans[ci];
                if (!plan.supported) continue;
                const std::size_t begin = (t % chunks_per_cell) * kChunk;
                const std::size_t end = std::min(m, begin + kChunk);
                for (std::size_t r = begin; r < end; ++r) {
                    for (unsigned attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
                        RngStream stream(cfg.seed, {static_cast<std::uint32_t>(plan.scheme),
                                                    static_cast<std::uint32_t>(plan.model_index),
                                                    static_cast<std::uint32_t>(r), attempt});
                        attempts[ci][r] = attempt;
                        try {
                            lambdas[ci][r] = one_replicate(plan, cfg, stream);
                            break;
                        } catch (const Error& e) {
                            if (!redrawable(e.code())) throw;
                        }
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            abort = true;
        }
    };

    unsigned threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    const long n = static_cast<long>(d.n());
    std::vector<SimCell> cells;
    cells.reserve(plans.size());
    for (std::size_t ci = 0; ci < plans.size(); ++ci) {
        const CellPlan& plan = plans[ci];
        SimCell cell;
        cell.scheme = plan.scheme;
        cell.model_index = plan.model_index;
        cell.model = cfg.models[plan.model_index];
        cell.k = plan.k;
        cell.supported = plan.supported;
        if (plan.supported) {
            const auto theory = theory::vif_moments(n, static_cast<long>(plan.k));
            cell.theory_mean = theory.expected_vif;
            cell.theory_var = theory.vif_variance;

            std::vector<double> valid;
            valid.reserve(m);
            for (std::size_t r = 0; r < m; ++r) {
                if (std::isnan(lambdas[ci][r])) {
                    ++cell.dropped;
                    cell.redraw_count += cfg.max_redraws;
                } else {
                    valid.push_back(lambdas[ci][r]);
                    cell.redraw_count += attempts[ci][r];
                }
            }
            cell.m_effective = valid.size();
            if (!valid.empty()) {
                const double mean = pairwise_sum(valid.data(), valid.size()) / static_cast<double>(valid.size());
                cell.mean_lambda = mean;
                if (valid.size() >= 2) {
                    std::vector<double> sq(valid.size());
                    for (std::size_t i = 0; i < valid.size(); ++i) sq[i] = (valid[i] - mean) * (valid[i] - mean);
                    const double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(valid.size() - 1);
                    cell.var_lambda = var;
                    cell.mc_se_mean = theory::mc_standard_error(var, static_cast<long>(valid.size()));
                }
            }
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<SimCell> run_simulation(const Dataset& d, const SimConfig& cfg) {
    auto cells = simulate_cells(d, cfg);
    for (const auto& c : cells)
        if (c.supported && !c.quality_ok(cfg.replicates))
            fail(ErrorCode::TooManyRedraws, std::string(to_string(c.scheme)) + " / " + c.model.label() +
                                                " dropped " + std::to_string(c.dropped) + " of " +
                                                std::to_string(cfg.replicates) + " replicates");
    return cells;
}

}  // namespace covadj::sim
