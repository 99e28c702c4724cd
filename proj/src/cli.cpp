#include "covadj/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "covadj/error.hpp"
#include "covadj/theory.hpp"
#include "covadj/vif.hpp"

namespace covadj::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Helpers

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) { return v ? format_full(*v) : "undef"; }

namespace {

std::string fixed(double v, int digits = 6) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string fixed_optional(const std::optional<double>& v, int digits = 6) {
    return v ? fixed(*v, digits) : "undef";
}

json json_optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        const auto b = cur.find_first_not_of(" \t");
        const auto e = cur.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + p.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
    out << content;
    if (!out) fail(ErrorCode::Io, "write to '" + p.string() + "' failed");
}

LoadResult load(const DataOptions& o) {
    if (o.path.empty()) fail(ErrorCode::InvalidArgument, "--data is required");
    if (o.treatment.empty()) fail(ErrorCode::InvalidArgument, "--treatment is required");
    std::istringstream in(read_file(o.path));
    return load_csv(in, parse_covariate_list(o.covariates), o.treatment, o.outcome);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::Io, "SHA-256 computation failed");
    std::ostringstream s;
    for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return s.str();
}

Schema parse_covariate_list(const std::string& text) {
    Schema schema;
    if (text.empty()) return schema;
    for (const auto& entry : split(text, ',')) {
        const auto parts = split(entry, ':');
        if (parts.size() < 2 || parts[0].empty())
            fail(ErrorCode::InvalidArgument, "covariate entry '" + entry + "' is not name:kind[:labels]");
        const std::string& kind = parts[1];
        std::vector<std::string> labels;
        if (parts.size() >= 3) labels = split(parts[2], '|');
        if (parts.size() > 3) fail(ErrorCode::InvalidArgument, "too many ':' in '" + entry + "'");
        if (kind == "continuous") {
            if (!labels.empty()) fail(ErrorCode::InvalidArgument, "continuous covariate '" + parts[0] + "' takes no labels");
            schema.push_back({parts[0], CovariateKind::continuous()});
        } else if (kind == "binary") {
            if (labels.size() != 2)
                fail(ErrorCode::InvalidArgument, "binary covariate '" + parts[0] + "' needs two labels, e.g. sex:binary:M|F");
            schema.push_back({parts[0], CovariateKind::binary(labels[0], labels[1])});
        } else if (kind == "categorical") {
            schema.push_back({parts[0], CovariateKind::categorical(labels)});
        } else {
            fail(ErrorCode::InvalidArgument, "unknown covariate kind '" + kind + "'");
        }
    }
    return schema;
}

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->code()) {
            case ErrorCode::TooManyRedraws: return kExitSimulationQuality;
            case ErrorCode::RouteDiscrepancy: return kExitRouteDiscrepancy;
            default: return kExitValidation;
        }
    }
    return kExitValidation;
}

// ---------------------------------------------------------------------------
// vif

int cmd_vif(const VifOptions& o, std::ostream& out) {
    const auto loaded = load(o.data);
    const Dataset& d = loaded.dataset;
    const ModelSpec model{o.model.empty() ? d.covariate_names() : o.model};
    const auto counts = d.arm_counts();

    const bool all = o.route == "all";
    if (!all && o.route != "regression" && o.route != "quadratic" && o.route != "rao" && o.route != "chisq")
        fail(ErrorCode::InvalidArgument, "unknown route '" + o.route + "'");

    out << loaded.report.to_text();
    out << "arms: " << d.arm_labels()[0] << " (n1 = " << counts.n1 << "), " << d.arm_labels()[1]
        << " (n2 = " << counts.n2 << "), N = " << d.n() << "\n";
    const DesignMatrix design = build_design(d, model);
    out << "model: " << model.label() << "  k = " << design.k << "  rank = " << design.rank << "\n\n";

    std::vector<std::pair<std::string, double>> lambdas;
    auto row = [&](const std::string& name, double lambda, double r2, const std::string& extra = "") {
        out << std::left << std::setw(12) << name << std::setw(24) << format_full(lambda) << std::setw(24)
            << format_full(r2) << extra << "\n";
        lambdas.emplace_back(name, lambda);
    };
    out << std::left << std::setw(12) << "route" << std::setw(24) << "lambda" << std::setw(24) << "r_squared_z"
        << "detail\n";

    if (all || o.route == "regression" || design.rank < design.k) {
        const auto r = vif_regression(design, d.arms());
        row("regression", r.lambda, r.r_squared_z);
    }
    if (all || o.route == "quadratic") {
        if (design.rank < design.k) {
            out << "quadratic   rank deficient (rank " << design.rank << " < k " << design.k
                << "), regression route stands in\n";
        } else {
            const auto r = vif_quadratic(design, d.arms());
            row("quadratic", r.lambda + o.quadratic_perturbation, r.r_squared_z);
        }
    }
    if ((all || o.route == "rao") && design.k > 0) {
        if (design.rank < design.k) {
            out << "rao         rank deficient, not computed\n";
        } else if (d.n() <= design.k + 1) {
            out << "rao         needs N > k + 1, not computed\n";
        } else {
            const auto b = rao_bridge(design, d.arms());
            row("rao", b.lambda, 1.0 - 1.0 / b.lambda,
                "D2_mv = " + format_full(b.d2_mv) + ", F_rao = " + format_full(b.f_rao));
        }
    }
    std::optional<ContingencyBuild> table;
    if (model.covariate_names.size() == 1 &&
        d.covariate(model.covariate_names[0]).kind.type() != CovariateKind::Type::Continuous) {
        table = contingency(d, model.covariate_names[0]);
        if (all || o.route == "chisq") {
            const auto r = vif_from_chi_square(table->table);
            row("chisq", r.lambda, r.r_squared_z);
        }
    } else if (o.route == "chisq") {
        fail(ErrorCode::NotCategorical, "chi-square route needs a model of one binary or categorical covariate");
    }

    double discrepancy = 0.0;
    for (const auto& a : lambdas)
        for (const auto& b : lambdas) discrepancy = std::max(discrepancy, std::abs(a.second - b.second));
    out << "\nmax_route_discrepancy: " << format_full(discrepancy) << "\n";

    if (table) {
        const auto& t = table->table;
        const auto cs = chi_square(t);
        out << "\ncontingency table (" << model.covariate_names[0] << ")\n";
        out << std::left << std::setw(14) << "arm";
        for (const auto& l : t.labels()) out << std::setw(10) << l;
        out << "total\n";
        for (std::size_t a = 0; a < 2; ++a) {
            out << std::setw(14) << d.arm_labels()[a];
            for (std::size_t j = 0; j < t.categories(); ++j) out << std::setw(10) << t.count(a, j);
            out << (a == 0 ? t.n1() : t.n2()) << "\n";
        }
        out << std::setw(14) << "total";
        for (std::size_t j = 0; j < t.categories(); ++j) out << std::setw(10) << t.column_total(j);
        out << t.total() << "\n";
        for (const auto& l : table->dropped_levels) out << "empty category dropped: " << l << "\n";
        out << "chi2: " << format_full(cs.chi2) << "\n";
        for (std::size_t j = 0; j < t.categories(); ++j)
            out << "chi2[" << t.labels()[j] << "]: " << format_full(cs.per_category[j]) << "\n";
        out << "r_squared (chi2/N): " << format_full(cs.r_squared) << "\n";
    }

    if (d.outcome()) {
        const bool codable = std::all_of(d.covariates().begin(), d.covariates().end(),
                                         [](const Covariate& c) { return c.kind.is_numeric_codable(); });
        if (codable && !d.covariates().empty()) {
            out << "\ncorrelations      outcome    treatment  partial_outcome  partial_treatment\n";
            for (const auto& r : correlation_report(d)) {
                out << std::left << std::setw(16) << r.covariate << std::right << std::setw(9)
                    << fixed(r.outcome_ordinary, 4) << std::setw(12) << fixed(r.treatment_ordinary, 4)
                    << std::setw(17) << fixed(r.outcome_partial, 3) << std::setw(19)
                    << fixed(r.treatment_partial, 3) << std::left << "\n";
            }
        }
    }

    if (discrepancy > kRouteTolerance)
        fail(ErrorCode::RouteDiscrepancy, "routes disagree by " + format_full(discrepancy));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// plan

int cmd_plan(const PlanOptions& o, std::ostream& out) {
    const long n_eff = o.n - o.extra_dof;
    if (o.n < 2 || o.extra_dof < 0 || n_eff < 2)
        fail(ErrorCode::DomainError, "plan needs N >= 2 and N - extra_dof >= 2");
    if (o.k_from < 0 || o.k_to < o.k_from) fail(ErrorCode::InvalidArgument, "bad k range");

    auto guarded = [](auto&& f) -> std::optional<double> {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DomainError) return std::nullopt;
            throw;
        }
    };

    const std::vector<std::string> header{"k", "nu", "expected_vif", "vif_variance", "vif_sd",
                                          "t_variance", "fisher_factor", "combined"};
    std::vector<std::vector<std::string>> rows;
    for (long k = o.k_from; k <= o.k_to; ++k) {
        const auto m = theory::vif_moments(n_eff, k);
        const long nu = n_eff - 2 - k;
        const auto tvar = guarded([&] { return theory::t_variance(n_eff, k); });
        const auto fisher = guarded([&] { return theory::fisher_precision_factor(nu); });
        std::optional<double> combined;
        if (o.rmse_ratio) combined = guarded([&] { return theory::three_factor_budget(n_eff, k, *o.rmse_ratio).combined; });
        std::optional<double> sd;
        if (m.vif_variance) sd = std::sqrt(*m.vif_variance);
        auto fmt = [&](const std::optional<double>& v) { return o.csv ? format_optional(v) : fixed_optional(v); };
        rows.push_back({std::to_string(k), std::to_string(nu), fmt(m.expected_vif), fmt(m.vif_variance), fmt(sd),
                        fmt(tvar), fmt(fisher), o.rmse_ratio ? fmt(combined) : std::string("undef")});
    }

    if (o.csv) {
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
            out << "\n";
        }
    } else {
        out << "N = " << o.n;
        if (o.extra_dof) out << "  extra dof c = " << o.extra_dof << " (nu0 = " << n_eff - 2 << ")";
        if (o.rmse_ratio) out << "  rmse ratio = " << *o.rmse_ratio;
        out << "\n";
        for (const auto& h : header) out << std::left << std::setw(15) << h;
        out << "\n";
        for (const auto& r : rows) {
            for (const auto& c : r) out << std::left << std::setw(15) << c;
            out << "\n";
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// breakeven

int cmd_breakeven(const BreakevenOptions& o, std::ostream& out) {
    if (o.nu_to < o.nu_from) fail(ErrorCode::InvalidArgument, "bad nu range");
    auto value = [&](theory::BreakEvenRule rule, long nu) -> std::string {
        try {
            const double v = theory::breakeven(rule, nu);
            return o.csv ? format_full(v) : fixed(v);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DomainError) throw;
            return "undef";
        }
    };
    using theory::BreakEvenRule;
    if (o.csv) {
        out << "nu,simple,rule_of_thumb,fisher\n";
    } else {
        out << std::left << std::setw(8) << "nu" << std::setw(12) << "simple" << std::setw(16) << "rule_of_thumb"
            << "fisher\n";
    }
    for (long nu = o.nu_from; nu <= o.nu_to; ++nu) {
        const std::string s = value(BreakEvenRule::Simple, nu);
        const std::string r = value(BreakEvenRule::RuleOfThumb, nu);
        const std::string f = value(BreakEvenRule::Fisher, nu);
        if (o.csv)
            out << nu << "," << s << "," << r << "," << f << "\n";
        else
            out << std::left << std::setw(8) << nu << std::setw(12) << s << std::setw(16) << r << f << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// score

int cmd_score(const ScoreOptions& o, std::ostream& out) {
    const auto r = theory::historical_score_ratios(o.n, o.k, o.rho_current, o.rho_historical);
    const double product = r.vif_ratio * r.rmse_ratio;
    out << "vif_ratio: " << format_full(r.vif_ratio) << "\n";
    out << "rmse_ratio: " << format_full(r.rmse_ratio) << "\n";
    out << "product: " << format_full(product) << "\n";
    out << "verdict: "
        << (product < 1.0 ? "historical score favoured (product < 1)"
                          : "fit the covariates anew (product >= 1)")
        << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

std::string cells_csv(const std::vector<sim::SimCell>& cells) {
    std::ostringstream out;
    out << "scheme,model,k,mean_lambda,var_lambda,mc_se,theory_mean,theory_var,redraws,m_effective,dropped\n";
    for (const auto& c : cells) {
        if (!c.supported) continue;
        out << sim::to_string(c.scheme) << ',' << c.model.label() << ',' << c.k << ','
            << format_optional(c.mean_lambda) << ',' << format_optional(c.var_lambda) << ','
            << format_optional(c.mc_se_mean) << ',' << format_optional(c.theory_mean) << ','
            << format_optional(c.theory_var) << ',' << c.redraw_count << ',' << c.m_effective << ','
            << c.dropped << '\n';
    }
    return out.str();
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
    if (o.out.empty()) fail(ErrorCode::InvalidArgument, "--out is required for simulate");
    const auto loaded = load(o.data);
    const Dataset& d = loaded.dataset;

    sim::SimConfig cfg;
    cfg.schemes = o.schemes;
    cfg.models = enumerate_models(d.covariate_names());
    cfg.replicates = o.replicates;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.max_redraws = o.max_redraws;
    cfg.fixed_margin_permutation = o.fixed_margins;
    const auto cells = sim::simulate_cells(d, cfg);

    json summary;
    summary["n"] = d.n();
    summary["n1"] = d.arm_counts().n1;
    summary["n2"] = d.arm_counts().n2;
    summary["replicates"] = o.replicates;
    summary["seed"] = o.seed;
    summary["fixed_margin_permutation"] = o.fixed_margins;
    summary["schemes"] = json::array();
    for (auto s : o.schemes) summary["schemes"].push_back(sim::to_string(s));
    summary["cells"] = json::array();
    summary["unsupported"] = json::array();
    bool quality_ok = true;
    std::size_t supported = 0;
    for (const auto& c : cells) {
        if (!c.supported) {
            summary["unsupported"].push_back({{"scheme", sim::to_string(c.scheme)}, {"model", c.model.label()}});
            continue;
        }
        ++supported;
        const bool ok = c.quality_ok(o.replicates);
        quality_ok = quality_ok && ok;
        std::optional<double> delta_mean, delta_var;
        if (c.mean_lambda && c.theory_mean) delta_mean = *c.mean_lambda - *c.theory_mean;
        if (c.var_lambda && c.theory_var) delta_var = *c.var_lambda - *c.theory_var;
        summary["cells"].push_back({{"scheme", sim::to_string(c.scheme)},
                                    {"model", c.model.label()},
                                    {"k", c.k},
                                    {"mean_lambda", json_optional(c.mean_lambda)},
                                    {"var_lambda", json_optional(c.var_lambda)},
                                    {"mc_se", json_optional(c.mc_se_mean)},
                                    {"theory_mean", json_optional(c.theory_mean)},
                                    {"theory_var", json_optional(c.theory_var)},
                                    {"delta_mean", json_optional(delta_mean)},
                                    {"delta_var", json_optional(delta_var)},
                                    {"redraws", c.redraw_count},
                                    {"dropped", c.dropped},
                                    {"m_effective", c.m_effective},
                                    {"quality_ok", ok}});
    }
    summary["too_many_redraws"] = !quality_ok;

    fs::create_directories(o.out);
    write_file(o.out / "cells.csv", cells_csv(cells));
    write_file(o.out / "summary.json", summary.dump(2) + "\n");

    out << "simulated " << supported << " cells (" << o.replicates << " replicates each) into "
        << o.out.string() << "\n";
    if (!quality_ok) {
        out << "error: at least one cell dropped more than 1% of its replicates\n";
        return kExitSimulationQuality;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Command-line front end

namespace {

void write_manifest(const fs::path& dir, const std::vector<std::string>& args, const json& config,
                    const std::optional<std::uint64_t>& seed, const std::optional<std::string>& dataset_digest) {
    json m;
    m["command_line"] = args;
    m["config"] = config;
    m["config_digest"] = sha256_hex(config.dump());
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["library_version"] = kVersion;
    m["dataset_digest"] = dataset_digest ? json(*dataset_digest) : json(nullptr);
    m["timestamp"] = utc_timestamp();
    fs::create_directories(dir);
    write_file(dir / "manifest.json", m.dump(2) + "\n");
}

json data_config(const DataOptions& d) {
    return {{"treatment", d.treatment},
            {"covariates", d.covariates},
            {"outcome", d.outcome ? json(*d.outcome) : json(nullptr)}};
}

void add_data_options(CLI::App* cmd, DataOptions& d, bool with_outcome) {
    cmd->add_option("--data", d.path, "CSV file with one row per subject")->required();
    cmd->add_option("--treatment", d.treatment, "Treatment column (exactly two distinct values)")->required();
    cmd->add_option("--covariates", d.covariates,
                    "Covariates as name:kind[:labels], comma separated; kind is continuous, "
                    "binary or categorical, labels are '|' separated (e.g. sex:binary:M|F)")
        ->required();
    if (with_outcome) cmd->add_option("--outcome", d.outcome, "Outcome column (enables the correlation report)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Covariate adjustment planner: variance inflation, planning tables, simulation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    fs::path out_dir;
    std::string format = "text";

    VifOptions vif;
    std::string model_list;
    auto* c_vif = app.add_subcommand("vif", "Observed variance inflation factor by every route");
    add_data_options(c_vif, vif.data, true);
    c_vif->add_option("--model", model_list, "Comma-separated covariates to fit (default: all)");
    c_vif->add_option("--route", vif.route, "all, regression, quadratic, rao or chisq")->capture_default_str();

    PlanOptions plan;
    std::optional<double> rmse;
    auto* c_plan = app.add_subcommand("plan", "Expected VIF, its variance and second-order precision by k");
    c_plan->add_option("--n", plan.n, "Total number of subjects N")->required();
    c_plan->add_option("--k-from", plan.k_from, "First number of covariates")->capture_default_str();
    c_plan->add_option("--k-to", plan.k_to, "Last number of covariates")->capture_default_str();
    c_plan->add_option("--extra-dof", plan.extra_dof, "Extra degrees of freedom consumed (e.g. centres)")
        ->capture_default_str();
    c_plan->add_option("--rmse-ratio", rmse, "Expected RMSE ratio sigma_k^2/sigma_0^2 in (0,1]");
    c_plan->add_option("--format", format, "text or csv")->capture_default_str();

    BreakevenOptions be;
    auto* c_be = app.add_subcommand("breakeven", "Break-even partial correlation for adding a covariate");
    c_be->add_option("--nu-from", be.nu_from, "First residual dof")->capture_default_str();
    c_be->add_option("--nu-to", be.nu_to, "Last residual dof")->capture_default_str();
    c_be->add_option("--format", format, "text or csv")->capture_default_str();

    ScoreOptions score;
    auto* c_score = app.add_subcommand("score", "Historical score versus fitting its k covariates anew");
    c_score->add_option("--n", score.n, "Total number of subjects N")->required();
    c_score->add_option("--k", score.k, "Covariates behind the score")->required();
    c_score->add_option("--rho-current", score.rho_current, "Correlation of the refitted predictor")->required();
    c_score->add_option("--rho-historical", score.rho_historical, "Correlation of the historical score")->required();

    SimulateOptions simo;
    std::string schemes = "permutation,mvn,bootstrap";
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo study of the VIF over all covariate subsets");
    add_data_options(c_sim, simo.data, false);
    c_sim->add_option("--schemes", schemes, "Comma list of permutation, mvn, bootstrap")->capture_default_str();
    c_sim->add_option("--reps", simo.replicates, "Replicates per cell")->capture_default_str();
    c_sim->add_option("--seed", simo.seed, "Root seed")->capture_default_str();
    c_sim->add_option("--threads", simo.threads, "Worker threads (0: all cores)")->capture_default_str();
    c_sim->add_option("--max-redraws", simo.max_redraws, "Redraws allowed per degenerate replicate")
        ->capture_default_str();
    c_sim->add_flag("--fixed-margins", simo.fixed_margins,
                    "Permutation scheme keeps the observed arm sizes instead of coin flips");

    std::uint64_t gen_seed = kDefaultSyntheticSeed;
    std::size_t gen_n = 46;
    auto* c_gen = app.add_subcommand("gen-data", "Write the synthetic N=46 stand-in trial as CSV");
    c_gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
    c_gen->add_option("--n", gen_n, "Number of subjects")->capture_default_str();

    for (auto* c : {c_vif, c_plan, c_be, c_score, c_gen})
        c->add_option("--out", out_dir, "Directory for the report and manifest.json (default: stdout)");
    c_sim->add_option("--out", simo.out, "Output directory for cells.csv, summary.json, manifest.json")
        ->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const std::vector<std::string> recorded(args.begin(), args.end());
    try {
        if (format != "text" && format != "csv") fail(ErrorCode::InvalidArgument, "--format must be text or csv");
        const bool csv = format == "csv";
        std::ostringstream report;
        json config;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> digest;
        std::string report_name;
        int code = kExitOk;

        if (*c_vif) {
            vif.model = model_list.empty() ? std::vector<std::string>{} : split(model_list, ',');
            config = {{"command", "vif"}, {"data", data_config(vif.data)}, {"model", vif.model}, {"route", vif.route}};
            digest = sha256_hex(read_file(vif.data.path));
            report_name = "vif.txt";
            try {
                code = cmd_vif(vif, report);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::RouteDiscrepancy) throw;
                report << "error: " << e.what() << "\n";
                code = kExitRouteDiscrepancy;
            }
        } else if (*c_plan) {
            plan.rmse_ratio = rmse;
            plan.csv = csv;
            config = {{"command", "plan"},     {"n", plan.n},
                      {"k_from", plan.k_from}, {"k_to", plan.k_to},
                      {"extra_dof", plan.extra_dof}, {"rmse_ratio", rmse ? json(*rmse) : json(nullptr)},
                      {"format", format}};
            report_name = csv ? "plan.csv" : "plan.txt";
            code = cmd_plan(plan, report);
        } else if (*c_be) {
            be.csv = csv;
            config = {{"command", "breakeven"}, {"nu_from", be.nu_from}, {"nu_to", be.nu_to}, {"format", format}};
            report_name = csv ? "breakeven.csv" : "breakeven.txt";
            code = cmd_breakeven(be, report);
        } else if (*c_score) {
            config = {{"command", "score"},
                      {"n", score.n},
                      {"k", score.k},
                      {"rho_current", score.rho_current},
                      {"rho_historical", score.rho_historical}};
            report_name = "score.txt";
            code = cmd_score(score, report);
        } else if (*c_sim) {
            simo.schemes.clear();
            for (const auto& s : split(schemes, ',')) {
                const auto parsed = sim::parse_scheme(s);
                if (!parsed) fail(ErrorCode::InvalidArgument, "unknown scheme '" + s + "'");
                if (std::find(simo.schemes.begin(), simo.schemes.end(), *parsed) == simo.schemes.end())
                    simo.schemes.push_back(*parsed);
            }
            json scheme_names = json::array();
            for (auto s : simo.schemes) scheme_names.push_back(sim::to_string(s));
            config = {{"command", "simulate"},  {"data", data_config(simo.data)},
                      {"schemes", scheme_names}, {"replicates", simo.replicates},
                      {"seed", simo.seed},       {"max_redraws", simo.max_redraws},
                      {"fixed_margins", simo.fixed_margins}};
            seed = simo.seed;
            digest = sha256_hex(read_file(simo.data.path));
            code = cmd_simulate(simo, out);
            write_manifest(simo.out, recorded, config, seed, digest);
            return code;
        } else if (*c_gen) {
            config = {{"command", "gen-data"}, {"seed", gen_seed}, {"n", gen_n}};
            seed = gen_seed;
            report_name = "data.csv";
            write_csv(report, synthetic_trial(gen_seed, gen_n), kSyntheticTreatmentColumn);
        }

        if (out_dir.empty()) {
            out << report.str();
        } else {
            fs::create_directories(out_dir);
            write_file(out_dir / report_name, report.str());
            write_manifest(out_dir, recorded, config, seed, digest);
            out << "wrote " << (out_dir / report_name).string() << "\n";
        }
        return code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace covadj::cli
