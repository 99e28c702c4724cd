#include "covadj/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "covadj/error.hpp"
#include "covadj/rng.hpp"

namespace covadj {

using linalg::Matrix;

ArmCounts count_arms(const ArmAssignment& arms) {
    ArmCounts c;
    for (auto a : arms) (a == 0 ? c.n1 : c.n2)++;
    return c;
}

// ---------------------------------------------------------------------------
// CovariateKind

CovariateKind::CovariateKind(Type type, std::vector<std::string> levels)
    : type_(type), levels_(std::move(levels)) {
    std::set<std::string> seen;
    for (const auto& l : levels_) {
        if (l.empty()) fail(ErrorCode::InvalidArgument, "level labels must be non-empty");
        if (!seen.insert(l).second) fail(ErrorCode::InvalidArgument, "duplicate level label '" + l + "'");
    }
}

CovariateKind CovariateKind::continuous() { return CovariateKind(Type::Continuous, {}); }

CovariateKind CovariateKind::binary(std::string first, std::string second) {
    return CovariateKind(Type::Binary, {std::move(first), std::move(second)});
}

CovariateKind CovariateKind::categorical(std::vector<std::string> levels) {
    if (levels.size() < 2) fail(ErrorCode::InvalidArgument, "categorical covariate needs >= 2 levels");
    return CovariateKind(Type::Categorical, std::move(levels));
}

std::size_t CovariateKind::design_width() const noexcept {
    return type_ == Type::Categorical ? levels_.size() - 1 : 1;
}

double Covariate::coded(std::size_t subject) const {
    switch (kind.type()) {
        case CovariateKind::Type::Continuous: return values[subject];
        case CovariateKind::Type::Binary: return values[subject] == 0.0 ? kBinaryLow : kBinaryHigh;
        case CovariateKind::Type::Categorical: break;
    }
    fail(ErrorCode::CategoricalUnsupported, "covariate '" + name + "' has more than two levels");
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::array<std::string, 2> arm_labels, ArmAssignment arms,
                 std::vector<Covariate> covariates, std::optional<std::string> outcome_name,
                 std::optional<std::vector<double>> outcome)
    : arm_labels_(std::move(arm_labels)),
      arms_(std::move(arms)),
      covariates_(std::move(covariates)),
      outcome_name_(std::move(outcome_name)),
      outcome_(std::move(outcome)) {
    if (arms_.empty()) fail(ErrorCode::EmptyDataset, "dataset has no subjects");
    if (arm_labels_[0] == arm_labels_[1]) fail(ErrorCode::NotTwoArms, "arm labels must differ");
    for (auto a : arms_)
        if (a > 1) fail(ErrorCode::InvalidArgument, "arm index must be 0 or 1");
    const auto counts = arm_counts();
    if (counts.n1 == 0 || counts.n2 == 0) fail(ErrorCode::NotTwoArms, "both arms must be non-empty");

    std::set<std::string> names;
    for (const auto& c : covariates_) {
        if (!names.insert(c.name).second)
            fail(ErrorCode::SchemaMismatch, "duplicate covariate '" + c.name + "'");
        if (c.values.size() != arms_.size())
            fail(ErrorCode::SchemaMismatch, "covariate '" + c.name + "' has wrong length");
        for (double v : c.values) {
            if (!std::isfinite(v)) fail(ErrorCode::SchemaMismatch, "non-finite value in '" + c.name + "'");
            if (c.kind.type() != CovariateKind::Type::Continuous &&
                (v < 0 || v >= static_cast<double>(c.kind.levels().size()) || v != std::floor(v)))
                fail(ErrorCode::SchemaMismatch, "bad level index in '" + c.name + "'");
        }
    }
    if (outcome_) {
        if (outcome_->size() != arms_.size()) fail(ErrorCode::SchemaMismatch, "outcome has wrong length");
        for (double v : *outcome_)
            if (!std::isfinite(v)) fail(ErrorCode::SchemaMismatch, "non-finite outcome value");
        if (!outcome_name_) outcome_name_ = "outcome";
    }
}

std::vector<std::string> Dataset::covariate_names() const {
    std::vector<std::string> out;
    out.reserve(covariates_.size());
    for (const auto& c : covariates_) out.push_back(c.name);
    return out;
}

const Covariate& Dataset::covariate(const std::string& name) const {
    for (const auto& c : covariates_)
        if (c.name == name) return c;
    fail(ErrorCode::SchemaMismatch, "unknown covariate '" + name + "'");
}

Dataset Dataset::with_arms(ArmAssignment arms) const {
    if (arms.size() != arms_.size()) fail(ErrorCode::InvalidArgument, "assignment length mismatch");
    Dataset copy = *this;
    copy.arms_ = std::move(arms);
    return copy;
}

Dataset Dataset::with_covariate_values(std::vector<std::vector<double>> values) const {
    if (values.size() != covariates_.size())
        fail(ErrorCode::InvalidArgument, "covariate column count mismatch");
    Dataset copy = *this;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (values[j].size() != arms_.size()) fail(ErrorCode::InvalidArgument, "column length mismatch");
        copy.covariates_[j].values = std::move(values[j]);
    }
    return copy;
}

Dataset Dataset::with_resampled_rows(const std::vector<std::size_t>& rows) const {
    if (rows.size() != arms_.size()) fail(ErrorCode::InvalidArgument, "row index count mismatch");
    Dataset copy = *this;
    for (std::size_t j = 0; j < covariates_.size(); ++j) {
        auto& dst = copy.covariates_[j].values;
        const auto& src = covariates_[j].values;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] >= src.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
            dst[i] = src[rows[i]];
        }
    }
    return copy;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// One CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += ch;
        }
    }
    if (quoted) fail(ErrorCode::SchemaMismatch, "unterminated quoted field");
    fields.push_back(was_quoted ? cur : trim(cur));
    return fields;
}

bool is_missing(const std::string& field) { return field.empty() || field == "NA"; }

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string LoadReport::to_text() const {
    std::ostringstream out;
    out << "rows_read: " << rows_read << "\n";
    out << "rows_kept: " << rows_kept << "\n";
    out << "rows_dropped: " << dropped.size() << "\n";
    for (const auto& d : dropped) out << "dropped: line " << d.line << ": " << d.reason << "\n";
    return out.str();
}

LoadResult load_csv(std::istream& in, const Schema& schema, const std::string& treatment_column,
                    const std::optional<std::string>& outcome_column) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::EmptyDataset, "input has no header row");
    const auto header = split_record(line);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (!index.emplace(header[i], i).second)
            fail(ErrorCode::SchemaMismatch, "duplicate header column '" + header[i] + "'");

    auto locate = [&](const std::string& name) {
        const auto it = index.find(name);
        if (it == index.end()) fail(ErrorCode::SchemaMismatch, "column '" + name + "' not in header");
        return it->second;
    };
    std::set<std::string> used{treatment_column};
    if (outcome_column && !used.insert(*outcome_column).second)
        fail(ErrorCode::SchemaMismatch, "outcome column equals treatment column");
    for (const auto& e : schema)
        if (!used.insert(e.name).second)
            fail(ErrorCode::SchemaMismatch, "column '" + e.name + "' used twice");

    const std::size_t treat_idx = locate(treatment_column);
    const std::optional<std::size_t> outcome_idx =
        outcome_column ? std::optional<std::size_t>(locate(*outcome_column)) : std::nullopt;
    std::vector<std::size_t> cov_idx;
    for (const auto& e : schema) cov_idx.push_back(locate(e.name));

    LoadReport report;
    std::vector<std::string> treatment;
    std::vector<std::vector<double>> columns(schema.size());
    std::vector<double> outcome;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++report.rows_read;
        const auto fields = split_record(line);
        if (fields.size() != header.size())
            fail(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + " has " +
                                                std::to_string(fields.size()) + " fields, header has " +
                                                std::to_string(header.size()));

        std::string missing;
        auto note_missing = [&](std::size_t idx) {
            if (is_missing(fields[idx])) missing += (missing.empty() ? "" : ",") + header[idx];
        };
        note_missing(treat_idx);
        if (outcome_idx) note_missing(*outcome_idx);
        for (auto idx : cov_idx) note_missing(idx);
        if (!missing.empty()) {
            report.dropped.push_back({line_no, "missing " + missing});
            continue;
        }

        auto bad = [&](std::size_t idx) -> void {
            fail(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": cannot parse '" +
                                                fields[idx] + "' in column '" + header[idx] + "'");
        };
        std::vector<double> row(schema.size());
        for (std::size_t j = 0; j < schema.size(); ++j) {
            const auto& field = fields[cov_idx[j]];
            const auto& kind = schema[j].kind;
            if (kind.type() == CovariateKind::Type::Continuous) {
                const auto v = parse_number(field);
                if (!v) bad(cov_idx[j]);
                row[j] = *v;
            } else {
                const auto& levels = kind.levels();
                const auto it = std::find(levels.begin(), levels.end(), field);
                if (it == levels.end()) bad(cov_idx[j]);
                row[j] = static_cast<double>(it - levels.begin());
            }
        }
        if (outcome_idx) {
            const auto v = parse_number(fields[*outcome_idx]);
            if (!v) bad(*outcome_idx);
            outcome.push_back(*v);
        }
        for (std::size_t j = 0; j < schema.size(); ++j) columns[j].push_back(row[j]);
        treatment.push_back(fields[treat_idx]);
    }
    report.rows_kept = treatment.size();
    if (treatment.empty()) fail(ErrorCode::EmptyDataset, "no complete rows");

    std::vector<std::string> labels;
    for (const auto& t : treatment)
        if (std::find(labels.begin(), labels.end(), t) == labels.end()) labels.push_back(t);
    if (labels.size() != 2)
        fail(ErrorCode::NotTwoArms, "treatment column has " + std::to_string(labels.size()) +
                                        " distinct values, expected 2");
    ArmAssignment arms(treatment.size());
    for (std::size_t i = 0; i < treatment.size(); ++i) arms[i] = treatment[i] == labels[0] ? 0 : 1;

    std::vector<Covariate> covariates;
    for (std::size_t j = 0; j < schema.size(); ++j)
        covariates.push_back({schema[j].name, schema[j].kind, std::move(columns[j])});

    Dataset d({labels[0], labels[1]}, std::move(arms), std::move(covariates), outcome_column,
              outcome_column ? std::optional<std::vector<double>>(std::move(outcome)) : std::nullopt);
    return {std::move(d), std::move(report)};
}

void write_csv(std::ostream& out, const Dataset& d, const std::string& treatment_column) {
    out << csv_field(treatment_column);
    for (const auto& c : d.covariates()) out << ',' << csv_field(c.name);
    if (d.outcome()) out << ',' << csv_field(*d.outcome_name());
    out << '\n';
    for (std::size_t i = 0; i < d.n(); ++i) {
        out << csv_field(d.arm_labels()[d.arms()[i]]);
        for (const auto& c : d.covariates()) {
            out << ',';
            if (c.kind.type() == CovariateKind::Type::Continuous)
                out << full_precision(c.values[i]);
            else
                out << csv_field(c.kind.levels()[static_cast<std::size_t>(c.values[i])]);
        }
        if (d.outcome()) out << ',' << full_precision((*d.outcome())[i]);
        out << '\n';
    }
}

Schema schema_of(const Dataset& d) {
    Schema s;
    for (const auto& c : d.covariates()) s.push_back({c.name, c.kind});
    return s;
}

// ---------------------------------------------------------------------------
// Models and designs

std::string ModelSpec::label() const {
    if (covariate_names.empty()) return "none";
    std::string out;
    for (const auto& n : covariate_names) out += (out.empty() ? "" : "+") + n;
    return out;
}

void validate_model(const Dataset& d, const ModelSpec& m) {
    std::set<std::string> seen;
    for (const auto& n : m.covariate_names) {
        if (!seen.insert(n).second) fail(ErrorCode::InvalidArgument, "model lists '" + n + "' twice");
        (void)d.covariate(n);
    }
}

namespace {

bool is_constant(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

void center(std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

}  // namespace

DesignMatrix build_design(const Dataset& d, const ModelSpec& m) {
    validate_model(d, m);
    const std::size_t n = d.n();
    std::vector<std::vector<double>> cols;
    DesignMatrix out;
    for (const auto& name : m.covariate_names) {
        const Covariate& c = d.covariate(name);
        if (is_constant(c.values))
            fail(ErrorCode::ConstantColumn, "covariate '" + name + "' takes a single value");
        switch (c.kind.type()) {
            case CovariateKind::Type::Continuous:
            case CovariateKind::Type::Binary: {
                std::vector<double> col(n);
                for (std::size_t i = 0; i < n; ++i) col[i] = c.coded(i);
                cols.push_back(std::move(col));
                out.column_names.push_back(name);
                break;
            }
            case CovariateKind::Type::Categorical: {
                const auto& levels = c.kind.levels();
                for (std::size_t l = 1; l < levels.size(); ++l) {
                    std::vector<double> col(n);
                    for (std::size_t i = 0; i < n; ++i) col[i] = c.values[i] == static_cast<double>(l) ? 1.0 : 0.0;
                    cols.push_back(std::move(col));
                    out.column_names.push_back(name + "[" + levels[l] + "]");
                }
                break;
            }
        }
    }
    for (auto& col : cols) center(col);
    out.matrix = Matrix::from_columns(n, cols);
    out.k = cols.size();
    out.rank = linalg::numeric_rank(out.matrix);
    return out;
}

std::vector<ModelSpec> enumerate_models(const std::vector<std::string>& names) {
    const std::size_t k = names.size();
    if (k > kMaxEnumeratedCovariates)
        fail(ErrorCode::TooManyCovariates,
             std::to_string(k) + " covariates exceed the limit of " + std::to_string(kMaxEnumeratedCovariates));
    std::vector<ModelSpec> models;
    models.reserve(std::size_t{1} << k);
    for (std::size_t size = 0; size <= k; ++size) {
        std::vector<std::size_t> idx(size);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            ModelSpec m;
            for (auto i : idx) m.covariate_names.push_back(names[i]);
            models.push_back(std::move(m));
            // Advance to the next combination in lexicographic order.
            std::size_t pos = size;
            while (pos > 0 && idx[pos - 1] == k - size + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t j = pos; j < size; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return models;
}

MomentSummary sample_moments(const Dataset& d, const ModelSpec& m) {
    validate_model(d, m);
    const std::size_t n = d.n();
    if (n < 2) fail(ErrorCode::InvalidArgument, "sample moments need N >= 2");
    MomentSummary s;
    std::vector<std::vector<double>> cols;
    for (const auto& name : m.covariate_names) {
        const Covariate& c = d.covariate(name);
        if (!c.kind.is_numeric_codable())
            fail(ErrorCode::CategoricalUnsupported, "covariate '" + name + "' is categorical");
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = c.coded(i);
        if (is_constant(col)) s.constant_columns.push_back(name);
        s.names.push_back(name);
        s.mean.push_back(std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n));
        cols.push_back(std::move(col));
    }
    const std::size_t k = cols.size();
    std::vector<double> cov(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += (cols[a][i] - s.mean[a]) * (cols[b][i] - s.mean[b]);
            cov[a * k + b] = cov[b * k + a] = sum / static_cast<double>(n - 1);
        }
    s.covariance = Matrix(k, k, std::move(cov));
    return s;
}

// ---------------------------------------------------------------------------
// Correlations

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) fail(ErrorCode::InvalidArgument, "pearson needs equal lengths >= 2");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) fail(ErrorCode::DegenerateResponse, "correlation with a constant");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<double> residualize(const std::vector<double>& target, const std::vector<std::vector<double>>& others) {
    const Matrix x = Matrix::from_columns(target.size(), others);
    const auto fit = linalg::least_squares(x, target, true);
    if (fit.residual_ss <= 1e-20 * fit.total_ss)
        fail(ErrorCode::DegenerateResponse, "residual variance is zero after adjustment");
    std::vector<double> r(target.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = target[i] - fit.fitted[i];
    return r;
}

}  // namespace

std::vector<CorrelationRow> correlation_report(const Dataset& d) {
    if (!d.outcome()) fail(ErrorCode::InvalidArgument, "correlation report needs an outcome column");
    const std::size_t n = d.n();
    std::vector<std::vector<double>> coded;
    for (const auto& c : d.covariates()) {
        if (!c.kind.is_numeric_codable())
            fail(ErrorCode::CategoricalUnsupported, "covariate '" + c.name + "' is categorical");
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = c.coded(i);
        coded.push_back(std::move(col));
    }
    const std::vector<double>& y = *d.outcome();
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = d.arms()[i];

    std::vector<CorrelationRow> rows;
    for (std::size_t j = 0; j < coded.size(); ++j) {
        CorrelationRow r;
        r.covariate = d.covariates()[j].name;
        r.outcome_ordinary = pearson(coded[j], y);
        r.treatment_ordinary = pearson(coded[j], z);
        std::vector<std::vector<double>> others;
        for (std::size_t o = 0; o < coded.size(); ++o)
            if (o != j) others.push_back(coded[o]);
        const auto xr = residualize(coded[j], others);
        r.outcome_partial = pearson(xr, residualize(y, others));
        r.treatment_partial = pearson(xr, residualize(z, others));
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Synthetic stand-in dataset

namespace {

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

}  // namespace

Schema synthetic_trial_schema() {
    return {{"sex", CovariateKind::binary("M", "F")},
            {"age", CovariateKind::continuous()},
            {"baseline", CovariateKind::continuous()},
            {"height", CovariateKind::continuous()},
            {"weight", CovariateKind::continuous()}};
}

Dataset synthetic_trial(std::uint64_t seed, std::size_t n) {
    if (n < 4) fail(ErrorCode::InvalidArgument, "synthetic trial needs at least 4 subjects");
    RngStream rng(seed, {kAuxiliaryScheme, 0, 0, 0});

    ArmAssignment arms(n, 0);
    for (std::size_t i = n / 2; i < n; ++i) arms[i] = 1;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(arms[i], arms[rng.below(i + 1)]);

    std::vector<double> sex(n), age(n), baseline(n), height(n), weight(n), outcome(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double female = rng.coin() ? 1.0 : 0.0;
        sex[i] = female;
        age[i] = std::round(std::clamp(38.0 + 12.0 * rng.normal(), 18.0, 75.0));
        height[i] = std::round(176.0 - 13.0 * female + 7.0 * rng.normal());
        weight[i] = round_to(72.0 + 0.85 * (height[i] - 170.0) - 6.0 * female + 9.0 * rng.normal(), 1);
        const double fev = std::max(0.6, 2.1 + 0.035 * (height[i] - 170.0) - 0.012 * (age[i] - 38.0) -
                                              0.15 * female + 0.35 * rng.normal());
        baseline[i] = round_to(std::log(fev), 4);
        outcome[i] = round_to(baseline[i] + 0.05 + 0.12 * arms[i] + 0.12 * rng.normal(), 4);
    }
    // Keep both sexes present for very small n.
    if (is_constant(sex)) sex[0] = 1.0 - sex[0];

    const auto schema = synthetic_trial_schema();
    std::vector<std::vector<double>> values{sex, age, baseline, height, weight};
    std::vector<Covariate> covariates;
    for (std::size_t j = 0; j < schema.size(); ++j)
        covariates.push_back({schema[j].name, schema[j].kind, std::move(values[j])});
    return Dataset({"placebo", "ISF24"}, std::move(arms), std::move(covariates),
                   std::string(kSyntheticOutcomeColumn), std::move(outcome));
}

}  // namespace covadj
