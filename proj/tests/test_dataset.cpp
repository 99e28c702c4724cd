#include <doctest.h>

#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "covadj/dataset.hpp"
#include "covadj/error.hpp"
#include "support.hpp"

using namespace covadj;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

const Schema kSexAge{{"sex", CovariateKind::binary("M", "F")}, {"age", CovariateKind::continuous()}};

LoadResult load_text(const std::string& text, const Schema& schema = kSexAge,
                     const std::optional<std::string>& outcome = {}) {
    std::istringstream in(text);
    return load_csv(in, schema, "trt", outcome);
}

Dataset categorical_fixture(std::vector<double> levels, ArmAssignment arms, std::vector<std::string> labels) {
    return Dataset({"A", "B"}, std::move(arms), {{"site", CovariateKind::categorical(std::move(labels)), std::move(levels)}});
}

}  // namespace

TEST_CASE("load a four-row fixture") {
    const auto r = load_text("trt,sex,age\nA,M,30\nB,F,41\nA,F,35\nB,M,50\n");
    CHECK(r.dataset.n() == 4);
    CHECK(r.dataset.arm_counts().n1 == 2);
    CHECK(r.dataset.arm_counts().n2 == 2);
    CHECK(r.dataset.arm_labels()[0] == "A");
    CHECK(r.dataset.covariate("age").values[3] == 50.0);
    CHECK(r.dataset.covariate("sex").coded(0) == kBinaryLow);
    CHECK(r.dataset.covariate("sex").coded(1) == kBinaryHigh);
    CHECK(r.report.dropped.empty());
}

TEST_CASE("three treatment labels are rejected") {
    CHECK(code_of([] { load_text("trt,sex,age\nA,M,30\nB,F,41\nC,F,35\n"); }) == ErrorCode::NotTwoArms);
    CHECK(code_of([] { load_text("trt,sex,age\nA,M,30\nA,F,41\n"); }) == ErrorCode::NotTwoArms);
}

TEST_CASE("rows with a missing value are dropped and reported") {
    const auto r = load_text("trt,sex,age\nA,M,30\nB,F,\nA,F,35\nB,M,50\nA,M,NA\nB,F,44\n");
    CHECK(r.dataset.n() == 4);
    CHECK(r.report.rows_read == 6);
    CHECK(r.report.rows_kept == 4);
    REQUIRE(r.report.dropped.size() == 2);
    CHECK(r.report.dropped[0].line == 3);
    CHECK(r.report.dropped[1].line == 6);
    CHECK(r.report.to_text().find("rows_dropped: 2") != std::string::npos);
}

TEST_CASE("schema mismatches") {
    CHECK(code_of([] { load_text("trt,sex\nA,M\nB,F\n"); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([] { load_text("trt,sex,age\nA,X,30\nB,F,41\n"); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([] { load_text("trt,sex,age\nA,M,old\nB,F,41\n"); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([] { load_text("trt,sex,age\n"); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("quoted fields and extra columns") {
    const auto r = load_text("id,trt,sex,age,y\n1,\"arm, one\",M,30,1\n2,B,F,41,2\n", kSexAge, "y");
    CHECK(r.dataset.arm_labels()[0] == "arm, one");
    REQUIRE(r.dataset.outcome());
    CHECK((*r.dataset.outcome())[1] == 2.0);
}

TEST_CASE("csv round trip") {
    const auto d = synthetic_trial(9);
    std::ostringstream out;
    write_csv(out, d, "treatment");
    std::istringstream in(out.str());
    const auto back = load_csv(in, synthetic_trial_schema(), "treatment", "outcome").dataset;
    // arm indices follow first appearance in the file, so compare labels
    for (std::size_t i = 0; i < d.n(); ++i)
        CHECK(back.arm_labels()[back.arms()[i]] == d.arm_labels()[d.arms()[i]]);
    for (std::size_t j = 0; j < d.covariates().size(); ++j)
        CHECK(back.covariates()[j].values == d.covariates()[j].values);
    CHECK(*back.outcome() == *d.outcome());
}

TEST_CASE("design matrix construction") {
    const auto d = load_text("trt,sex,age\nA,M,30\nB,F,41\nA,M,35\nB,M,50\n").dataset;

    const auto empty = build_design(d, {});
    CHECK(empty.k == 0);
    CHECK(empty.matrix.cols() == 0);
    CHECK(empty.matrix.rows() == 4);

    const auto sex = build_design(d, {{"sex"}});
    CHECK(sex.k == 1);
    const auto col = sex.matrix.column(0);
    CHECK(std::accumulate(col.begin(), col.end(), 0.0) == doctest::Approx(0.0));
    // three M at -1/2 and one F at +1/2: mean is -1/4
    CHECK(col[0] == doctest::Approx(-0.25));
    CHECK(col[1] == doctest::Approx(0.75));

    const auto both = build_design(d, {{"age", "sex"}});
    CHECK(both.column_names == std::vector<std::string>{"age", "sex"});
    CHECK(both.rank == 2);

    const auto same = load_text("trt,sex,age\nA,M,30\nB,M,41\n").dataset;
    CHECK(code_of([&] { build_design(same, {{"sex"}}); }) == ErrorCode::ConstantColumn);
    CHECK(code_of([&] { build_design(d, {{"height"}}); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { build_design(d, {{"age", "age"}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("categorical dummies against a hand-built coding") {
    const auto d = categorical_fixture({0, 1, 2, 0, 1, 2}, {0, 0, 0, 1, 1, 1}, {"a", "b", "c"});
    const auto design = build_design(d, {{"site"}});
    REQUIRE(design.k == 2);
    CHECK(design.column_names == std::vector<std::string>{"site[b]", "site[c]"});
    const std::vector<std::vector<double>> hand{{0, 1, 0, 0, 1, 0}, {0, 0, 1, 0, 0, 1}};
    for (std::size_t j = 0; j < 2; ++j) {
        const auto col = design.matrix.column(j);
        double sum = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(col[i] == doctest::Approx(hand[j][i] - 1.0 / 3.0));
            sum += col[i];
        }
        CHECK(std::abs(sum) <= 1e-12);
    }
}

TEST_CASE("reference level does not change the column span") {
    std::mt19937_64 g(21);
    std::uniform_int_distribution<int> level(0, 3);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 24;
        std::vector<double> values(n);
        ArmAssignment arms(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = level(g);
            arms[i] = static_cast<std::uint8_t>(i % 2);
        }
        for (int l = 0; l < 4; ++l) values[l] = l;  // every level present
        // Same data with the label order rotated, so a different level is the reference.
        std::vector<double> rotated(n);
        for (std::size_t i = 0; i < n; ++i) rotated[i] = std::fmod(values[i] + 1.0, 4.0);
        const auto d1 = categorical_fixture(values, arms, {"p", "q", "r", "s"});
        const auto d2 = categorical_fixture(rotated, arms, {"s", "p", "q", "r"});
        const auto y = testing::normals(g, n);
        const auto f1 = linalg::least_squares(build_design(d1, {{"site"}}).matrix, y, true);
        const auto f2 = linalg::least_squares(build_design(d2, {{"site"}}).matrix, y, true);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(f1.fitted[i] - f2.fitted[i]) <= 1e-10);
    }
}

TEST_CASE("model enumeration") {
    const std::vector<std::string> names{"a", "b", "c", "d", "e"};
    const auto models = enumerate_models(names);
    CHECK(models.size() == 32);
    std::map<std::size_t, int> hist;
    std::set<std::string> labels;
    for (const auto& m : models) {
        ++hist[m.covariate_names.size()];
        labels.insert(m.label());
    }
    CHECK(labels.size() == 32);
    CHECK(hist == std::map<std::size_t, int>{{0, 1}, {1, 5}, {2, 10}, {3, 10}, {4, 5}, {5, 1}});
    CHECK(models.front().label() == "none");
    CHECK(models[1].label() == "a");
    CHECK(models[6].label() == "a+b");
    CHECK(models[15].label() == "d+e");
    CHECK(models.back().label() == "a+b+c+d+e");

    CHECK(enumerate_models({}).size() == 1);
    CHECK(code_of([] { enumerate_models(std::vector<std::string>(21, "x")); }) == ErrorCode::TooManyCovariates);
}

TEST_CASE("sample moments") {
    const auto d = load_text("trt,sex,age\nA,M,30\nB,F,30\nA,F,30\nB,M,30\n").dataset;
    const auto m = sample_moments(d, {{"sex", "age"}});
    CHECK(m.mean[0] == doctest::Approx(0.0));
    CHECK(m.covariance(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(m.covariance(1, 1) == 0.0);
    CHECK(m.constant_columns == std::vector<std::string>{"age"});

    const Dataset twin({"A", "B"}, {0, 1, 0, 1, 1},
                       {{"x", CovariateKind::continuous(), {1, 4, 2, 8, 5}},
                        {"y", CovariateKind::continuous(), {1, 4, 2, 8, 5}}});
    const auto t = sample_moments(twin, {{"x", "y"}});
    CHECK(t.covariance(0, 1) == doctest::Approx(t.covariance(0, 0)));
    CHECK(t.covariance(0, 0) == doctest::Approx(7.5));

    const auto c = categorical_fixture({0, 1, 2, 0}, {0, 1, 0, 1}, {"a", "b", "c"});
    CHECK(code_of([&] { sample_moments(c, {{"site"}}); }) == ErrorCode::CategoricalUnsupported);
}

TEST_CASE("correlation report matches a residualization oracle") {
    std::mt19937_64 g(31);
    const std::size_t n = 30;
    const auto x1 = testing::normals(g, n);
    auto x2 = testing::normals(g, n);
    auto y = testing::normals(g, n);
    for (std::size_t i = 0; i < n; ++i) {
        x2[i] += 0.5 * x1[i];
        y[i] += x1[i] - 0.7 * x2[i];
    }
    ArmAssignment arms(n);
    for (std::size_t i = 0; i < n; ++i) arms[i] = static_cast<std::uint8_t>((i * 7) % 3 == 0);
    const Dataset d({"A", "B"}, arms,
                    {{"x1", CovariateKind::continuous(), x1}, {"x2", CovariateKind::continuous(), x2}}, "y", y);
    const auto rows = correlation_report(d);
    REQUIRE(rows.size() == 2);

    // Residuals from the simple regression on one other variable, by hand.
    auto resid = [&](const std::vector<double>& t, const std::vector<double>& on) {
        const double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
        const double mo = std::accumulate(on.begin(), on.end(), 0.0) / n;
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sxy += (on[i] - mo) * (t[i] - mt);
            sxx += (on[i] - mo) * (on[i] - mo);
        }
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = t[i] - mt - sxy / sxx * (on[i] - mo);
        return r;
    };
    auto corr = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
        const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        return sab / std::sqrt(saa * sbb);
    };
    const auto z = testing::arms_as_double(arms);
    CHECK(std::abs(rows[0].outcome_ordinary - corr(x1, y)) <= 1e-12);
    CHECK(std::abs(rows[0].treatment_ordinary - corr(x1, z)) <= 1e-12);
    CHECK(std::abs(rows[0].outcome_partial - corr(resid(x1, x2), resid(y, x2))) <= 1e-10);
    CHECK(std::abs(rows[0].treatment_partial - corr(resid(x1, x2), resid(z, x2))) <= 1e-10);
    CHECK(std::abs(rows[1].outcome_partial - corr(resid(x2, x1), resid(y, x1))) <= 1e-10);

    const Dataset self({"A", "B"}, {0, 1, 0, 1}, {{"x", CovariateKind::continuous(), {1, 3, 2, 7}}}, "y",
                       std::vector<double>{1, 3, 2, 7});
    CHECK(correlation_report(self)[0].outcome_ordinary == doctest::Approx(1.0));
}

TEST_CASE("synthetic trial shape") {
    const auto d = synthetic_trial(20240817);
    CHECK(d.n() == 46);
    CHECK(d.arm_counts().n1 == 23);
    CHECK(d.covariate_names() == std::vector<std::string>{"sex", "age", "baseline", "height", "weight"});
    CHECK(d.covariate("sex").kind.type() == CovariateKind::Type::Binary);
    REQUIRE(d.outcome());
    CHECK(synthetic_trial(20240817).covariate("age").values == d.covariate("age").values);
    CHECK(synthetic_trial(1).covariate("age").values != d.covariate("age").values);
}
