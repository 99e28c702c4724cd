#include <doctest.h>

#include <cmath>
#include <set>

#include "covadj/error.hpp"
#include "covadj/rng.hpp"
#include "covadj/sim.hpp"
#include "covadj/theory.hpp"

using namespace covadj;
using namespace covadj::sim;

TEST_CASE("Philox4x32-10 known answers") {
    using C = std::array<std::uint32_t, 4>;
    using K = std::array<std::uint32_t, 2>;
    CHECK(philox4x32_10(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct per path") {
    RngStream a(7, {0, 1, 2, 0}), b(7, {0, 1, 2, 0}), c(7, {0, 1, 3, 0}), e(8, {0, 1, 2, 0});
    std::vector<std::uint64_t> va, vb, vc, ve;
    for (int i = 0; i < 16; ++i) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        ve.push_back(e());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != ve);
}

TEST_CASE("uniform, normal and bounded draws") {
    RngStream s(3, {kAuxiliaryScheme, 0, 0, 0});
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, usum = 0.0;
    std::vector<int> hist(7, 0);
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sum2 += z * z;
        const double u = s.uniform();
        CHECK_UNARY(u >= 0.0);
        CHECK_UNARY(u < 1.0);
        usum += u;
        ++hist[s.below(7)];
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
    CHECK(std::abs(usum / n - 0.5) < 0.005);
    for (int h : hist) CHECK(std::abs(h - n / 7.0) < 5.0 * std::sqrt(n / 7.0));
}

TEST_CASE("permutation draws are fair coins") {
    std::size_t ones = 0, total = 0;
    for (std::uint32_t r = 0; r < 10000; ++r) {
        RngStream s(11, {0, 0, r, 0});
        const auto arms = draw_permutation(s, 46);
        for (auto a : arms) ones += a;
        total += arms.size();
    }
    const double rate = double(ones) / double(total);
    CHECK(rate >= 0.48);
    CHECK(rate <= 0.52);

    std::set<ArmAssignment> seen;
    for (std::uint32_t r = 0; r < 1000; ++r) {
        RngStream s(12, {0, 0, r, 0});
        seen.insert(draw_permutation(s, 2));
    }
    CHECK(seen.size() == 4);

    RngStream s1(5, {0, 2, 9, 0}), s2(5, {0, 2, 9, 0});
    CHECK(draw_permutation(s1, 46) == draw_permutation(s2, 46));

    RngStream s3(5, {0, 0, 0, 0});
    CHECK_THROWS_AS(draw_permutation(s3, 1), Error);
}

TEST_CASE("fixed-margin permutation keeps arm sizes") {
    const ArmAssignment arms{0, 0, 0, 1, 1, 1, 1};
    RngStream s(2, {0, 0, 0, 0});
    for (int i = 0; i < 100; ++i) {
        const auto p = draw_fixed_margin_permutation(s, arms);
        CHECK(count_arms(p).n1 == 3);
    }
}

TEST_CASE("multivariate normal draws") {
    MomentSummary m;
    m.names = {"x", "y", "s"};
    m.mean = {5.0, -2.0, 0.0};
    m.covariance = linalg::Matrix::from_rows({{4.0, 0, 0}, {0, 0.25, 0}, {0, 0, 1.0}});
    const std::vector<CovariateKind> kinds{CovariateKind::continuous(), CovariateKind::continuous(),
                                           CovariateKind::binary("a", "b")};
    const std::size_t n = 20000;
    RngStream s(4, {1, 0, 0, 0});
    const auto cols = draw_mvn_covariates(s, m, kinds, n);
    REQUIRE(cols.size() == 3);
    const double sd[] = {2.0, 0.5};
    for (int j = 0; j < 2; ++j) {
        double mean = 0.0;
        for (double v : cols[j]) mean += v;
        mean /= double(n);
        CHECK(std::abs(mean - m.mean[j]) <= 4.0 * sd[j] / std::sqrt(double(n)));
    }
    double ones = 0.0;
    for (double v : cols[2]) {
        CHECK_UNARY(v == 0.0 || v == 1.0);
        ones += v;
    }
    CHECK(std::abs(ones / double(n) - 0.5) <= 4.0 * 0.5 / std::sqrt(double(n)));
}

TEST_CASE("correlated draws reproduce the covariance") {
    MomentSummary m;
    m.mean = {0.0, 0.0};
    m.covariance = linalg::Matrix::from_rows({{1.0, 0.6}, {0.6, 2.0}});
    const std::size_t n = 40000;
    RngStream s(8, {1, 0, 0, 0});
    const auto cols = draw_mvn_covariates(s, m, {CovariateKind::continuous(), CovariateKind::continuous()}, n);
    double sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += cols[0][i] * cols[1][i];
        syy += cols[1][i] * cols[1][i];
    }
    CHECK(std::abs(sxy / n - 0.6) < 0.05);
    CHECK(std::abs(syy / n - 2.0) < 0.08);
}

TEST_CASE("zero covariance gives constant draws") {
    MomentSummary m;
    m.mean = {3.0, 0.2};
    m.covariance = linalg::Matrix::zeros(2, 2);
    RngStream s(9, {1, 0, 0, 0});
    const auto cols = draw_mvn_covariates(s, m, {CovariateKind::continuous(), CovariateKind::binary("a", "b")}, 50);
    for (double v : cols[0]) CHECK(v == 3.0);
    for (double v : cols[1]) CHECK(v == 1.0);
}

TEST_CASE("factor of a singular covariance after jitter") {
    const auto cov = linalg::Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    const auto l = mvn_factor(cov);
    const auto back = l * l.transpose();
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(back(i, j) - cov(i, j)) < 1e-9);
    CHECK_THROWS_AS(mvn_factor(linalg::Matrix::from_rows({{1.0, 2.0}, {2.0, 1.0}})), Error);
}

TEST_CASE("bootstrap rows are uniform") {
    const std::size_t n = 10;
    std::vector<std::size_t> hist(n, 0);
    const std::size_t draws = 5000;
    for (std::uint32_t r = 0; r < draws; ++r) {
        RngStream s(13, {2, 0, r, 0});
        for (auto i : draw_bootstrap(s, n)) ++hist[i];
    }
    const double expected = double(draws);  // draws × n picks spread over n rows
    for (auto h : hist) CHECK(std::abs(double(h) - expected) < 5.0 * std::sqrt(expected));
    RngStream a(1, {2, 3, 4, 0}), b(1, {2, 3, 4, 0});
    CHECK(draw_bootstrap(a, 46) == draw_bootstrap(b, 46));
    CHECK_THROWS_AS(draw_bootstrap(a, 1), Error);
}

TEST_CASE("pairwise sum") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
    CHECK(pairwise_sum(v.data(), v.size()) == 999.0 * 1000.0 / 2.0);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
}

namespace {

SimConfig small_config(const Dataset& d, long reps, unsigned threads) {
    SimConfig cfg;
    cfg.models = enumerate_models(d.covariate_names());
    cfg.replicates = reps;
    cfg.seed = 99;
    cfg.threads = threads;
    return cfg;
}

}  // namespace

TEST_CASE("empty model cells are exactly one") {
    const auto d = synthetic_trial(1);
    SimConfig cfg = small_config(d, 50, 1);
    cfg.models = {ModelSpec{}};
    for (const auto& c : simulate_cells(d, cfg)) {
        CHECK(*c.mean_lambda == 1.0);
        CHECK(*c.var_lambda == 0.0);
        CHECK(*c.mc_se_mean == 0.0);
        CHECK(c.m_effective == 50);
    }
}

TEST_CASE("simulation is independent of thread count") {
    const auto d = synthetic_trial(2);
    auto one = simulate_cells(d, small_config(d, 130, 1));
    auto four = simulate_cells(d, small_config(d, 130, 4));
    REQUIRE(one.size() == 96);
    REQUIRE(four.size() == 96);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].model == four[i].model);
        CHECK(one[i].mean_lambda == four[i].mean_lambda);
        CHECK(one[i].var_lambda == four[i].var_lambda);
        CHECK(one[i].redraw_count == four[i].redraw_count);
    }
}

TEST_CASE("aggregates are consistent") {
    const auto d = synthetic_trial(3);
    SimConfig cfg = small_config(d, 200, 0);
    cfg.models = {ModelSpec{{"age", "height"}}};
    const auto cells = simulate_cells(d, cfg);
    REQUIRE(cells.size() == 3);
    for (const auto& c : cells) {
        CHECK(c.k == 2);
        CHECK(c.m_effective + c.dropped == 200);
        CHECK(*c.mc_se_mean == doctest::Approx(std::sqrt(*c.var_lambda / double(c.m_effective))));
        CHECK(*c.theory_mean == doctest::Approx(*theory::vif_moments(46, 2).expected_vif));
        CHECK(*c.mean_lambda >= 1.0);
    }
}

TEST_CASE("single replicate has no variance") {
    const auto d = synthetic_trial(4);
    SimConfig cfg = small_config(d, 1, 1);
    cfg.models = {ModelSpec{{"age"}}};
    for (const auto& c : simulate_cells(d, cfg)) {
        CHECK(c.mean_lambda.has_value());
        CHECK_FALSE(c.var_lambda.has_value());
        CHECK_FALSE(c.mc_se_mean.has_value());
    }
}

TEST_CASE("categorical models are unsupported under the normal scheme") {
    const Dataset d({"A", "B"}, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1},
                    {{"site", CovariateKind::categorical({"a", "b", "c"}), {0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2}},
                     {"x", CovariateKind::continuous(), {1, 4, 2, 8, 5, 7, 3, 3, 9, 1, 2, 6}}});
    SimConfig cfg = small_config(d, 40, 1);
    const auto cells = simulate_cells(d, cfg);
    REQUIRE(cells.size() == 12);
    for (const auto& c : cells) {
        const bool has_site = std::find(c.model.covariate_names.begin(), c.model.covariate_names.end(), "site") !=
                              c.model.covariate_names.end();
        CHECK(c.supported == !(has_site && c.scheme == Scheme::MultivariateNormal));
        if (c.supported && has_site) CHECK(c.k >= 2);
    }
}

TEST_CASE("degenerate replicates are redrawn and, past the limit, dropped") {
    // N = 4 with a binary covariate: confounded or one-armed draws are common.
    const Dataset d({"A", "B"}, {0, 1, 0, 1}, {{"s", CovariateKind::binary("m", "f"), {0, 0, 1, 1}}});
    SimConfig cfg;
    cfg.models = {ModelSpec{{"s"}}};
    cfg.schemes = {Scheme::Permutation};
    cfg.replicates = 200;
    cfg.seed = 1;
    cfg.threads = 1;
    const auto cells = simulate_cells(d, cfg);
    CHECK(cells[0].redraw_count > 0);
    CHECK(cells[0].dropped == 0);

    cfg.max_redraws = 0;
    const auto strict = simulate_cells(d, cfg);
    CHECK(strict[0].dropped > 2);
    CHECK(strict[0].m_effective + strict[0].dropped == 200);
    CHECK_FALSE(strict[0].quality_ok(200));
    try {
        run_simulation(d, cfg);
        FAIL("expected TooManyRedraws");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TooManyRedraws);
    }
}

TEST_CASE("scheme names") {
    for (auto s : kAllSchemes) CHECK(parse_scheme(to_string(s)) == s);
    CHECK_FALSE(parse_scheme("gibbs").has_value());
}
