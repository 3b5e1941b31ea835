#include <doctest.h>

#include <cmath>
#include <vector>

#include "mixlab/errors.hpp"
#include "mixlab/models.hpp"
#include "mixlab/oracle.hpp"
#include "mixlab/rng.hpp"

using namespace mixlab;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

MDepArrayModel ma1(std::int64_t n, InnovationLaw law = InnovationLaw::Gaussian) {
    return MDepArrayModel(n, 1, {{kInvSqrt2, kInvSqrt2}}, law);
}

// exhaustive path enumeration oracle for Markov moments: E[f_i f_j]
double enumerate_pair_cov(const MarkovArrayModel& m, std::int64_t i,
                          std::int64_t j) {
    const int s = m.states();
    const std::int64_t n = m.length();
    double total = 0.0;
    std::vector<int> path(static_cast<std::size_t>(n), 0);
    for (;;) {
        double p = m.marginal(1)[static_cast<std::size_t>(path[0])];
        // marginal(1) is the initial law
        for (std::int64_t k = 1; k < n && p > 0.0; ++k)
            p *= m.step_matrix(k)[static_cast<std::size_t>(path[static_cast<std::size_t>(k - 1)]) * s +
                                  path[static_cast<std::size_t>(k)]];
        total += p * m.observable(i, path[static_cast<std::size_t>(i - 1)]) *
                 m.observable(j, path[static_cast<std::size_t>(j - 1)]);
        // odometer
        std::int64_t pos = 0;
        while (pos < n && ++path[static_cast<std::size_t>(pos)] == s) {
            path[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == n) break;
    }
    return total;
}

}  // namespace

TEST_CASE("m-dependent pair covariances") {
    const auto m = ma1(50);
    CHECK(m.pair_cov(5, 7) == 0.0);             // beyond the range
    CHECK(m.pair_cov(5, 6) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(m.var_at(5) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(m.pair_cov(0, 3), std::out_of_range);
}

TEST_CASE("partial-sum norms") {
    const auto iid = MDepArrayModel::iid(100, InnovationLaw::Gaussian);
    CovarianceOracle o(iid);
    CHECK(o.range_norm(1, 9) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(o.range_norm(11, 19) == doctest::Approx(3.0).epsilon(1e-14));

    const auto m = ma1(100);
    CovarianceOracle om(m);
    for (std::int64_t len : {1, 2, 10, 37})
        CHECK(om.range_var(5, 5 + len - 1) ==
              doctest::Approx(2.0 * len - 1.0).epsilon(1e-12));
}

TEST_CASE("two-state chain covariances vs exhaustive enumeration") {
    const auto chain = MarkovArrayModel::two_state(3, 0.3);
    CHECK(chain.pair_cov(1, 2) == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(chain.pair_cov(1, 3) == doctest::Approx(0.16).epsilon(1e-13));
    CovarianceOracle o(chain);
    // 3 + 4*0.4 + 2*0.16 = 4.92
    CHECK(o.range_var(1, 3) == doctest::Approx(4.92).epsilon(1e-13));
    CHECK(o.range_norm(1, 3) ==
          doctest::Approx(2.2181073012818836).epsilon(1e-12));

    // every pair against the 2^3-path enumeration
    for (std::int64_t i = 1; i <= 3; ++i)
        for (std::int64_t j = i; j <= 3; ++j)
            CHECK(chain.pair_cov(i, j) ==
                  doctest::Approx(enumerate_pair_cov(chain, i, j))
                      .epsilon(1e-13));
}

TEST_CASE("three-state nonhomogeneous chain vs enumeration") {
    const std::vector<double> p1{0.5, 0.3, 0.2, 0.1, 0.6, 0.3, 0.25, 0.25, 0.5};
    const std::vector<double> p2{0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.3, 0.3, 0.4};
    MarkovArrayModel m(7, {0.2, 0.5, 0.3}, {p1, p2},
                       {{1.0, -0.5, 0.25}, {2.0, 0.0, -1.0}});
    for (std::int64_t i = 1; i <= 7; ++i) {
        for (std::int64_t j = i; j <= 7; ++j)
            CHECK(m.pair_cov(i, j) ==
                  doctest::Approx(enumerate_pair_cov(m, i, j))
                      .epsilon(1e-12).scale(1.0));
    }
    // interval covariance sweep against the pairwise double loop
    const std::vector<Interval> ivs{{1, 2}, {3, 3}, {5, 7}};
    const auto cov = m.interval_cov_matrix(ivs);
    for (std::size_t a = 0; a < ivs.size(); ++a)
        for (std::size_t b = 0; b < ivs.size(); ++b) {
            double direct = 0.0;
            for (std::int64_t i = ivs[a].lo; i <= ivs[a].hi; ++i)
                for (std::int64_t j = ivs[b].lo; j <= ivs[b].hi; ++j)
                    direct += m.pair_cov(std::min(i, j), std::max(i, j));
            CHECK(cov[a][b] == doctest::Approx(direct).epsilon(1e-12));
        }
}

TEST_CASE("centering and normalization") {
    // biased two-state chain with a large raw observable: centered per index
    // against the exact marginal, then rescaled into the unit-norm budget
    MarkovArrayModel m(5, {0.7, 0.3}, {{0.6, 0.4, 0.2, 0.8}}, {{4.0, -4.0}});
    for (std::int64_t k = 1; k <= 5; ++k) {
        const auto mu = m.marginal(k);
        double mean = 0.0;
        for (int a = 0; a < 2; ++a)
            mean += mu[static_cast<std::size_t>(a)] * m.observable(k, a);
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::sqrt(m.var_at(k)) <= 1.0 + 1e-12);
    }
    CHECK(m.scale() < 1.0);  // centered norm exceeded 1

    // moderate observables stay untouched: centered norm is already <= 1
    MarkovArrayModel small(5, {0.7, 0.3}, {{0.6, 0.4, 0.2, 0.8}}, {{3.0, 1.0}});
    CHECK(small.scale() == 1.0);

    const auto chain = MarkovArrayModel::two_state(10, 0.3);
    CHECK(chain.scale() == 1.0);  // +/-1 observable is already in budget
    CHECK(chain.var_at(4) == doctest::Approx(1.0).epsilon(1e-14));

    // m-dependent rescaling: ||xi|| = 2 -> scale 1/3
    MDepArrayModel big(10, 0, {{2.0}}, InnovationLaw::Gaussian);
    CHECK(big.var_at(1) ==
          doctest::Approx(4.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("degenerate models are rejected") {
    CHECK_THROWS_AS(MDepArrayModel(10, 0, {{0.0}}, InnovationLaw::Gaussian),
                    PreconditionError);
    CHECK_THROWS_AS(
        MarkovArrayModel(5, {0.5, 0.5}, {{0.5, 0.5, 0.5, 0.5}}, {{2.0, 2.0}}),
        PreconditionError);
}

TEST_CASE("malformed transition matrices carry a row diagnostic") {
    try {
        MarkovArrayModel(5, {0.5, 0.5}, {{0.6, 0.3, 0.5, 0.5}}, {{1.0, -1.0}});
        FAIL("expected PreconditionError");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("row") != std::string::npos);
    }
}

TEST_CASE("sampling is deterministic in (seed, rep)") {
    const auto chain = MarkovArrayModel::two_state(64, 0.3);
    const auto a = sample_rows(chain, 8, 42, 1);
    const auto b = sample_rows(chain, 8, 42, 4);
    CHECK(a == b);  // worker count must not matter
    const auto c = sample_rows(chain, 8, 43, 1);
    CHECK(a != c);
}

TEST_CASE("sampled moments match the exact oracle") {
    const std::int64_t reps = 20000;
    const auto chain = MarkovArrayModel::two_state(40, 0.3);
    auto est = mc_pair_cov(chain, 7, 8, reps, 1234);
    CHECK(std::abs(est.value - 0.4) <= 5.0 * est.se);
    est = mc_pair_cov(chain, 7, 10, reps, 1234);
    CHECK(std::abs(est.value - chain.pair_cov(7, 10)) <= 5.0 * est.se);

    const auto m = ma1(40);
    auto rv = mc_range_var(m, {3, 22}, reps, 99);
    CHECK(std::abs(rv.value - 39.0) <= 5.0 * rv.se);

    // column means of a Gaussian row ~ CLT bound (fixed seed)
    const auto iid = MDepArrayModel::iid(50, InnovationLaw::Gaussian);
    const auto rows = sample_rows(iid, 10000, 7, 1);
    for (std::int64_t k = 0; k < 50; ++k) {
        double s = 0.0;
        for (std::int64_t r = 0; r < 10000; ++r)
            s += rows[static_cast<std::size_t>(r) * 50 +
                      static_cast<std::size_t>(k)];
        CHECK(std::abs(s / 10000.0) <= 4.0 / std::sqrt(10000.0));
    }
}

TEST_CASE("exact vs Monte Carlo oracle across the fleet") {
    const auto iid = MDepArrayModel::iid(40, InnovationLaw::Gaussian);
    const auto md = ma1(40);
    const auto chain = MarkovArrayModel::two_state(40, 0.3);
    const ArrayModel* fleet[] = {&iid, &md, &chain};
    Substream rng(2024, 0);
    for (const ArrayModel* m : fleet) {
        CovarianceOracle exact(*m);
        for (int t = 0; t < 20; ++t) {
            std::int64_t i =
                1 + static_cast<std::int64_t>(rng.uniform() * 39.0);
            std::int64_t j =
                1 + static_cast<std::int64_t>(rng.uniform() * 39.0);
            if (i > j) std::swap(i, j);
            const auto est = mc_range_var(*m, {i, j}, 100000,
                                          1000 + static_cast<std::uint64_t>(t));
            CHECK(std::abs(est.value - exact.range_var(i, j)) <=
                  5.0 * est.se);
        }
    }
}

TEST_CASE("variance additivity for independent coordinates") {
    const auto iid = MDepArrayModel::iid(64, InnovationLaw::Rademacher);
    CovarianceOracle o(iid);
    double expect = 0.0;
    RangeScan scan(iid, 3);
    for (std::int64_t j = 3; j <= 40; ++j) {
        expect += iid.var_at(j);
        CHECK(scan.extend() == expect);  // exact: all cross terms are 0
    }
}

TEST_CASE("Monte Carlo oracle mode mirrors the exact interface") {
    const auto m = ma1(30);
    CovarianceOracle exact(m);
    CovarianceOracle mc(m, 40000, 5);
    CHECK(mc.mode() == OracleMode::MonteCarlo);
    CHECK(std::abs(mc.range_var(2, 21) - exact.range_var(2, 21)) < 0.8);
    const auto pv = mc.prefix_variances();
    const auto pe = exact.prefix_variances();
    CHECK(pv.size() == pe.size());
    CHECK(std::abs(pv.back() - pe.back()) / pe.back() < 0.05);
}
