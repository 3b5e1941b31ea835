#include "mixlab/fclt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixlab/errors.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/stable_sum.hpp"

namespace mixlab {

std::vector<double> default_grid() { return step_grid(0.05); }

std::vector<double> step_grid(double step) {
    if (!(step > 0.0 && step <= 1.0))
        throw std::invalid_argument("grid step must be in (0,1]");
    std::vector<double> g;
    const int count = static_cast<int>(std::llround(1.0 / step));
    for (int k = 0; k <= count; ++k)
        g.push_back(std::min(1.0, static_cast<double>(k) * step));
    g.back() = 1.0;
    return g;
}

TimeChangeTable time_change(const CovarianceOracle& oracle,
                            const std::vector<double>& grid) {
    TimeChangeTable tc;
    tc.grid = grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] < 0.0 || grid[i] > 1.0)
            throw std::invalid_argument("grid values must lie in [0,1]");
        if (i > 0 && grid[i] < grid[i - 1])
            throw std::invalid_argument("grid must be sorted ascending");
    }
    tc.sigma_profile = oracle.prefix_variances();
    tc.sigma_n_sq = tc.sigma_profile.back();
    if (!(tc.sigma_n_sq > 0.0))
        throw PreconditionError("sigma_n^2 must be positive");
    // v(t) is nondecreasing in t, so one forward pointer suffices even for
    // non-monotone variance profiles
    tc.v.resize(grid.size());
    std::int64_t k = 1;
    const std::int64_t n = oracle.length();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double target = grid[i] * tc.sigma_n_sq;
        while (k < n &&
               tc.sigma_profile[static_cast<std::size_t>(k - 1)] < target)
            ++k;
        tc.v[i] = k;
    }
    return tc;
}

PathEnsemble build_paths(const ArrayModel& model, const TimeChangeTable& tc,
                         std::int64_t reps, std::uint64_t seed,
                         unsigned workers) {
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    PathEnsemble ens;
    ens.grid = tc.grid;
    ens.reps = reps;
    ens.n = model.length();
    ens.seed = seed;
    ens.model_id = model.describe();
    const std::size_t g = tc.grid.size();
    ens.paths.assign(static_cast<std::size_t>(reps) * g, 0.0);
    const double inv_sigma = 1.0 / std::sqrt(tc.sigma_n_sq);
    parallel_for(0, static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        std::vector<double> row(static_cast<std::size_t>(ens.n));
        model.sample_row(seed, r, row);
        KahanSum prefix;
        std::size_t gi = 0;
        for (std::int64_t k = 1; k <= ens.n && gi < g; ++k) {
            prefix.add(row[static_cast<std::size_t>(k - 1)]);
            while (gi < g && tc.v[gi] == k) {
                ens.paths[r * g + gi] = prefix.value() * inv_sigma;
                ++gi;
            }
        }
    });
    return ens;
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244008443621048);
}

BmStatistics bm_statistics(const PathEnsemble& ensemble) {
    if (ensemble.reps < 1000)
        throw PreconditionError(
            "bm_statistics refuses reps < 1000 (underpowered KS test)");
    const std::size_t g = ensemble.grid.size();
    const std::int64_t reps = ensemble.reps;
    BmStatistics st;

    // KS distance of W(1) against the standard normal
    {
        std::vector<double> w1(static_cast<std::size_t>(reps));
        for (std::int64_t r = 0; r < reps; ++r)
            w1[static_cast<std::size_t>(r)] = ensemble.at(r, g - 1);
        std::sort(w1.begin(), w1.end());
        double d = 0.0;
        const double n = static_cast<double>(reps);
        for (std::int64_t i = 0; i < reps; ++i) {
            const double u = normal_cdf(w1[static_cast<std::size_t>(i)]);
            d = std::max(d, (static_cast<double>(i) + 1.0) / n - u);
            d = std::max(d, u - static_cast<double>(i) / n);
        }
        st.ks_at_1 = d;
    }

    // empirical covariance matrix over the grid
    std::vector<double> mean(g, 0.0);
    {
        std::vector<KahanSum> acc(g);
        for (std::int64_t r = 0; r < reps; ++r)
            for (std::size_t a = 0; a < g; ++a) acc[a].add(ensemble.at(r, a));
        for (std::size_t a = 0; a < g; ++a)
            mean[a] = acc[a].value() / static_cast<double>(reps);
    }
    st.cov.assign(g, std::vector<double>(g, 0.0));
    {
        std::vector<std::vector<KahanSum>> acc(g, std::vector<KahanSum>(g));
        for (std::int64_t r = 0; r < reps; ++r)
            for (std::size_t a = 0; a < g; ++a) {
                const double va = ensemble.at(r, a) - mean[a];
                for (std::size_t b = a; b < g; ++b)
                    acc[a][b].add(va * (ensemble.at(r, b) - mean[b]));
            }
        for (std::size_t a = 0; a < g; ++a)
            for (std::size_t b = a; b < g; ++b) {
                const double v =
                    acc[a][b].value() / static_cast<double>(reps - 1);
                st.cov[a][b] = v;
                st.cov[b][a] = v;
            }
    }
    st.max_cov_dev = 0.0;
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b)
            st.max_cov_dev = std::max(
                st.max_cov_dev,
                std::abs(st.cov[a][b] -
                         std::min(ensemble.grid[a], ensemble.grid[b])));

    // correlation of the two increments split at the grid point nearest 1/2
    {
        std::size_t mid = 0;
        for (std::size_t a = 0; a < g; ++a)
            if (std::abs(ensemble.grid[a] - 0.5) <
                std::abs(ensemble.grid[mid] - 0.5))
                mid = a;
        KahanSum sxy, sxx, syy, sx, sy;
        for (std::int64_t r = 0; r < reps; ++r) {
            const double x = ensemble.at(r, mid) - ensemble.at(r, 0);
            const double y = ensemble.at(r, g - 1) - ensemble.at(r, mid);
            sx.add(x);
            sy.add(y);
            sxy.add(x * y);
            sxx.add(x * x);
            syy.add(y * y);
        }
        const double n = static_cast<double>(reps);
        const double cxy = sxy.value() / n - sx.value() * sy.value() / (n * n);
        const double cxx = sxx.value() / n - sx.value() * sx.value() / (n * n);
        const double cyy = syy.value() / n - sy.value() * sy.value() / (n * n);
        st.increment_corr =
            (cxx > 0.0 && cyy > 0.0) ? cxy / std::sqrt(cxx * cyy) : 0.0;
    }
    return st;
}

namespace {

double mean_of(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    return s.value() / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v, double mean) {
    KahanSum s;
    for (double x : v) s.add((x - mean) * (x - mean));
    const double n = static_cast<double>(v.size());
    return std::sqrt(s.value() / (n - 1.0) / n);
}

}  // namespace

LindebergReport lindeberg_max_report(const ArrayModel& model,
                                     const BlockPartition& partition,
                                     const std::vector<double>& eps_list,
                                     std::int64_t reps, std::uint64_t seed,
                                     unsigned workers) {
    if (partition.n != model.length())
        throw std::invalid_argument("partition and model lengths differ");
    if (reps < 2) throw std::invalid_argument("reps must be >= 2");
    CovarianceOracle oracle(model);
    const double sigma_sq = oracle.range_var(1, partition.n);
    const double sigma = std::sqrt(sigma_sq);

    const auto xints = partition.x_intervals();
    const std::size_t ne = eps_list.size();
    // per-replication sums, reduced in index order afterwards
    std::vector<double> l2(static_cast<std::size_t>(reps) * ne, 0.0);
    std::vector<double> l1(static_cast<std::size_t>(reps) * ne, 0.0);
    parallel_for(0, static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        std::vector<double> row(static_cast<std::size_t>(model.length()));
        model.sample_row(seed, r, row);
        std::vector<double> maxima(xints.size(), 0.0);
        for (std::size_t j = 0; j < xints.size(); ++j) {
            KahanSum prefix;
            double mx = 0.0;
            for (std::int64_t k = xints[j].lo; k <= xints[j].hi; ++k) {
                prefix.add(row[static_cast<std::size_t>(k - 1)]);
                mx = std::max(mx, std::abs(prefix.value()));
            }
            maxima[j] = mx;
        }
        for (std::size_t e = 0; e < ne; ++e) {
            const double cut = eps_list[e] * sigma;
            double s2 = 0.0, s1 = 0.0;
            for (double mx : maxima) {
                if (mx >= cut) {
                    s2 += mx * mx;
                    s1 += mx;
                }
            }
            l2[r * ne + e] = s2;
            l1[r * ne + e] = s1;
        }
    });

    LindebergReport rep;
    rep.reps = reps;
    rep.seed = seed;
    rep.sigma_n = sigma;
    for (std::size_t e = 0; e < ne; ++e) {
        std::vector<double> v2(static_cast<std::size_t>(reps)),
            v1(static_cast<std::size_t>(reps));
        for (std::int64_t r = 0; r < reps; ++r) {
            v2[static_cast<std::size_t>(r)] =
                l2[static_cast<std::size_t>(r) * ne + e];
            v1[static_cast<std::size_t>(r)] =
                l1[static_cast<std::size_t>(r) * ne + e];
        }
        LindebergRow row;
        row.eps = eps_list[e];
        const double m2 = mean_of(v2);
        const double m1 = mean_of(v1);
        row.l2 = m2 / sigma_sq;
        row.l2_se = se_of(v2, m2) / sigma_sq;
        row.l1 = m1 / sigma;
        row.l1_se = se_of(v1, m1) / sigma;
        rep.rows.push_back(row);
    }
    return rep;
}

PathBlockCheck path_block_closeness(const ArrayModel& model,
                                    const BlockPartition& partition,
                                    const TimeChangeTable& tc,
                                    std::int64_t reps, std::uint64_t seed,
                                    unsigned workers) {
    const auto xints = partition.x_intervals();
    const std::int64_t u = partition.u();
    const std::size_t g = tc.grid.size();
    // block prefix variances s_k^2 = sigma^2 at the X-block end indices
    std::vector<double> block_prefix_var(static_cast<std::size_t>(u));
    for (std::int64_t j = 0; j < u; ++j)
        block_prefix_var[static_cast<std::size_t>(j)] =
            tc.sigma_profile[static_cast<std::size_t>(
                xints[static_cast<std::size_t>(j)].hi - 1)];

    // per grid point: the last completed block end before v(t) (0 if none),
    // and the block path's own first-crossing time
    std::vector<std::int64_t> completed_end(g, 0);
    std::vector<std::int64_t> literal_end(g, 0);
    for (std::size_t i = 0; i < g; ++i) {
        const std::int64_t vt = tc.v[i];
        std::int64_t ce = 0;
        for (std::int64_t j = 0; j < u; ++j) {
            const std::int64_t e = xints[static_cast<std::size_t>(j)].hi;
            if (e < vt) ce = e;
        }
        completed_end[i] = ce;
        const double target = tc.grid[i] * tc.sigma_n_sq;
        std::int64_t lit = u;
        for (std::int64_t j = 0; j < u; ++j) {
            if (block_prefix_var[static_cast<std::size_t>(j)] >= target) {
                lit = j + 1;
                break;
            }
        }
        literal_end[i] = xints[static_cast<std::size_t>(lit - 1)].hi;
    }

    std::vector<std::uint8_t> viol(static_cast<std::size_t>(reps), 0);
    std::vector<std::uint8_t> viol_lit(static_cast<std::size_t>(reps), 0);
    std::vector<double> ratios(static_cast<std::size_t>(reps), 0.0);
    const std::int64_t n = model.length();
    parallel_for(0, static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        std::vector<double> row(static_cast<std::size_t>(n));
        model.sample_row(seed, r, row);
        std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
        KahanSum acc;
        for (std::int64_t k = 1; k <= n; ++k) {
            acc.add(row[static_cast<std::size_t>(k - 1)]);
            prefix[static_cast<std::size_t>(k)] = acc.value();
        }
        double bound = 0.0;
        for (const auto& I : xints) {
            const double base = prefix[static_cast<std::size_t>(I.lo - 1)];
            for (std::int64_t k = I.lo; k <= I.hi; ++k)
                bound = std::max(
                    bound,
                    std::abs(prefix[static_cast<std::size_t>(k)] - base));
        }
        double worst = 0.0, worst_lit = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
            const double w = prefix[static_cast<std::size_t>(tc.v[i])];
            worst = std::max(
                worst,
                std::abs(w - prefix[static_cast<std::size_t>(completed_end[i])]));
            worst_lit = std::max(
                worst_lit,
                std::abs(w - prefix[static_cast<std::size_t>(literal_end[i])]));
        }
        ratios[r] = bound > 0.0 ? worst / bound : 0.0;
        viol[r] = worst > bound + 1e-12 ? 1 : 0;
        viol_lit[r] = worst_lit > bound + 1e-12 ? 1 : 0;
    });

    PathBlockCheck out;
    out.reps = reps;
    for (std::int64_t r = 0; r < reps; ++r) {
        out.violations += viol[static_cast<std::size_t>(r)];
        out.literal_crossing_violations += viol_lit[static_cast<std::size_t>(r)];
        out.max_gap_ratio =
            std::max(out.max_gap_ratio, ratios[static_cast<std::size_t>(r)]);
    }
    return out;
}

MaximalInequalityReport maximal_inequality_check(
    const ArrayModel& model, double p, const std::vector<Interval>& ranges,
    std::int64_t m_n, std::int64_t reps, std::uint64_t seed,
    unsigned workers) {
    if (!(p > 2.0)) throw PreconditionError("maximal inequality needs p > 2");
    if (m_n < 1) throw PreconditionError("m_n must be >= 1");
    if (reps < 2) throw std::invalid_argument("reps must be >= 2");
    MaximalInequalityReport rep;
    rep.p = p;
    rep.m_n = m_n;
    rep.reps = reps;
    rep.seed = seed;

    const std::int64_t n = model.length();
    const std::size_t nr = ranges.size();
    std::vector<double> run_pow(static_cast<std::size_t>(reps) * nr, 0.0);
    std::vector<double> max_xi_pow(static_cast<std::size_t>(reps) * nr, 0.0);
    parallel_for(0, static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        std::vector<double> row(static_cast<std::size_t>(n));
        model.sample_row(seed, r, row);
        for (std::size_t q = 0; q < nr; ++q) {
            const Interval& I = ranges[q];
            KahanSum prefix;
            double run = 0.0, mxi = 0.0;
            for (std::int64_t k = I.lo; k <= I.hi; ++k) {
                const double x = row[static_cast<std::size_t>(k - 1)];
                prefix.add(x);
                run = std::max(run, std::abs(prefix.value()));
                mxi = std::max(mxi, std::abs(x));
            }
            run_pow[r * nr + q] = std::pow(run, p);
            max_xi_pow[r * nr + q] = std::pow(mxi, p);
        }
    });

    CovarianceOracle oracle(model);
    for (std::size_t q = 0; q < nr; ++q) {
        RangeCheck rc;
        rc.range = ranges[q];
        KahanSum lhs_acc, xi_acc;
        for (std::int64_t r = 0; r < reps; ++r) {
            lhs_acc.add(run_pow[static_cast<std::size_t>(r) * nr + q]);
            xi_acc.add(max_xi_pow[static_cast<std::size_t>(r) * nr + q]);
        }
        rc.lhs = std::pow(lhs_acc.value() / static_cast<double>(reps), 1.0 / p);
        rc.max_xi_p =
            std::pow(xi_acc.value() / static_cast<double>(reps), 1.0 / p);
        RangeScan scan(model, ranges[q].lo);
        double mx = 0.0;
        while (scan.cur() < ranges[q].hi)
            mx = std::max(mx, std::sqrt(std::max(0.0, scan.extend())));
        rc.max_s2 = mx;
        const double rhs = static_cast<double>(m_n) * rc.max_xi_p + rc.max_s2;
        rc.quotient = rc.lhs / rhs;
        rep.fitted_const = std::max(rep.fitted_const, rc.quotient);
        rep.ranges.push_back(rc);
    }
    return rep;
}

double condition_c_ratio(const BlockPartition& partition, double p,
                         const std::vector<double>& block_p_norms) {
    if (block_p_norms.size() != partition.blocks.size())
        throw std::invalid_argument("need one norm per block");
    LogSumExp num;
    for (double v : block_p_norms) num.add_log(p * std::log(v));
    LogSumExp den;
    for (const auto& b : partition.blocks)
        den.add_log(2.0 * std::log(b.a_j));
    return std::exp(num.log_value() - 0.5 * p * den.log_value());
}

std::vector<double> estimate_block_max_norms(const ArrayModel& model,
                                             const BlockPartition& partition,
                                             double p, std::int64_t reps,
                                             std::uint64_t seed,
                                             unsigned workers) {
    const auto xints = partition.x_intervals();
    const std::size_t u = xints.size();
    std::vector<double> pow_acc(static_cast<std::size_t>(reps) * u, 0.0);
    const std::int64_t n = model.length();
    parallel_for(0, static_cast<std::size_t>(reps), workers, [&](std::size_t r) {
        std::vector<double> row(static_cast<std::size_t>(n));
        model.sample_row(seed, r, row);
        for (std::size_t j = 0; j < u; ++j) {
            KahanSum prefix;
            double mx = 0.0;
            for (std::int64_t k = xints[j].lo; k <= xints[j].hi; ++k) {
                prefix.add(row[static_cast<std::size_t>(k - 1)]);
                mx = std::max(mx, std::abs(prefix.value()));
            }
            pow_acc[r * u + j] = std::pow(mx, p);
        }
    });
    std::vector<double> norms(u, 0.0);
    for (std::size_t j = 0; j < u; ++j) {
        KahanSum s;
        for (std::int64_t r = 0; r < reps; ++r)
            s.add(pow_acc[static_cast<std::size_t>(r) * u + j]);
        norms[j] = std::pow(s.value() / static_cast<double>(reps), 1.0 / p);
    }
    return norms;
}

}  // namespace mixlab
