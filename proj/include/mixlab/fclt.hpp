#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixlab/blocks.hpp"
#include "mixlab/oracle.hpp"

namespace mixlab {

// v_n(t) = min{1 <= k <= n : sigma_{k}^2 >= t sigma_n^2}, first-crossing
// semantics (the variance profile need not be monotone for dependent rows).
struct TimeChangeTable {
    std::vector<double> grid;           // sorted, within [0,1]
    std::vector<std::int64_t> v;        // v_n(t) per grid point
    std::vector<double> sigma_profile;  // sigma_k^2 for k = 1..n
    double sigma_n_sq = 0.0;
};

TimeChangeTable time_change(const CovarianceOracle& oracle,
                            const std::vector<double>& grid);

// default grid {k/20 : k = 0..20}
std::vector<double> default_grid();
std::vector<double> step_grid(double step);

// Monte Carlo sample paths of W_n(t) = S_{v_n(t)}/sigma_n on the grid,
// piecewise-constant in t between grid points.
struct PathEnsemble {
    std::vector<double> grid;
    std::int64_t reps = 0;
    std::int64_t n = 0;
    std::uint64_t seed = 0;
    std::string model_id;
    std::vector<double> paths;  // reps x grid.size(), row-major

    double at(std::int64_t rep, std::size_t g) const {
        return paths[static_cast<std::size_t>(rep) * grid.size() + g];
    }
};

PathEnsemble build_paths(const ArrayModel& model, const TimeChangeTable& tc,
                         std::int64_t reps, std::uint64_t seed,
                         unsigned workers = 1);

// Brownian-motion convergence statistics on an ensemble. Needs reps >= 1000;
// the asymptotic KS critical values are meaningless below that.
struct BmStatistics {
    double ks_at_1 = 0.0;  // KS distance of W(1) against N(0,1)
    std::vector<std::vector<double>> cov;  // empirical Cov(W(s), W(t))
    double max_cov_dev = 0.0;              // max |cov - min(s,t)|
    double increment_corr = 0.0;  // corr of the two half increments
};

BmStatistics bm_statistics(const PathEnsemble& ensemble);

double normal_cdf(double x);

// Lindeberg condition of maximal type along a partition, with the per-block
// running maxima X_j = max_k |sum_{x_j..k} xi|:
//   L2(eps) = sigma_n^{-2} sum_j E[X_j^2 1{X_j >= eps sigma_n}]
//   L1(eps) = sigma_n^{-1} sum_j E[X_j   1{X_j >= eps sigma_n}]
// Both negligibility forms matter downstream, so both are estimated
// side by side.
struct LindebergRow {
    double eps = 0.0;
    double l2 = 0.0, l2_se = 0.0;
    double l1 = 0.0, l1_se = 0.0;
};

struct LindebergReport {
    std::vector<LindebergRow> rows;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
    double sigma_n = 0.0;
};

LindebergReport lindeberg_max_report(const ArrayModel& model,
                                     const BlockPartition& partition,
                                     const std::vector<double>& eps_list,
                                     std::int64_t reps, std::uint64_t seed,
                                     unsigned workers = 1);

// Pathwise closeness of W_n to the block-level path: per replication,
//   sup_t |W_n(t) - W_blocks(t)| <= max_j X_j / sigma_n
// with the block path sampled at the last completed block boundary before
// the crossing index (the bound the block decomposition argument actually
// establishes; `literal_crossing_violations` counts the variant sampling
// the block path at its own first-crossing time, whose gap is a
// within-block suffix and can reach twice the running maximum).
struct PathBlockCheck {
    std::int64_t reps = 0;
    std::int64_t violations = 0;
    double max_gap_ratio = 0.0;  // sup_t diff / bound, worst replication
    std::int64_t literal_crossing_violations = 0;
};

PathBlockCheck path_block_closeness(const ArrayModel& model,
                                    const BlockPartition& partition,
                                    const TimeChangeTable& tc,
                                    std::int64_t reps, std::uint64_t seed,
                                    unsigned workers = 1);

// Maximal moment inequality over index ranges:
//   || max_{j in range} |S_j - S_{lo-1}| ||_p
//     <= C p ( m_n ||max |xi|||_p + max_prefix ||S||_2 )
// The left side and the max-|xi| term are Monte Carlo estimates; the L2 term
// is exact. fitted_const is the largest quotient lhs/rhs_parts, to be
// compared against 4p.
struct RangeCheck {
    Interval range;
    double lhs = 0.0;        // MC estimate of the L^p running-max norm
    double max_xi_p = 0.0;   // MC estimate of || max |xi| ||_p
    double max_s2 = 0.0;     // exact max prefix L2 norm
    double quotient = 0.0;   // lhs / (m_n max_xi_p + max_s2)
};

struct MaximalInequalityReport {
    double p = 0.0;
    std::int64_t m_n = 0;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<RangeCheck> ranges;
    double fitted_const = 0.0;
};

MaximalInequalityReport maximal_inequality_check(
    const ArrayModel& model, double p, const std::vector<Interval>& ranges,
    std::int64_t m_n, std::int64_t reps, std::uint64_t seed,
    unsigned workers = 1);

// sum_j ||X_j||_p^p / (sum_j a_j^2)^{p/2} for a partition's block scales
double condition_c_ratio(const BlockPartition& partition, double p,
                         const std::vector<double>& block_p_norms);

// MC estimates of || X_j ||_p per block (inputs to condition_c_ratio)
std::vector<double> estimate_block_max_norms(const ArrayModel& model,
                                             const BlockPartition& partition,
                                             double p, std::int64_t reps,
                                             std::uint64_t seed,
                                             unsigned workers = 1);

}  // namespace mixlab
