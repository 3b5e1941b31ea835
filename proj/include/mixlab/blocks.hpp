#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixlab/mixing.hpp"
#include "mixlab/oracle.hpp"
#include "mixlab/subexp.hpp"

namespace mixlab {

enum class BlockScheme { Rho, Projective };

struct BlockRecord {
    std::int64_t j = 0;   // 1-based block index
    Interval block;       // B_j
    Interval gap;         // D_j, empty for the final block
    double a_j = 0.0;     // threshold scale (A a_j resp. A)
    double y_norm = 0.0;  // ||S(B_j)||_2
    double z_norm = 0.0;  // ||S(D_j)||_2
    double x_norm = 0.0;  // ||S(B_j u D_j)||_2
};

// Partition of {1..n} into B_1 D_1 B_2 D_2 ... B_u with the final block
// absorbing the tail indices. X_j spans B_j u D_j, so the X intervals tile
// {1..n} exactly.
struct BlockPartition {
    std::int64_t n = 0;
    BlockScheme scheme = BlockScheme::Rho;
    double A = 0.0;
    double eps = 0.0;       // projective
    std::int64_t r = 0;     // projective
    std::vector<BlockRecord> blocks;
    bool final_block_unconstrained = false;

    std::int64_t u() const { return static_cast<std::int64_t>(blocks.size()); }
    Interval x_interval(std::int64_t j) const;  // B_j u D_j, contiguous
    std::vector<Interval> x_intervals() const;
};

// Greedy rho-scheme construction: block j grows from the current position
// until its own partial-sum norm first reaches A a_j, then a gap of
// ceil(a_j) indices is skipped. For families whose first defined index
// exceeds 1 the sequence is taken from that index on (a_1 = first defined
// term). Throws PreconditionError when not even the first block can reach
// its threshold.
BlockPartition construct_rho_blocks(const CovarianceOracle& oracle,
                                    const SubexpSpec& spec, double A);

// Projective scheme: Y blocks grow to norm >= A, Z gaps grow to norm
// >= A*eps, corresponding to the constant sequence a_j = A. Requires
// A > r and A*eps > r.
BlockPartition construct_projective_blocks(const CovarianceOracle& oracle,
                                           double A, double eps,
                                           std::int64_t r);

// perturbation envelopes:  E(A) = 3/A^2 + 2 sqrt(3/A^2),
//                          D(eps) = 6 eps^2 + 2 sqrt(6) eps
double e_perturbation(double A);
double d_perturbation(double eps);

// smallest A with E(A) <= target (via the quadratic in sqrt(3)/A)
double min_A_for_perturbation(double target);
// largest eps with D(eps) <= target
double max_eps_for_perturbation(double target);

struct PairRatio {
    std::int64_t s1 = 0, s2 = 0;
    double x_ratio = 0.0;   // Var(sum X) / sum Var(X)
    double y_ratio = 0.0;
    double z_ratio = 0.0;
    double xy_dev = 0.0;    // |Var(sum X)/Var(sum Y) - 1|
};

struct RegularityReport {
    BlockScheme scheme = BlockScheme::Rho;
    std::uint64_t seed = 0;
    std::int64_t pair_budget = 0;
    std::vector<PairRatio> samples;

    double min_x_ratio = 0.0, max_x_ratio = 0.0;
    double min_y_ratio = 0.0, max_y_ratio = 0.0;
    double min_z_ratio = 0.0, max_z_ratio = 0.0;
    double max_xy_dev = 0.0;

    // proposition constants the ratios are checked against
    double x_lo = 5.0 / 24.0, x_hi = 3.5;
    double yz_lo = 0.5, yz_hi = 1.5;
    double dev_bound = 0.0;  // E(A) or D(eps)

    bool x_pass = false, y_pass = false, z_pass = false, dev_pass = false;
    PairRatio worst_x, worst_y, worst_z, worst_dev;  // witnesses

    // construction guarantees, rechecked from the oracle
    bool sandwich_ok = false;   // A a_j <= ||Y_j|| <= A a_j + 1 for j < u
    bool gaps_ok = false;       // |D_j| >= ceil(a_j) (rho) / norms (proj)
    // gap sums against the norm-level bound ||Z_j|| <= a_j and the
    // always-true cardinality bound ||Z_j|| <= ceil(a_j)
    std::int64_t z_bound_as_written = 0;
    std::int64_t z_bound_ceil = 0;
    std::int64_t z_bound_total = 0;

    double sigma_ratio = 0.0;   // sigma_n^2 / (A^2 sum a_j^2)

    // projective-scheme hypothesis flags (A > r and A*eps > r); reported,
    // never fatal: the construction is threshold-only
    bool proj_a_ok = true;
    bool proj_aeps_ok = true;

    bool all_pass() const { return x_pass && y_pass && z_pass && dev_pass; }
};

// Exact verification of the regularity proposition over `pair_budget`
// uniformly sampled pairs (s1, s2) plus the deterministic extremes (1,u),
// (1,2), (u-1,u). All variances come from one exact block-covariance matrix.
RegularityReport verify_regularity(const BlockPartition& partition,
                                   const CovarianceOracle& oracle,
                                   std::int64_t pair_budget,
                                   std::uint64_t seed);

// sum_j rho([a_j]) over the partition's blocks, looking lags up in the
// profile (rho(x) = rho([x]); missing lags fall back to the nearest smaller
// lag, which over-estimates and keeps the hypothesis check conservative)
double rho_sum_for_partition(const BlockPartition& partition,
                             const MixingProfile& profile);

}  // namespace mixlab
