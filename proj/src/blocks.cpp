#include "mixlab/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixlab/errors.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/stable_sum.hpp"

namespace mixlab {

Interval BlockPartition::x_interval(std::int64_t j) const {
    const auto& b = blocks[static_cast<std::size_t>(j - 1)];
    return {b.block.lo, b.gap.empty() ? b.block.hi : b.gap.hi};
}

std::vector<Interval> BlockPartition::x_intervals() const {
    std::vector<Interval> out;
    out.reserve(blocks.size());
    for (std::int64_t j = 1; j <= u(); ++j) out.push_back(x_interval(j));
    return out;
}

namespace {

void fill_norms(BlockPartition& p, const CovarianceOracle& oracle) {
    for (auto& b : p.blocks) {
        b.y_norm = oracle.range_norm(b.block.lo, b.block.hi);
        b.z_norm = b.gap.empty() ? 0.0 : oracle.range_norm(b.gap.lo, b.gap.hi);
        const std::int64_t xhi = b.gap.empty() ? b.block.hi : b.gap.hi;
        b.x_norm = oracle.range_norm(b.block.lo, xhi);
    }
}

// everything after the last completed block joins it
void merge_tail(BlockPartition& p) {
    auto& last = p.blocks.back();
    if (last.block.hi < p.n) p.final_block_unconstrained = true;
    last.block.hi = p.n;
    last.gap = {p.n + 1, p.n};
}

}  // namespace

BlockPartition construct_rho_blocks(const CovarianceOracle& oracle,
                                    const SubexpSpec& spec, double A) {
    if (!(A > 1.0))
        throw PreconditionError("rho-scheme construction needs A > 1");
    BlockPartition part;
    part.n = oracle.length();
    part.scheme = BlockScheme::Rho;
    part.A = A;

    const std::int64_t shift = spec.min_index() - 1;
    std::int64_t pos = 1;
    std::int64_t j = 1;
    for (;;) {
        if (pos > part.n) {
            // the previous gap consumed the remaining indices
            merge_tail(part);
            break;
        }
        const double a_j = spec.a(j + shift);
        const double threshold_sq = (A * a_j) * (A * a_j);
        RangeScan scan(oracle.model(), pos);
        std::int64_t found = -1;
        while (!scan.at_end()) {
            if (scan.extend() >= threshold_sq) {
                found = scan.cur();
                break;
            }
        }
        if (found < 0) {
            if (part.blocks.empty()) {
                std::ostringstream os;
                os << "total variance too small: ||S_1..n|| = "
                   << std::sqrt(scan.var()) << " never reaches A a_1 = "
                   << A * a_j;
                throw PreconditionError(os.str());
            }
            merge_tail(part);
            break;
        }
        BlockRecord rec;
        rec.j = j;
        rec.block = {pos, found};
        rec.a_j = a_j;
        const std::int64_t gap_len =
            static_cast<std::int64_t>(std::ceil(a_j));
        rec.gap = {found + 1, std::min(part.n, found + gap_len)};
        part.blocks.push_back(rec);
        if (found == part.n) {
            part.blocks.back().gap = {part.n + 1, part.n};
            break;
        }
        pos = found + gap_len + 1;
        ++j;
    }
    fill_norms(part, oracle);
    return part;
}

BlockPartition construct_projective_blocks(const CovarianceOracle& oracle,
                                           double A, double eps,
                                           std::int64_t r) {
    // the construction itself is threshold-only; A > r and A*eps > r are
    // hypotheses of the variance proposition, checked by verify/CLI
    if (!(eps > 0.0 && eps < 1.0))
        throw PreconditionError("projective construction needs eps in (0,1)");
    if (!(A > 0.0))
        throw PreconditionError("projective construction needs A > 0");
    if (r < 0) throw PreconditionError("projective construction needs r >= 0");
    BlockPartition part;
    part.n = oracle.length();
    part.scheme = BlockScheme::Projective;
    part.A = A;
    part.eps = eps;
    part.r = r;

    std::int64_t pos = 1;
    std::int64_t j = 1;
    const double y_thr = A * A;
    const double z_thr = (A * eps) * (A * eps);
    for (;;) {
        if (pos > part.n) {
            merge_tail(part);
            break;
        }
        // grow the Y block
        RangeScan scan(oracle.model(), pos);
        std::int64_t yend = -1;
        while (!scan.at_end()) {
            if (scan.extend() >= y_thr) {
                yend = scan.cur();
                break;
            }
        }
        if (yend < 0) {
            if (part.blocks.empty())
                throw PreconditionError(
                    "total variance too small to complete the first Y block");
            merge_tail(part);
            break;
        }
        BlockRecord rec;
        rec.j = j;
        rec.block = {pos, yend};
        rec.a_j = A;  // constant sequence
        rec.gap = {part.n + 1, part.n};
        part.blocks.push_back(rec);
        if (yend == part.n) break;
        // grow the Z gap
        RangeScan zscan(oracle.model(), yend + 1);
        std::int64_t zend = -1;
        while (!zscan.at_end()) {
            if (zscan.extend() >= z_thr) {
                zend = zscan.cur();
                break;
            }
        }
        if (zend < 0) {
            merge_tail(part);
            break;
        }
        part.blocks.back().gap = {yend + 1, zend};
        pos = zend + 1;
        ++j;
    }
    fill_norms(part, oracle);
    return part;
}

double e_perturbation(double A) {
    const double t = 3.0 / (A * A);
    return t + 2.0 * std::sqrt(t);
}

double d_perturbation(double eps) {
    return 6.0 * eps * eps + 2.0 * std::sqrt(6.0) * eps;
}

double min_A_for_perturbation(double target) {
    if (!(target > 0.0 && target < 1.0))
        throw PreconditionError("target must be in (0,1)");
    // with x = sqrt(3)/A the condition is x^2 + 2x <= target
    const double x = -1.0 + std::sqrt(1.0 + target);
    return std::sqrt(3.0) / x;
}

double max_eps_for_perturbation(double target) {
    if (!(target >= 0.0 && target < 1.0))
        throw PreconditionError("target must be in [0,1)");
    if (target == 0.0) return 0.0;
    // 6 eps^2 + 2 sqrt(6) eps - target = 0
    return (-2.0 * std::sqrt(6.0) + std::sqrt(24.0 + 24.0 * target)) / 12.0;
}

RegularityReport verify_regularity(const BlockPartition& partition,
                                   const CovarianceOracle& oracle,
                                   std::int64_t pair_budget,
                                   std::uint64_t seed) {
    const std::int64_t u = partition.u();
    RegularityReport rep;
    rep.scheme = partition.scheme;
    rep.seed = seed;
    rep.pair_budget = pair_budget;
    rep.dev_bound = partition.scheme == BlockScheme::Rho
                        ? e_perturbation(partition.A)
                        : d_perturbation(partition.eps);
    if (partition.scheme == BlockScheme::Projective) {
        rep.proj_a_ok = partition.A > static_cast<double>(partition.r);
        rep.proj_aeps_ok =
            partition.A * partition.eps > static_cast<double>(partition.r);
    }

    // construction guarantees, rechecked against the oracle
    rep.sandwich_ok = true;
    rep.gaps_ok = true;
    for (const auto& b : partition.blocks) {
        const bool last = b.j == u;
        if (!last || !partition.final_block_unconstrained) {
            const double lo = partition.scheme == BlockScheme::Rho
                                  ? partition.A * b.a_j
                                  : partition.A;
            if (b.y_norm < lo - 1e-9 || b.y_norm > lo + 1.0 + 1e-9)
                rep.sandwich_ok = false;
        }
        if (!last) {
            if (partition.scheme == BlockScheme::Rho) {
                if (b.gap.size() <
                    static_cast<std::int64_t>(std::ceil(b.a_j)) &&
                    b.gap.hi < partition.n)
                    rep.gaps_ok = false;
            } else {
                const double zlo = partition.A * partition.eps;
                if (b.z_norm < zlo - 1e-9 || b.z_norm > zlo + 1.0 + 1e-9)
                    rep.gaps_ok = false;
            }
            ++rep.z_bound_total;
            if (b.z_norm <= b.a_j + 1e-9) ++rep.z_bound_as_written;
            if (b.z_norm <= std::ceil(b.a_j) + 1e-9) ++rep.z_bound_ceil;
        }
    }

    // sigma_n^2 against A^2 sum a_j^2
    {
        KahanSum asum;
        for (const auto& b : partition.blocks) asum.add(b.a_j * b.a_j);
        const double sigma_sq = oracle.range_var(1, partition.n);
        rep.sigma_ratio =
            sigma_sq / (partition.A * partition.A * asum.value());
    }

    if (u < 2) {
        // a single (merged) block admits no pairs; ratios are vacuous
        rep.x_pass = rep.y_pass = rep.z_pass = rep.dev_pass = true;
        return rep;
    }

    // one exact covariance matrix over all Y and Z intervals
    std::vector<Interval> intervals;
    intervals.reserve(static_cast<std::size_t>(2 * u));
    for (const auto& b : partition.blocks) intervals.push_back(b.block);
    for (const auto& b : partition.blocks) intervals.push_back(b.gap);
    const auto cov = oracle.interval_cov_matrix(intervals);
    auto cy = [&](std::int64_t i, std::int64_t j) {
        return cov[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    };
    auto cz = [&](std::int64_t i, std::int64_t j) {
        return cov[static_cast<std::size_t>(u + i - 1)]
                  [static_cast<std::size_t>(u + j - 1)];
    };
    auto cyz = [&](std::int64_t i, std::int64_t j) {
        return cov[static_cast<std::size_t>(i - 1)]
                  [static_cast<std::size_t>(u + j - 1)];
    };
    auto cx = [&](std::int64_t i, std::int64_t j) {
        return cy(i, j) + cz(i, j) + cyz(i, j) + cyz(j, i);
    };

    // deterministic extremes plus uniformly sampled ordered pairs
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    pairs.emplace_back(1, u);
    pairs.emplace_back(1, 2);
    if (u >= 3) pairs.emplace_back(u - 1, u);
    Substream rng(seed, 0);
    for (std::int64_t i = 0; i < pair_budget; ++i) {
        std::int64_t s1, s2;
        do {
            s1 = 1 + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(u));
            s2 = 1 + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(u));
            s1 = std::min(s1, u);
            s2 = std::min(s2, u);
        } while (s1 == s2);
        if (s1 > s2) std::swap(s1, s2);
        pairs.emplace_back(s1, s2);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    rep.min_x_ratio = rep.min_y_ratio = rep.min_z_ratio =
        std::numeric_limits<double>::infinity();
    rep.max_x_ratio = rep.max_y_ratio = rep.max_z_ratio = 0.0;
    rep.max_xy_dev = 0.0;
    rep.x_pass = rep.y_pass = rep.z_pass = rep.dev_pass = true;

    for (const auto& [s1, s2] : pairs) {
        PairRatio pr;
        pr.s1 = s1;
        pr.s2 = s2;
        KahanSum var_x, var_y, var_z, sum_x, sum_y, sum_z;
        for (std::int64_t i = s1; i <= s2; ++i) {
            sum_x.add(cx(i, i));
            sum_y.add(cy(i, i));
            sum_z.add(cz(i, i));
            for (std::int64_t j = s1; j <= s2; ++j) {
                var_x.add(cx(i, j));
                var_y.add(cy(i, j));
                var_z.add(cz(i, j));
            }
        }
        if (!(sum_y.value() > 0.0) || !(var_y.value() > 0.0))
            throw InvariantError("Y block variances vanished");
        pr.x_ratio = var_x.value() / sum_x.value();
        pr.y_ratio = var_y.value() / sum_y.value();
        // degenerate gaps are legal; an empty Z sum counts as the neutral 1
        pr.z_ratio =
            sum_z.value() > 1e-15 ? var_z.value() / sum_z.value() : 1.0;
        pr.xy_dev = std::abs(var_x.value() / var_y.value() - 1.0);
        rep.samples.push_back(pr);

        if (pr.x_ratio < rep.min_x_ratio) rep.min_x_ratio = pr.x_ratio;
        if (pr.x_ratio > rep.max_x_ratio) {
            rep.max_x_ratio = pr.x_ratio;
        }
        rep.min_y_ratio = std::min(rep.min_y_ratio, pr.y_ratio);
        rep.max_y_ratio = std::max(rep.max_y_ratio, pr.y_ratio);
        rep.min_z_ratio = std::min(rep.min_z_ratio, pr.z_ratio);
        rep.max_z_ratio = std::max(rep.max_z_ratio, pr.z_ratio);

        const bool x_ok = pr.x_ratio >= rep.x_lo && pr.x_ratio <= rep.x_hi;
        const bool y_ok = pr.y_ratio >= rep.yz_lo && pr.y_ratio <= rep.yz_hi;
        const bool z_ok = pr.z_ratio >= rep.yz_lo && pr.z_ratio <= rep.yz_hi;
        const bool d_ok = pr.xy_dev <= rep.dev_bound;
        if (!x_ok && rep.x_pass) rep.worst_x = pr;
        if (!y_ok && rep.y_pass) rep.worst_y = pr;
        if (!z_ok && rep.z_pass) rep.worst_z = pr;
        if (!d_ok && rep.dev_pass) rep.worst_dev = pr;
        rep.x_pass &= x_ok;
        rep.y_pass &= y_ok;
        rep.z_pass &= z_ok;
        rep.dev_pass &= d_ok;
        if (pr.xy_dev > rep.max_xy_dev) {
            rep.max_xy_dev = pr.xy_dev;
            rep.worst_dev = pr;
        }
    }
    return rep;
}

double rho_sum_for_partition(const BlockPartition& partition,
                             const MixingProfile& profile) {
    KahanSum sum;
    for (const auto& b : partition.blocks) {
        const std::int64_t lag =
            std::max<std::int64_t>(1, static_cast<std::int64_t>(b.a_j));
        // nearest available lag <= requested; rho is nonincreasing, so this
        // only over-estimates the sum
        const ProfileEntry* best = nullptr;
        for (const auto& e : profile.entries)
            if (e.lag <= lag && (best == nullptr || e.lag > best->lag))
                best = &e;
        if (best == nullptr)
            throw PreconditionError(
                "mixing profile has no entry at or below the required lag");
        sum.add(best->rho);
    }
    return sum.value();
}

}  // namespace mixlab
