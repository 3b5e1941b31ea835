#include "mixlab/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "mixlab/stable_sum.hpp"

namespace mixlab {

RangeScan::RangeScan(const ArrayModel& model, std::int64_t start)
    : model_(model), start_(start), cur_(start - 1),
      cross_(model.cross_scan(start)) {
    if (start < 1 || start > model.length())
        throw std::out_of_range("range start out of [1, n]");
}

double RangeScan::extend() {
    if (at_end()) throw std::out_of_range("range scan extended past n");
    ++cur_;
    const double inc = model_.var_at(cur_) + 2.0 * cross_->advance();
    // compensated accumulation; variances can span many magnitudes
    const double y = inc - comp_;
    const double t = var_ + y;
    comp_ = (t - var_) - y;
    var_ = t;
    return var_;
}

namespace {

// per-replication sums over a fixed index set, streamed
template <typename RowFn>
McEstimate mc_mean_se(std::int64_t reps, RowFn&& per_rep) {
    KahanSum sum, sumsq;
    for (std::int64_t r = 0; r < reps; ++r) {
        const double v = per_rep(static_cast<std::uint64_t>(r));
        sum.add(v);
        sumsq.add(v * v);
    }
    const double n = static_cast<double>(reps);
    const double mean = sum.value() / n;
    const double var = std::max(0.0, (sumsq.value() - n * mean * mean) / (n - 1.0));
    McEstimate e;
    e.value = mean;
    e.se = std::sqrt(var / n);
    return e;
}

}  // namespace

McEstimate mc_pair_cov(const ArrayModel& model, std::int64_t i, std::int64_t j,
                       std::int64_t reps, std::uint64_t seed) {
    if (reps < 2) throw std::invalid_argument("mc_pair_cov needs reps >= 2");
    std::vector<double> row(static_cast<std::size_t>(model.length()));
    // coordinates are exactly centered, so E[xi_i xi_j] is the covariance
    return mc_mean_se(reps, [&](std::uint64_t r) {
        model.sample_row(seed, r, row);
        return row[static_cast<std::size_t>(i - 1)] *
               row[static_cast<std::size_t>(j - 1)];
    });
}

McEstimate mc_range_var(const ArrayModel& model, Interval range,
                        std::int64_t reps, std::uint64_t seed) {
    if (reps < 2) throw std::invalid_argument("mc_range_var needs reps >= 2");
    std::vector<double> row(static_cast<std::size_t>(model.length()));
    return mc_mean_se(reps, [&](std::uint64_t r) {
        model.sample_row(seed, r, row);
        KahanSum s;
        for (std::int64_t k = range.lo; k <= range.hi; ++k)
            s.add(row[static_cast<std::size_t>(k - 1)]);
        const double v = s.value();
        return v * v;
    });
}

double CovarianceOracle::pair_cov(std::int64_t i, std::int64_t j) const {
    if (mode_ == OracleMode::Exact) return model_.pair_cov(i, j);
    return mc_pair_cov(model_, i, j, reps_, seed_).value;
}

double CovarianceOracle::range_var(std::int64_t i, std::int64_t j) const {
    if (i > j) throw std::invalid_argument("range_var needs i <= j");
    if (mode_ == OracleMode::MonteCarlo)
        return mc_range_var(model_, {i, j}, reps_, seed_).value;
    RangeScan scan(model_, i);
    while (scan.cur() < j) scan.extend();
    return scan.var();
}

double CovarianceOracle::range_norm(std::int64_t i, std::int64_t j) const {
    return std::sqrt(std::max(0.0, range_var(i, j)));
}

std::vector<double> CovarianceOracle::prefix_variances() const {
    const std::int64_t n = model_.length();
    std::vector<double> out(static_cast<std::size_t>(n));
    if (mode_ == OracleMode::MonteCarlo) {
        // single streaming pass over replications
        std::vector<double> row(static_cast<std::size_t>(n));
        std::vector<KahanSum> sumsq(static_cast<std::size_t>(n));
        for (std::int64_t r = 0; r < reps_; ++r) {
            model_.sample_row(seed_, static_cast<std::uint64_t>(r), row);
            KahanSum prefix;
            for (std::int64_t k = 0; k < n; ++k) {
                prefix.add(row[static_cast<std::size_t>(k)]);
                const double v = prefix.value();
                sumsq[static_cast<std::size_t>(k)].add(v * v);
            }
        }
        for (std::int64_t k = 0; k < n; ++k)
            out[static_cast<std::size_t>(k)] =
                sumsq[static_cast<std::size_t>(k)].value() /
                static_cast<double>(reps_);
        return out;
    }
    RangeScan scan(model_, 1);
    for (std::int64_t k = 1; k <= n; ++k)
        out[static_cast<std::size_t>(k - 1)] = scan.extend();
    return out;
}

std::vector<std::vector<double>> CovarianceOracle::interval_cov_matrix(
    const std::vector<Interval>& intervals) const {
    if (mode_ == OracleMode::Exact)
        return model_.interval_cov_matrix(intervals);
    // streaming MC cross-moments of interval sums
    const std::size_t m = intervals.size();
    std::vector<std::vector<KahanSum>> acc(m, std::vector<KahanSum>(m));
    std::vector<double> row(static_cast<std::size_t>(model_.length()));
    std::vector<double> sums(m);
    for (std::int64_t r = 0; r < reps_; ++r) {
        model_.sample_row(seed_, static_cast<std::uint64_t>(r), row);
        for (std::size_t a = 0; a < m; ++a) {
            KahanSum s;
            for (std::int64_t k = intervals[a].lo; k <= intervals[a].hi; ++k)
                s.add(row[static_cast<std::size_t>(k - 1)]);
            sums[a] = s.value();
        }
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b)
                acc[a][b].add(sums[a] * sums[b]);
    }
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            const double v = acc[a][b].value() / static_cast<double>(reps_);
            cov[a][b] = v;
            cov[b][a] = v;
        }
    return cov;
}

}  // namespace mixlab
