#pragma once

#include <cstdint>
#include <vector>

#include "mixlab/models.hpp"

namespace mixlab {

// Grows the range [start..cur] one index at a time, maintaining
// Var(S_{start..cur}) through the model's cross-covariance scan. The greedy
// block constructions probe ~n nested ranges, so extension must stay cheap.
class RangeScan {
public:
    RangeScan(const ArrayModel& model, std::int64_t start);

    std::int64_t start() const { return start_; }
    std::int64_t cur() const { return cur_; }      // start-1 while empty
    double var() const { return var_; }

    // include the next index; returns the updated variance
    double extend();
    bool at_end() const { return cur_ >= model_.length(); }

private:
    const ArrayModel& model_;
    std::int64_t start_;
    std::int64_t cur_;
    double var_ = 0.0;
    double comp_ = 0.0;  // Kahan carry
    std::unique_ptr<CrossSumScan> cross_;
};

struct McEstimate {
    double value = 0.0;
    double se = 0.0;
};

// Streaming Monte Carlo estimates against the exact oracle; used by the
// cross-validation tests.
McEstimate mc_pair_cov(const ArrayModel& model, std::int64_t i, std::int64_t j,
                       std::int64_t reps, std::uint64_t seed);
McEstimate mc_range_var(const ArrayModel& model, Interval range,
                        std::int64_t reps, std::uint64_t seed);

enum class OracleMode { Exact, MonteCarlo };

// Second-moment oracle over a model. Exact mode delegates to the model's
// closed-form covariances; MonteCarlo mode estimates the same quantities from
// (reps, seed)-deterministic replications.
class CovarianceOracle {
public:
    explicit CovarianceOracle(const ArrayModel& model)
        : model_(model), mode_(OracleMode::Exact) {}
    CovarianceOracle(const ArrayModel& model, std::int64_t reps,
                     std::uint64_t seed)
        : model_(model), mode_(OracleMode::MonteCarlo), reps_(reps),
          seed_(seed) {}

    const ArrayModel& model() const { return model_; }
    OracleMode mode() const { return mode_; }
    std::int64_t length() const { return model_.length(); }

    double pair_cov(std::int64_t i, std::int64_t j) const;
    double range_var(std::int64_t i, std::int64_t j) const;
    double range_norm(std::int64_t i, std::int64_t j) const;

    // sigma_{k}^2 = Var(S_{1..k}) for k = 1..n, one incremental pass
    std::vector<double> prefix_variances() const;

    std::vector<std::vector<double>> interval_cov_matrix(
        const std::vector<Interval>& intervals) const;

private:
    const ArrayModel& model_;
    OracleMode mode_;
    std::int64_t reps_ = 0;
    std::uint64_t seed_ = 0;
};

}  // namespace mixlab
