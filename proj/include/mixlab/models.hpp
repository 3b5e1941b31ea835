#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mixlab {

// Closed interval of 1-based row indices; empty when lo > hi.
struct Interval {
    std::int64_t lo = 1;
    std::int64_t hi = 0;
    bool empty() const { return lo > hi; }
    std::int64_t size() const { return empty() ? 0 : hi - lo + 1; }
};

// Incremental cross-covariance scan: after the c-th call to advance() the
// scan has absorbed index start+c-1 and returned
// sum_{k=start..start+c-2} Cov(xi_k, xi_{start+c-1}). This is what makes
// extending a partial-sum range by one index O(1)-ish instead of O(range).
class CrossSumScan {
public:
    virtual ~CrossSumScan() = default;
    virtual double advance() = 0;
};

// A triangular-array row model: centered coordinates xi_1..xi_n with
// max_k ||xi_k||_2 <= 1 (enforced at construction by the xi/(1+gamma)
// rescaling when needed), exact second moments, and a seeded row sampler.
// Indices are 1-based throughout.
class ArrayModel {
public:
    virtual ~ArrayModel() = default;

    virtual std::int64_t length() const = 0;
    virtual double var_at(std::int64_t k) const = 0;
    virtual double pair_cov(std::int64_t i, std::int64_t j) const = 0;
    virtual std::unique_ptr<CrossSumScan> cross_scan(std::int64_t start) const = 0;

    // One i.i.d. replication of (xi_1,...,xi_n); deterministic in (seed, rep).
    virtual void sample_row(std::uint64_t seed, std::uint64_t rep,
                            std::span<double> out) const = 0;

    // Cov(S(I_a), S(I_b)) for every pair of (pairwise disjoint, sorted)
    // intervals. Base implementation is the quadratic double loop; models
    // override with structure-aware sweeps.
    virtual std::vector<std::vector<double>> interval_cov_matrix(
        const std::vector<Interval>& intervals) const;

    virtual std::string describe() const = 0;

protected:
    void check_index(std::int64_t k) const;
};

enum class InnovationLaw { Gaussian, Rademacher, Bernoulli };

// xi_k = sum_{i=0..m0} c_{k,i} eta_{k-i} with i.i.d. centered unit-variance
// innovations; exactly m0-dependent. Coefficient rows cycle through the
// given pattern.
class MDepArrayModel : public ArrayModel {
public:
    MDepArrayModel(std::int64_t n, int m0,
                   std::vector<std::vector<double>> coeff_pattern,
                   InnovationLaw law, double bernoulli_p = 0.5);

    // i.i.d. coordinates with ||xi||_2 = 1
    static MDepArrayModel iid(std::int64_t n, InnovationLaw law,
                              double bernoulli_p = 0.5);

    std::int64_t length() const override { return n_; }
    double var_at(std::int64_t k) const override;
    double pair_cov(std::int64_t i, std::int64_t j) const override;
    std::unique_ptr<CrossSumScan> cross_scan(std::int64_t start) const override;
    void sample_row(std::uint64_t seed, std::uint64_t rep,
                    std::span<double> out) const override;
    std::vector<std::vector<double>> interval_cov_matrix(
        const std::vector<Interval>& intervals) const override;
    std::string describe() const override;

    int dep_range() const { return m0_; }
    InnovationLaw law() const { return law_; }
    double bernoulli_p() const { return bernoulli_p_; }
    // post-rescaling coefficient c_{k,i}
    double coeff(std::int64_t k, int i) const;
    double scale() const { return scale_; }

private:
    std::int64_t n_;
    int m0_;
    std::vector<std::vector<double>> pattern_;
    InnovationLaw law_;
    double bernoulli_p_;
    double scale_ = 1.0;
};

// Additive functional f_k(Y_k) of a nonstationary finite-state Markov chain
// (state count <= 8). Observables are centered per index against the exact
// marginal, then rescaled by 1/(1+gamma) if the largest L2 norm exceeds 1.
// Transition matrices and raw observables cycle through their patterns.
class MarkovArrayModel : public ArrayModel {
public:
    MarkovArrayModel(std::int64_t n, std::vector<double> initial,
                     std::vector<std::vector<double>> transition_pattern,
                     std::vector<std::vector<double>> observable_pattern);

    // symmetric two-state chain with observable +/-1
    static MarkovArrayModel two_state(std::int64_t n, double flip_prob);

    std::int64_t length() const override { return n_; }
    double var_at(std::int64_t k) const override;
    double pair_cov(std::int64_t i, std::int64_t j) const override;
    std::unique_ptr<CrossSumScan> cross_scan(std::int64_t start) const override;
    void sample_row(std::uint64_t seed, std::uint64_t rep,
                    std::span<double> out) const override;
    std::vector<std::vector<double>> interval_cov_matrix(
        const std::vector<Interval>& intervals) const override;
    std::string describe() const override;

    int states() const { return s_; }
    // centered, rescaled observable value f_k(state)
    double observable(std::int64_t k, int state) const;
    // exact marginal distribution of Y_k (size states())
    std::span<const double> marginal(std::int64_t k) const;
    // one-step matrix P_k taking Y_k to Y_{k+1}, row-major
    std::span<const double> step_matrix(std::int64_t k) const;
    // product P_s P_{s+1} ... P_{t-1}; identity when t <= s
    std::vector<double> transition_product(std::int64_t s, std::int64_t t) const;
    bool observable_injective(std::int64_t k) const;
    double scale() const { return scale_; }

private:
    // Cov(S(I), xi_l) for every l in (I.hi, n]; index [l - I.hi - 1]
    std::vector<double> cov_with_suffix(Interval I) const;

    std::int64_t n_;
    int s_;
    std::vector<double> initial_;
    std::vector<std::vector<double>> trans_;
    std::vector<std::vector<double>> obs_raw_;
    std::vector<double> marginals_;  // n * s_
    std::vector<double> means_;      // per-index centering offsets
    double scale_ = 1.0;
};

// reps x n row-major matrix of i.i.d. replications; replication r draws from
// the substream (seed, r), so the result is independent of worker count.
std::vector<double> sample_rows(const ArrayModel& model, std::int64_t reps,
                                std::uint64_t seed, unsigned workers = 1);

}  // namespace mixlab
