#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/models.hpp"

namespace mixlab {

// Joint law of the atoms of two finite sigma-algebras. Entries are clamped
// at 0, the total mass is renormalized to 1 (input must be within 1e-9), and
// zero-mass atoms are pruned so both marginals are strictly positive.
class JointBlockDistribution {
public:
    JointBlockDistribution(std::size_t left_atoms, std::size_t right_atoms,
                           std::vector<double> probs_row_major);

    std::size_t left_atoms() const { return left_; }
    std::size_t right_atoms() const { return right_; }
    double prob(std::size_t a, std::size_t b) const {
        return probs_[a * right_ + b];
    }
    double left_marginal(std::size_t a) const { return pl_[a]; }
    double right_marginal(std::size_t b) const { return pr_[b]; }

    // independent product with the same marginals
    JointBlockDistribution product_counterpart() const;

private:
    std::size_t left_ = 0, right_ = 0;
    std::vector<double> probs_;
    std::vector<double> pl_, pr_;
};

// Maximal correlation: second singular value of
// M(a,b) = P(a,b)/sqrt(P(a)P(b)); the leading singular value is always 1.
double rho_exact(const JointBlockDistribution& joint);

// sup_{A,B} |P(B|A) - P(B)|. Gray-code iteration over left events with the
// B-side supremum collapsed to its positive-part value; requires
// left_atoms + right_atoms <= 24.
double phi_exact(const JointBlockDistribution& joint);

// sup_{A,B} |P(A cap B) - P(A)P(B)|, same budget as phi_exact.
double alpha_exact(const JointBlockDistribution& joint);

enum class Provenance { Exact, UpperBound, LowerBound, MonteCarlo };

std::string provenance_name(Provenance p);

struct ProfileEntry {
    std::int64_t lag = 0;
    double rho = 0.0;
    double phi = 0.0;
    double alpha = 0.0;
    Provenance provenance = Provenance::Exact;
};

struct MixingProfile {
    std::vector<ProfileEntry> entries;  // sorted by lag

    const ProfileEntry* at_lag(std::int64_t lag) const;
};

// entrywise max across per-n profiles (the array coefficient takes sup
// over n; phi_n is defined per fixed n, hence this separate aggregator)
MixingProfile aggregate_profiles(const std::vector<MixingProfile>& profiles);

// throws InvariantError if rho <= 2 sqrt(phi), alpha <= phi or
// alpha <= rho/4 fails anywhere (should never happen)
void validate_profile_inequalities(const MixingProfile& profile);

enum class ProfileScope {
    SingleCoordinate,  // sigma(xi_s) vs sigma(xi_{s+k}), exact for both models
    FullPast           // sigma(xi_j: j<=s) vs sigma(xi_j: j>=s+k)
};

struct ProfileOptions {
    ProfileScope scope = ProfileScope::FullPast;
    // coordinates per side for windowed m-dependent joints (FullPast scope);
    // truncating the past makes those entries lower bounds for the sup
    int window = 1;
    // the sup over the split point s is stride-sampled above this many
    // candidates; subsampled entries are flagged as lower bounds
    int max_split_samples = 200;
};

// Exact per-n mixing profile. For Markov models the full-past coefficient
// collapses to the boundary pair (Y_s, Y_{s+k}): every mixing functional here
// is attained on boundary events, so the computation is exact whenever the
// observables are injective (and an upper bound otherwise, since the state
// algebra refines the observable algebra). m-dependent models are exactly 0
// beyond the dependence range; inside it, discrete innovation laws are
// enumerated over windows, and Gaussian innovations are not supported in
// FullPast scope.
MixingProfile coefficient_profile(const ArrayModel& model,
                                  const std::vector<std::int64_t>& lags,
                                  const ProfileOptions& opts = {});

// Boundary-state joint of (Y_s, Y_{s+k}); optionally with atoms merged by
// observable value (giving sigma(xi_s) vs sigma(xi_{s+k}) exactly).
JointBlockDistribution markov_boundary_joint(const MarkovArrayModel& model,
                                             std::int64_t s, std::int64_t k,
                                             bool merge_by_observable);

struct DeltaResult {
    double value = 0.0;
    Provenance provenance = Provenance::Exact;
};

// delta_n(m) = sup_k sum_{s=m}^{n-k} ||E[xi_{k+s} | xi_1..xi_k]||_2, with the
// sup restricted to the supplied k values. Markov models condition on the
// boundary state (exact for injective observables); m-dependent models use
// the innovation overlap (exact when every term vanishes, an upper bound
// otherwise).
DeltaResult delta_coefficient(const ArrayModel& model, std::int64_t m,
                              const std::vector<std::int64_t>& k_values);

std::vector<std::int64_t> default_delta_ks(std::int64_t n, std::int64_t m);

enum class TailModel { None, Geometric };

struct AlphaSumBound {
    double bound = 0.0;    // C_q * A_q * sum_{j>=m} alpha(j)^{1/2-1/q}
    double raw_sum = 0.0;  // sum without the constants
    double tail = 0.0;     // extrapolated part of raw_sum
};

// The alpha-sum side of the delta bound. The profile must cover contiguous
// lags from m up to its last entry; any unresolved tail (last alpha > 0)
// needs TailModel::Geometric, which extrapolates with the fitted ratio of
// the trailing entries.
AlphaSumBound alpha_sum_bound(const MixingProfile& profile, std::int64_t m,
                              double q, double c_q = 4.0, double a_q = 1.0,
                              TailModel tail = TailModel::Geometric);

}  // namespace mixlab
