#include "mixlab/mixing.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mixlab/errors.hpp"
#include "mixlab/stable_sum.hpp"

namespace mixlab {

namespace {

constexpr int kAtomBudget = 24;  // phi/alpha event enumeration budget

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

JointBlockDistribution::JointBlockDistribution(std::size_t left_atoms,
                                               std::size_t right_atoms,
                                               std::vector<double> probs)
    : left_(left_atoms), right_(right_atoms), probs_(std::move(probs)) {
    if (left_ == 0 || right_ == 0 || probs_.size() != left_ * right_)
        throw std::invalid_argument("joint distribution shape mismatch");
    double total = 0.0;
    for (double& p : probs_) {
        if (!std::isfinite(p) || p < -1e-12)
            throw std::invalid_argument("joint probability invalid");
        if (p < 0.0) p = 0.0;
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("joint probabilities must sum to 1");
    for (double& p : probs_) p /= total;

    // prune zero-mass atoms so both marginals are strictly positive
    std::vector<double> pl(left_, 0.0), pr(right_, 0.0);
    for (std::size_t a = 0; a < left_; ++a)
        for (std::size_t b = 0; b < right_; ++b) {
            pl[a] += probs_[a * right_ + b];
            pr[b] += probs_[a * right_ + b];
        }
    std::vector<std::size_t> keep_l, keep_r;
    for (std::size_t a = 0; a < left_; ++a)
        if (pl[a] > 1e-15) keep_l.push_back(a);
    for (std::size_t b = 0; b < right_; ++b)
        if (pr[b] > 1e-15) keep_r.push_back(b);
    if (keep_l.empty() || keep_r.empty())
        throw std::invalid_argument("joint distribution has no mass");
    if (keep_l.size() != left_ || keep_r.size() != right_) {
        std::vector<double> pruned(keep_l.size() * keep_r.size());
        for (std::size_t a = 0; a < keep_l.size(); ++a)
            for (std::size_t b = 0; b < keep_r.size(); ++b)
                pruned[a * keep_r.size() + b] =
                    probs_[keep_l[a] * right_ + keep_r[b]];
        probs_ = std::move(pruned);
        left_ = keep_l.size();
        right_ = keep_r.size();
    }
    pl_.assign(left_, 0.0);
    pr_.assign(right_, 0.0);
    for (std::size_t a = 0; a < left_; ++a)
        for (std::size_t b = 0; b < right_; ++b) {
            pl_[a] += probs_[a * right_ + b];
            pr_[b] += probs_[a * right_ + b];
        }
}

JointBlockDistribution JointBlockDistribution::product_counterpart() const {
    std::vector<double> p(left_ * right_);
    for (std::size_t a = 0; a < left_; ++a)
        for (std::size_t b = 0; b < right_; ++b)
            p[a * right_ + b] = pl_[a] * pr_[b];
    return JointBlockDistribution(left_, right_, std::move(p));
}

double rho_exact(const JointBlockDistribution& joint) {
    const std::size_t L = joint.left_atoms();
    const std::size_t R = joint.right_atoms();
    if (L < 2 || R < 2) return 0.0;  // a trivial side admits no unit-variance functions
    Eigen::MatrixXd M(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(R));
    for (std::size_t a = 0; a < L; ++a)
        for (std::size_t b = 0; b < R; ++b)
            M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                joint.prob(a, b) /
                std::sqrt(joint.left_marginal(a) * joint.right_marginal(b));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (std::abs(sv(0) - 1.0) > 1e-8)
        throw InvariantError(
            "leading singular value of the normalized joint is not 1");
    return clamp01(sv(1));
}

namespace {

// shared Gray-code driver for the event-pair suprema: iterates subsets A of
// the left atoms maintaining P(A) and the row sums P(A, b); the inner sup
// over B collapses to a positive-part sum because the signed B-masses total 0
template <typename Objective>
double gray_code_sup(const JointBlockDistribution& j, Objective&& objective) {
    const std::size_t L = j.left_atoms();
    const std::size_t R = j.right_atoms();
    if (L + R > static_cast<std::size_t>(kAtomBudget))
        throw PreconditionError(
            "atom budget exceeded (left+right > 24); coarsen the joint");
    std::vector<double> pab(R, 0.0);
    double pa = 0.0;
    double best = 0.0;
    std::uint64_t gray = 0;
    const std::uint64_t count = std::uint64_t{1} << L;
    for (std::uint64_t i = 1; i < count; ++i) {
        const int bit = std::countr_zero(i);
        gray ^= std::uint64_t{1} << bit;
        const double sign = (gray >> bit & 1u) ? 1.0 : -1.0;
        pa += sign * j.left_marginal(static_cast<std::size_t>(bit));
        for (std::size_t b = 0; b < R; ++b)
            pab[b] += sign * j.prob(static_cast<std::size_t>(bit), b);
        if (pa <= 1e-15) continue;
        best = std::max(best, objective(pa, pab));
    }
    return best;
}

}  // namespace

double phi_exact(const JointBlockDistribution& joint) {
    const std::size_t R = joint.right_atoms();
    return gray_code_sup(joint, [&](double pa, const std::vector<double>& pab) {
        double v = 0.0;
        for (std::size_t b = 0; b < R; ++b)
            v += std::max(0.0, pab[b] / pa - joint.right_marginal(b));
        return v;
    });
}

double alpha_exact(const JointBlockDistribution& joint) {
    const std::size_t R = joint.right_atoms();
    const double a = gray_code_sup(
        joint, [&](double pa, const std::vector<double>& pab) {
            double v = 0.0;
            for (std::size_t b = 0; b < R; ++b)
                v += std::max(0.0, pab[b] - pa * joint.right_marginal(b));
            return v;
        });
    if (a > 0.25 + 1e-12)
        throw InvariantError("alpha coefficient exceeded 1/4");
    return std::min(a, 0.25);
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Exact: return "exact";
        case Provenance::UpperBound: return "upper_bound";
        case Provenance::LowerBound: return "lower_bound";
        case Provenance::MonteCarlo: return "monte_carlo";
    }
    return "?";
}

const ProfileEntry* MixingProfile::at_lag(std::int64_t lag) const {
    for (const auto& e : entries)
        if (e.lag == lag) return &e;
    return nullptr;
}

namespace {

Provenance combine_provenance(Provenance a, Provenance b) {
    auto rank = [](Provenance p) {
        switch (p) {
            case Provenance::Exact: return 0;
            case Provenance::LowerBound: return 1;
            case Provenance::UpperBound: return 2;
            case Provenance::MonteCarlo: return 3;
        }
        return 3;
    };
    return rank(a) >= rank(b) ? a : b;
}

}  // namespace

MixingProfile aggregate_profiles(const std::vector<MixingProfile>& profiles) {
    std::map<std::int64_t, ProfileEntry> by_lag;
    for (const auto& p : profiles) {
        for (const auto& e : p.entries) {
            auto it = by_lag.find(e.lag);
            if (it == by_lag.end()) {
                by_lag.emplace(e.lag, e);
            } else {
                it->second.rho = std::max(it->second.rho, e.rho);
                it->second.phi = std::max(it->second.phi, e.phi);
                it->second.alpha = std::max(it->second.alpha, e.alpha);
                it->second.provenance =
                    combine_provenance(it->second.provenance, e.provenance);
            }
        }
    }
    MixingProfile out;
    for (auto& [lag, e] : by_lag) out.entries.push_back(e);
    return out;
}

void validate_profile_inequalities(const MixingProfile& profile) {
    for (const auto& e : profile.entries) {
        std::ostringstream os;
        if (e.rho > 2.0 * std::sqrt(e.phi) + 1e-9) {
            os << "rho(" << e.lag << ") = " << e.rho << " exceeds 2 sqrt(phi) = "
               << 2.0 * std::sqrt(e.phi);
            throw InvariantError(os.str());
        }
        if (e.alpha > e.phi + 1e-12) {
            os << "alpha(" << e.lag << ") = " << e.alpha << " exceeds phi = "
               << e.phi;
            throw InvariantError(os.str());
        }
        if (e.alpha > e.rho / 4.0 + 1e-9) {
            os << "alpha(" << e.lag << ") = " << e.alpha << " exceeds rho/4 = "
               << e.rho / 4.0;
            throw InvariantError(os.str());
        }
    }
}

// ---------------------------------------------------------------------------
// joint construction
// ---------------------------------------------------------------------------

JointBlockDistribution markov_boundary_joint(const MarkovArrayModel& model,
                                             std::int64_t s, std::int64_t k,
                                             bool merge_by_observable) {
    if (k < 1 || s < 1 || s + k > model.length())
        throw std::invalid_argument("boundary joint needs 1 <= s, s+k <= n");
    const int S = model.states();
    const auto mu = model.marginal(s);
    const auto K = model.transition_product(s, s + k);
    std::vector<double> probs(static_cast<std::size_t>(S) * S);
    for (int a = 0; a < S; ++a)
        for (int b = 0; b < S; ++b)
            probs[static_cast<std::size_t>(a) * S + b] =
                mu[static_cast<std::size_t>(a)] *
                K[static_cast<std::size_t>(a) * S + b];
    if (!merge_by_observable)
        return JointBlockDistribution(static_cast<std::size_t>(S),
                                      static_cast<std::size_t>(S),
                                      std::move(probs));
    // collapse states carrying equal observable values; this realizes the
    // sigma-algebras generated by the coordinates themselves
    auto groups = [&](std::int64_t idx) {
        std::map<double, int> gid;
        std::vector<int> of_state(static_cast<std::size_t>(S));
        for (int a = 0; a < S; ++a) {
            const double v = model.observable(idx, a);
            auto [it, fresh] = gid.emplace(v, static_cast<int>(gid.size()));
            of_state[static_cast<std::size_t>(a)] = it->second;
        }
        return std::pair{of_state, gid.size()};
    };
    auto [gl, nl] = groups(s);
    auto [gr, nr] = groups(s + k);
    std::vector<double> merged(nl * nr, 0.0);
    for (int a = 0; a < S; ++a)
        for (int b = 0; b < S; ++b)
            merged[static_cast<std::size_t>(gl[static_cast<std::size_t>(a)]) * nr +
                   static_cast<std::size_t>(gr[static_cast<std::size_t>(b)])] +=
                probs[static_cast<std::size_t>(a) * S + b];
    return JointBlockDistribution(nl, nr, std::move(merged));
}

namespace {

struct InnovationSupport {
    double values[2];
    double probs[2];
};

InnovationSupport innovation_support(InnovationLaw law, double p) {
    switch (law) {
        case InnovationLaw::Rademacher:
            return {{1.0, -1.0}, {0.5, 0.5}};
        case InnovationLaw::Bernoulli: {
            const double sd = std::sqrt(p * (1.0 - p));
            return {{(1.0 - p) / sd, -p / sd}, {p, 1.0 - p}};
        }
        case InnovationLaw::Gaussian:
            throw PreconditionError(
                "Gaussian innovations admit no finite-atom joint inside the "
                "dependence range; use a discrete innovation law");
    }
    throw std::logic_error("unreachable");
}

// cluster scalar tuples that agree within tolerance into atom ids
struct TupleAtlas {
    std::vector<std::vector<double>> tuples;

    std::size_t add(const std::vector<double>& t) {
        tuples.push_back(t);
        return tuples.size() - 1;
    }
};

// joint of the observable tuples over [s-w+1..s] and [s+k..s+k+w-1] for an
// m-dependent model with a two-point innovation law
JointBlockDistribution mdep_window_joint(const MDepArrayModel& model,
                                         std::int64_t s, std::int64_t k, int w) {
    const int m0 = model.dep_range();
    if (w < 1) throw std::invalid_argument("window must be >= 1");
    if (s - w + 1 < 1 || s + k + w - 1 > model.length())
        throw std::invalid_argument("window joint out of range");
    const int n_inn = static_cast<int>(k) + 2 * w + m0 - 1;
    if (n_inn > 22)
        throw PreconditionError(
            "innovation path budget exceeded; shrink the window");
    const auto sup = innovation_support(model.law(), model.bernoulli_p());
    const std::int64_t inn_lo = s - w + 1 - m0;  // first innovation index
    const std::uint64_t count = std::uint64_t{1} << n_inn;

    auto coord_value = [&](std::int64_t idx, std::uint64_t pattern) {
        double v = 0.0;
        for (int i = 0; i <= m0; ++i) {
            const double c = model.coeff(idx, i);
            if (c == 0.0) continue;
            const std::int64_t inn = idx - i;
            const int slot = static_cast<int>(inn - inn_lo);
            v += c * sup.values[(pattern >> slot) & 1u];
        }
        return v;
    };

    // collect tuple pairs with probabilities, then cluster each side
    std::vector<std::vector<double>> lt(count), rt(count);
    std::vector<double> pr(count);
    for (std::uint64_t pat = 0; pat < count; ++pat) {
        double p = 1.0;
        for (int i = 0; i < n_inn; ++i) p *= sup.probs[(pat >> i) & 1u];
        pr[pat] = p;
        auto& l = lt[pat];
        l.resize(static_cast<std::size_t>(w));
        for (int i = 0; i < w; ++i)
            l[static_cast<std::size_t>(i)] = coord_value(s - w + 1 + i, pat);
        auto& r = rt[pat];
        r.resize(static_cast<std::size_t>(w));
        for (int i = 0; i < w; ++i)
            r[static_cast<std::size_t>(i)] = coord_value(s + k + i, pat);
    }

    auto cluster = [](const std::vector<std::vector<double>>& ts) {
        std::vector<std::size_t> order(ts.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return ts[a] < ts[b];
        });
        std::vector<std::size_t> id(ts.size());
        std::size_t next = 0;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i > 0) {
                const auto& prev = ts[order[i - 1]];
                const auto& cur = ts[order[i]];
                bool same = true;
                for (std::size_t c = 0; c < cur.size(); ++c)
                    if (std::abs(cur[c] - prev[c]) >
                        1e-12 * (1.0 + std::abs(cur[c])))
                        same = false;
                if (!same) ++next;
            }
            id[order[i]] = next;
        }
        return std::pair{id, next + 1};
    };
    auto [lid, nl] = cluster(lt);
    auto [rid, nr] = cluster(rt);
    std::vector<double> probs(nl * nr, 0.0);
    for (std::uint64_t pat = 0; pat < count; ++pat)
        probs[lid[pat] * nr + rid[pat]] += pr[pat];
    return JointBlockDistribution(nl, nr, std::move(probs));
}

// Banded SPD solve A X = B for the m-dependent covariance matrices
// (bandwidth m0). Returns false when a pivot degenerates (singular span).
class BandedCholesky {
public:
    bool factor(const MDepArrayModel& model, std::int64_t lo, std::int64_t hi,
                int band) {
        n_ = hi - lo + 1;
        band_ = band;
        lo_ = lo;
        l_.assign(static_cast<std::size_t>(n_) * (band + 1), 0.0);
        for (std::int64_t i = 0; i < n_; ++i) {
            for (std::int64_t j = std::max<std::int64_t>(0, i - band_);
                 j <= i; ++j) {
                double v = model.pair_cov(lo_ + j, lo_ + i);
                for (std::int64_t t = std::max<std::int64_t>(0, i - band_);
                     t < j; ++t)
                    v -= at(i, t) * at(j, t);
                if (j == i) {
                    if (v <= 1e-12) return false;
                    set(i, i, std::sqrt(v));
                } else {
                    set(i, j, v / at(j, j));
                }
            }
        }
        return true;
    }

    // solve (L L^T) x = rhs in place
    void solve(std::vector<double>& x) const {
        for (std::int64_t i = 0; i < n_; ++i) {
            double v = x[static_cast<std::size_t>(i)];
            for (std::int64_t j = std::max<std::int64_t>(0, i - band_);
                 j < i; ++j)
                v -= at(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = v / at(i, i);
        }
        for (std::int64_t i = n_ - 1; i >= 0; --i) {
            double v = x[static_cast<std::size_t>(i)];
            const std::int64_t jhi = std::min<std::int64_t>(n_ - 1, i + band_);
            for (std::int64_t j = i + 1; j <= jhi; ++j)
                v -= at(j, i) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] = v / at(i, i);
        }
    }

private:
    double at(std::int64_t i, std::int64_t j) const {
        return l_[static_cast<std::size_t>(i) * (band_ + 1) +
                  static_cast<std::size_t>(band_ - (i - j))];
    }
    void set(std::int64_t i, std::int64_t j, double v) {
        l_[static_cast<std::size_t>(i) * (band_ + 1) +
           static_cast<std::size_t>(band_ - (i - j))] = v;
    }
    std::int64_t n_ = 0, lo_ = 1;
    int band_ = 0;
    std::vector<double> l_;
};

// W = M Sigma^{-1} M^T where M(r, i) is the loading of the shared innovation
// eta_{J_r} on coordinate lo+i; returns false on a singular span.
bool gram_of_projections(const MDepArrayModel& model, std::int64_t lo,
                         std::int64_t hi,
                         const std::vector<std::int64_t>& shared,
                         Eigen::MatrixXd& W) {
    const int m0 = model.dep_range();
    const std::int64_t len = hi - lo + 1;
    const int d = static_cast<int>(shared.size());
    BandedCholesky chol;
    if (!chol.factor(model, lo, hi, std::min<std::int64_t>(m0, len - 1)))
        return false;
    Eigen::MatrixXd M(d, len);
    for (int r = 0; r < d; ++r)
        for (std::int64_t i = 0; i < len; ++i) {
            const std::int64_t idx = lo + i;
            const std::int64_t off = idx - shared[static_cast<std::size_t>(r)];
            M(r, i) = (off >= 0 && off <= m0)
                          ? model.coeff(idx, static_cast<int>(off))
                          : 0.0;
        }
    W.resize(d, d);
    std::vector<double> col(static_cast<std::size_t>(len));
    for (int r = 0; r < d; ++r) {
        for (std::int64_t i = 0; i < len; ++i)
            col[static_cast<std::size_t>(i)] = M(r, i);
        chol.solve(col);
        for (int r2 = 0; r2 < d; ++r2) {
            double v = 0.0;
            for (std::int64_t i = 0; i < len; ++i)
                v += M(r2, i) * col[static_cast<std::size_t>(i)];
            W(r2, r) = v;
        }
    }
    return true;
}

// Full-past rho for a Gaussian m-dependent row: for jointly Gaussian
// sigma-fields the maximal correlation is attained on the linear spans
// (Kolmogorov-Rozanov), and the canonical correlations only see the shared
// innovations, collapsing the problem to a d x d eigenproblem with
// d = m0 - k + 1.
double gaussian_mdep_rho_full(const MDepArrayModel& model, std::int64_t s,
                              std::int64_t k, bool& exact) {
    const int m0 = model.dep_range();
    std::vector<std::int64_t> shared;
    for (std::int64_t j = s + k - m0; j <= s; ++j) shared.push_back(j);
    Eigen::MatrixXd wp, wf;
    if (!gram_of_projections(model, 1, s, shared, wp) ||
        !gram_of_projections(model, s + k, model.length(), shared, wf)) {
        exact = false;  // singular span; only the trivial bound remains
        return 1.0;
    }
    const Eigen::MatrixXd prod = wp * wf;
    const auto eig = prod.eigenvalues();
    double lam = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i)
        lam = std::max(lam, eig(i).real());
    return clamp01(std::sqrt(std::max(0.0, lam)));
}

struct SplitSampling {
    std::vector<std::int64_t> values;
    bool subsampled = false;
};

SplitSampling sample_splits(std::int64_t lo, std::int64_t hi, int max_count) {
    SplitSampling out;
    if (lo > hi) return out;
    const std::int64_t count = hi - lo + 1;
    if (count <= max_count) {
        for (std::int64_t s = lo; s <= hi; ++s) out.values.push_back(s);
        return out;
    }
    out.subsampled = true;
    const double step =
        static_cast<double>(count - 1) / static_cast<double>(max_count - 1);
    std::int64_t prev = -1;
    for (int i = 0; i < max_count; ++i) {
        const std::int64_t s =
            lo + static_cast<std::int64_t>(std::llround(i * step));
        if (s != prev) out.values.push_back(std::min(s, hi));
        prev = s;
    }
    return out;
}

}  // namespace

MixingProfile coefficient_profile(const ArrayModel& model,
                                  const std::vector<std::int64_t>& lags,
                                  const ProfileOptions& opts) {
    const std::int64_t n = model.length();
    const auto* markov = dynamic_cast<const MarkovArrayModel*>(&model);
    const auto* mdep = dynamic_cast<const MDepArrayModel*>(&model);
    if (markov == nullptr && mdep == nullptr)
        throw std::invalid_argument(
            "coefficient_profile supports Markov and m-dependent models");

    MixingProfile profile;
    for (std::int64_t k : lags) {
        if (k < 1 || k >= n)
            throw std::invalid_argument("lag must satisfy 1 <= k <= n-1");
        ProfileEntry entry;
        entry.lag = k;

        if (mdep != nullptr && k > mdep->dep_range()) {
            // beyond the dependence range past and future are independent
            entry.provenance = Provenance::Exact;
            profile.entries.push_back(entry);
            continue;
        }

        std::int64_t s_lo = 1, s_hi = n - k;
        if (mdep != nullptr && opts.scope == ProfileScope::FullPast) {
            s_lo = opts.window;
            s_hi = n - k - opts.window + 1;
        }
        const auto splits = sample_splits(s_lo, s_hi, opts.max_split_samples);
        if (splits.values.empty())
            throw PreconditionError("no admissible split point for this lag");

        Provenance prov = Provenance::Exact;
        if (mdep != nullptr && mdep->law() == InnovationLaw::Gaussian) {
            // Gaussian joints have no finite atoms: rho comes from the
            // canonical-correlation reduction, phi keeps only the trivial
            // bound, and alpha <= rho/4
            for (std::int64_t s : splits.values) {
                double rho_s;
                bool exact = true;
                if (opts.scope == ProfileScope::SingleCoordinate) {
                    rho_s = std::abs(
                        mdep->pair_cov(s, s + k) /
                        std::sqrt(mdep->var_at(s) * mdep->var_at(s + k)));
                } else {
                    rho_s = gaussian_mdep_rho_full(*mdep, s, k, exact);
                }
                entry.rho = std::max(entry.rho, rho_s);
                if (!exact) prov = Provenance::UpperBound;
            }
            entry.alpha = std::min(0.25, entry.rho / 4.0);
            entry.phi = 1.0;
            prov = combine_provenance(prov, Provenance::UpperBound);
        } else {
            for (std::int64_t s : splits.values) {
                JointBlockDistribution joint =
                    markov != nullptr
                        ? markov_boundary_joint(
                              *markov, s, k,
                              opts.scope == ProfileScope::SingleCoordinate)
                        : mdep_window_joint(
                              *mdep, s, k,
                              opts.scope == ProfileScope::SingleCoordinate
                                  ? 1
                                  : opts.window);
                entry.rho = std::max(entry.rho, rho_exact(joint));
                entry.phi = std::max(entry.phi, phi_exact(joint));
                entry.alpha = std::max(entry.alpha, alpha_exact(joint));
                if (markov != nullptr &&
                    opts.scope == ProfileScope::FullPast &&
                    (!markov->observable_injective(s) ||
                     !markov->observable_injective(s + k)))
                    prov = combine_provenance(prov, Provenance::UpperBound);
            }
        }
        if (mdep != nullptr && opts.scope == ProfileScope::FullPast)
            prov = combine_provenance(prov, Provenance::LowerBound);
        if (splits.subsampled)
            prov = combine_provenance(prov, Provenance::LowerBound);
        entry.provenance = prov;
        profile.entries.push_back(entry);
    }
    std::sort(profile.entries.begin(), profile.entries.end(),
              [](const ProfileEntry& a, const ProfileEntry& b) {
                  return a.lag < b.lag;
              });
    return profile;
}

// ---------------------------------------------------------------------------
// projective coefficient
// ---------------------------------------------------------------------------

std::vector<std::int64_t> default_delta_ks(std::int64_t n, std::int64_t m) {
    std::vector<std::int64_t> ks;
    const std::int64_t k_max = n - m;
    if (k_max < 1) return ks;
    if (k_max <= 256) {
        for (std::int64_t k = 1; k <= k_max; ++k) ks.push_back(k);
        return ks;
    }
    for (std::int64_t k = 1; k <= 16; ++k) ks.push_back(k);
    double v = 16.0;
    while (v < static_cast<double>(k_max)) {
        v *= 1.5;
        ks.push_back(std::min(k_max, static_cast<std::int64_t>(v)));
    }
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

DeltaResult delta_coefficient(const ArrayModel& model, std::int64_t m,
                              const std::vector<std::int64_t>& k_values) {
    if (m < 1) throw std::invalid_argument("delta needs m >= 1");
    const std::int64_t n = model.length();
    DeltaResult out;

    if (const auto* mdep = dynamic_cast<const MDepArrayModel*>(&model)) {
        // ||E[xi_{k+s} | eta_{<=k}]||_2^2 = sum_{i>=s} c_{k+s,i}^2; the
        // innovation algebra refines sigma(xi_1..xi_k), so this is an upper
        // bound, exact when every term vanishes
        const int m0 = mdep->dep_range();
        bool any_term = false;
        for (std::int64_t k : k_values) {
            if (k < 1 || k > n - m) continue;
            KahanSum sum;
            const std::int64_t s_hi = std::min<std::int64_t>(m0, n - k);
            for (std::int64_t s = m; s <= s_hi; ++s) {
                double ss = 0.0;
                for (int i = static_cast<int>(s); i <= m0; ++i) {
                    const double c = mdep->coeff(k + s, i);
                    ss += c * c;
                }
                if (ss > 0.0) any_term = true;
                sum.add(std::sqrt(ss));
            }
            out.value = std::max(out.value, sum.value());
        }
        out.provenance = any_term ? Provenance::UpperBound : Provenance::Exact;
        return out;
    }

    const auto* markov = dynamic_cast<const MarkovArrayModel*>(&model);
    if (markov == nullptr)
        throw std::invalid_argument(
            "delta_coefficient supports Markov and m-dependent models");

    bool injective = true;
    for (std::int64_t k = 1; k <= n && injective; ++k)
        injective = markov->observable_injective(k);
    const int S = markov->states();
    for (std::int64_t k : k_values) {
        if (k < 1 || k > n - m) continue;
        // M = P_k ... P_{k+s-1}, extended one step per s
        std::vector<double> M = markov->transition_product(k, k + m);
        std::vector<double> tmp(M.size());
        const auto mu = markov->marginal(k);
        KahanSum sum;
        for (std::int64_t s = m; s <= n - k; ++s) {
            if (s > m) {
                const auto P = markov->step_matrix(k + s - 1);
                for (int r = 0; r < S; ++r)
                    for (int c = 0; c < S; ++c) {
                        double v = 0.0;
                        for (int x = 0; x < S; ++x)
                            v += M[static_cast<std::size_t>(r) * S + x] *
                                 P[static_cast<std::size_t>(x) * S + c];
                        tmp[static_cast<std::size_t>(r) * S + c] = v;
                    }
                M.swap(tmp);
            }
            double norm_sq = 0.0;
            for (int a = 0; a < S; ++a) {
                double g = 0.0;
                for (int b = 0; b < S; ++b)
                    g += M[static_cast<std::size_t>(a) * S + b] *
                         markov->observable(k + s, b);
                norm_sq += mu[static_cast<std::size_t>(a)] * g * g;
            }
            sum.add(std::sqrt(std::max(0.0, norm_sq)));
        }
        out.value = std::max(out.value, sum.value());
    }
    out.provenance =
        injective ? Provenance::Exact : Provenance::UpperBound;
    return out;
}

AlphaSumBound alpha_sum_bound(const MixingProfile& profile, std::int64_t m,
                              double q, double c_q, double a_q,
                              TailModel tail) {
    if (!(q > 2.0)) throw PreconditionError("alpha_sum_bound needs q > 2");
    const double e = 0.5 - 1.0 / q;
    std::vector<const ProfileEntry*> tail_entries;
    KahanSum sum;
    std::int64_t expect = m;
    for (const auto& entry : profile.entries) {
        if (entry.lag < m) continue;
        if (entry.lag != expect)
            throw PreconditionError(
                "profile must cover contiguous lags from m for the alpha sum");
        ++expect;
        sum.add(std::pow(entry.alpha, e));
        tail_entries.push_back(&entry);
    }
    if (tail_entries.empty())
        throw PreconditionError("profile has no entries at lags >= m");

    AlphaSumBound out;
    out.raw_sum = sum.value();
    const double last = tail_entries.back()->alpha;
    if (last > 0.0) {
        if (tail == TailModel::None)
            throw PreconditionError(
                "profile tail unresolved (alpha > 0 at the last lag); extend "
                "the profile or enable the geometric tail model");
        if (tail_entries.size() < 2)
            throw PreconditionError("geometric tail needs >= 2 entries");
        const double prev = tail_entries[tail_entries.size() - 2]->alpha;
        if (!(prev > 0.0) || !(last < prev))
            throw PreconditionError(
                "profile tail is not geometrically decaying");
        const double r_e = std::pow(last / prev, e);
        out.tail = std::pow(last, e) * r_e / (1.0 - r_e);
        out.raw_sum += out.tail;
    }
    out.bound = c_q * a_q * out.raw_sum;
    return out;
}

}  // namespace mixlab
