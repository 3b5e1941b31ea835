#include "mixlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "mixlab/errors.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/stable_sum.hpp"

namespace mixlab {

namespace {

double draw_innovation(Substream& rng, InnovationLaw law, double p) {
    switch (law) {
        case InnovationLaw::Gaussian:
            return rng.normal();
        case InnovationLaw::Rademacher:
            return rng.rademacher();
        case InnovationLaw::Bernoulli:
            return rng.bernoulli_centered(p);
    }
    return 0.0;
}

}  // namespace

void ArrayModel::check_index(std::int64_t k) const {
    if (k < 1 || k > length())
        throw std::out_of_range("row index out of range [1, n]");
}

std::vector<std::vector<double>> ArrayModel::interval_cov_matrix(
    const std::vector<Interval>& intervals) const {
    const std::size_t m = intervals.size();
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            const Interval& A = intervals[a];
            const Interval& B = intervals[b];
            if (A.empty() || B.empty()) continue;
            KahanSum sum;
            for (std::int64_t i = A.lo; i <= A.hi; ++i)
                for (std::int64_t j = B.lo; j <= B.hi; ++j)
                    sum.add(pair_cov(std::min(i, j), std::max(i, j)));
            cov[a][b] = sum.value();
            cov[b][a] = sum.value();
        }
    }
    return cov;
}

// ---------------------------------------------------------------------------
// m-dependent moving averages
// ---------------------------------------------------------------------------

MDepArrayModel::MDepArrayModel(std::int64_t n, int m0,
                               std::vector<std::vector<double>> coeff_pattern,
                               InnovationLaw law, double bernoulli_p)
    : n_(n), m0_(m0), pattern_(std::move(coeff_pattern)), law_(law),
      bernoulli_p_(bernoulli_p) {
    if (n_ < 1) throw std::invalid_argument("model length must be >= 1");
    if (m0_ < 0) throw std::invalid_argument("dependence range must be >= 0");
    if (pattern_.empty())
        throw std::invalid_argument("coefficient pattern must be non-empty");
    for (const auto& row : pattern_) {
        if (row.size() != static_cast<std::size_t>(m0_) + 1)
            throw std::invalid_argument(
                "each coefficient row must have m0+1 entries");
        for (double c : row)
            if (!std::isfinite(c))
                throw std::invalid_argument("non-finite coefficient");
    }
    if (law_ == InnovationLaw::Bernoulli &&
        !(bernoulli_p_ > 0.0 && bernoulli_p_ < 1.0))
        throw std::invalid_argument("Bernoulli innovation needs p in (0,1)");

    double gamma = 0.0;
    for (const auto& row : pattern_) {
        double ss = 0.0;
        for (double c : row) ss += c * c;
        gamma = std::max(gamma, std::sqrt(ss));
    }
    if (gamma == 0.0)
        throw PreconditionError("degenerate model: all coordinates are 0");
    // standing normalization max_k ||xi_k||_2 <= 1
    if (gamma > 1.0) scale_ = 1.0 / (1.0 + gamma);
}

MDepArrayModel MDepArrayModel::iid(std::int64_t n, InnovationLaw law,
                                   double bernoulli_p) {
    return MDepArrayModel(n, 0, {{1.0}}, law, bernoulli_p);
}

double MDepArrayModel::coeff(std::int64_t k, int i) const {
    const auto& row = pattern_[static_cast<std::size_t>((k - 1) %
                          static_cast<std::int64_t>(pattern_.size()))];
    return row[static_cast<std::size_t>(i)] * scale_;
}

double MDepArrayModel::var_at(std::int64_t k) const {
    check_index(k);
    double ss = 0.0;
    for (int i = 0; i <= m0_; ++i) {
        const double c = coeff(k, i);
        ss += c * c;
    }
    return ss;
}

double MDepArrayModel::pair_cov(std::int64_t i, std::int64_t j) const {
    check_index(i);
    check_index(j);
    if (i > j) std::swap(i, j);
    const std::int64_t lag = j - i;
    if (lag > m0_) return 0.0;
    // shared innovations: eta_{j-b} = eta_{i-a} iff a = b - lag
    double sum = 0.0;
    for (int b = static_cast<int>(lag); b <= m0_; ++b)
        sum += coeff(i, b - static_cast<int>(lag)) * coeff(j, b);
    return sum;
}

namespace {

class MDepCrossScan final : public CrossSumScan {
public:
    MDepCrossScan(const MDepArrayModel& m, std::int64_t start)
        : model_(m), start_(start), next_(start) {}

    double advance() override {
        const std::int64_t j = next_++;
        double sum = 0.0;
        const std::int64_t lo = std::max(start_, j - model_.dep_range());
        for (std::int64_t k = lo; k < j; ++k) sum += model_.pair_cov(k, j);
        return sum;
    }

private:
    const MDepArrayModel& model_;
    std::int64_t start_;
    std::int64_t next_;
};

}  // namespace

std::unique_ptr<CrossSumScan> MDepArrayModel::cross_scan(
    std::int64_t start) const {
    check_index(start);
    return std::make_unique<MDepCrossScan>(*this, start);
}

void MDepArrayModel::sample_row(std::uint64_t seed, std::uint64_t rep,
                                std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("output span must have length n");
    Substream rng(seed, rep);
    // innovations eta_{1-m0} .. eta_n, ring buffer of the trailing m0+1
    std::vector<double> ring(static_cast<std::size_t>(m0_) + 1, 0.0);
    for (int i = 0; i < m0_; ++i)
        ring[static_cast<std::size_t>(i)] =
            draw_innovation(rng, law_, bernoulli_p_);
    // ring holds eta_{k-m0}..eta_k with eta_k at slot (k+m0) mod (m0+1)
    const int w = m0_ + 1;
    for (std::int64_t k = 1; k <= n_; ++k) {
        ring[static_cast<std::size_t>((k - 1 + m0_) % w)] =
            draw_innovation(rng, law_, bernoulli_p_);
        double v = 0.0;
        for (int i = 0; i <= m0_; ++i) {
            const double c = coeff(k, i);
            if (c != 0.0)
                v += c * ring[static_cast<std::size_t>((k - i - 1 + m0_) % w)];
        }
        out[static_cast<std::size_t>(k - 1)] = v;
    }
}

std::vector<std::vector<double>> MDepArrayModel::interval_cov_matrix(
    const std::vector<Interval>& intervals) const {
    const std::size_t m = intervals.size();
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    for (std::size_t a = 0; a < m; ++a) {
        const Interval& A = intervals[a];
        if (A.empty()) continue;
        {  // diagonal via the incremental scan
            KahanSum v;
            auto scan = cross_scan(A.lo);
            for (std::int64_t j = A.lo; j <= A.hi; ++j)
                v.add(var_at(j) + 2.0 * scan->advance());
            cov[a][a] = v.value();
        }
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            const Interval& B = intervals[b];
            if (B.empty() || B.lo <= intervals[a].lo) continue;
            // only the boundary band within the dependence range contributes
            KahanSum sum;
            const std::int64_t klo = std::max(A.lo, B.lo - m0_);
            for (std::int64_t k = klo; k <= A.hi; ++k) {
                const std::int64_t jhi = std::min(B.hi, k + m0_);
                for (std::int64_t j = B.lo; j <= jhi; ++j)
                    sum.add(pair_cov(k, j));
            }
            cov[a][b] = sum.value();
            cov[b][a] = sum.value();
        }
    }
    return cov;
}

std::string MDepArrayModel::describe() const {
    std::ostringstream os;
    os << "mdep(n=" << n_ << ", m0=" << m0_ << ", law=";
    switch (law_) {
        case InnovationLaw::Gaussian: os << "gaussian"; break;
        case InnovationLaw::Rademacher: os << "rademacher"; break;
        case InnovationLaw::Bernoulli: os << "bernoulli(" << bernoulli_p_ << ")"; break;
    }
    os << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// Markov additive functionals
// ---------------------------------------------------------------------------

MarkovArrayModel::MarkovArrayModel(
    std::int64_t n, std::vector<double> initial,
    std::vector<std::vector<double>> transition_pattern,
    std::vector<std::vector<double>> observable_pattern)
    : n_(n), initial_(std::move(initial)),
      trans_(std::move(transition_pattern)),
      obs_raw_(std::move(observable_pattern)) {
    if (n_ < 1) throw std::invalid_argument("model length must be >= 1");
    s_ = static_cast<int>(initial_.size());
    if (s_ < 1 || s_ > 8)
        throw std::invalid_argument("state count must be in [1, 8]");
    double tot = 0.0;
    for (double p : initial_) {
        if (!(p >= 0.0))
            throw PreconditionError("initial distribution has negative mass");
        tot += p;
    }
    if (std::abs(tot - 1.0) > 1e-12)
        throw PreconditionError("initial distribution does not sum to 1");
    if (trans_.empty() || obs_raw_.empty())
        throw std::invalid_argument("transition/observable patterns non-empty");
    for (std::size_t t = 0; t < trans_.size(); ++t) {
        const auto& P = trans_[t];
        if (P.size() != static_cast<std::size_t>(s_) * s_)
            throw std::invalid_argument("transition matrix has wrong shape");
        for (int r = 0; r < s_; ++r) {
            double rs = 0.0;
            for (int c = 0; c < s_; ++c) {
                const double p = P[static_cast<std::size_t>(r) * s_ + c];
                if (!(p >= 0.0))
                    throw PreconditionError(
                        "transition matrix has a negative entry");
                rs += p;
            }
            if (std::abs(rs - 1.0) > 1e-12) {
                std::ostringstream os;
                os << "transition matrix " << t << " row " << r
                   << " sums to " << rs << " (expected 1 within 1e-12)";
                throw PreconditionError(os.str());
            }
        }
    }
    for (const auto& f : obs_raw_)
        if (f.size() != static_cast<std::size_t>(s_))
            throw std::invalid_argument("observable has wrong dimension");

    // exact marginals mu_k by forward propagation
    marginals_.assign(static_cast<std::size_t>(n_) * s_, 0.0);
    std::copy(initial_.begin(), initial_.end(), marginals_.begin());
    for (std::int64_t k = 2; k <= n_; ++k) {
        const double* prev = &marginals_[static_cast<std::size_t>(k - 2) * s_];
        double* cur = &marginals_[static_cast<std::size_t>(k - 1) * s_];
        const auto P = step_matrix(k - 1);
        for (int c = 0; c < s_; ++c) {
            double v = 0.0;
            for (int r = 0; r < s_; ++r)
                v += prev[r] * P[static_cast<std::size_t>(r) * s_ + c];
            cur[c] = v;
        }
    }

    // center each f_k under mu_k, then rescale once if any ||f_k||_2 > 1
    means_.assign(static_cast<std::size_t>(n_), 0.0);
    double gamma = 0.0;
    for (std::int64_t k = 1; k <= n_; ++k) {
        const double* mu = &marginals_[static_cast<std::size_t>(k - 1) * s_];
        const auto& f =
            obs_raw_[static_cast<std::size_t>((k - 1) %
                       static_cast<std::int64_t>(obs_raw_.size()))];
        double mean = 0.0;
        for (int a = 0; a < s_; ++a) mean += mu[a] * f[static_cast<std::size_t>(a)];
        means_[static_cast<std::size_t>(k - 1)] = mean;
        double ss = 0.0;
        for (int a = 0; a < s_; ++a) {
            const double v = f[static_cast<std::size_t>(a)] - mean;
            ss += mu[a] * v * v;
        }
        gamma = std::max(gamma, std::sqrt(ss));
    }
    if (gamma == 0.0)
        throw PreconditionError("degenerate model: all coordinates are 0");
    if (gamma > 1.0) scale_ = 1.0 / (1.0 + gamma);
}

MarkovArrayModel MarkovArrayModel::two_state(std::int64_t n, double flip_prob) {
    if (!(flip_prob > 0.0 && flip_prob < 1.0))
        throw std::invalid_argument("flip probability must be in (0,1)");
    const double q = 1.0 - flip_prob;
    return MarkovArrayModel(n, {0.5, 0.5},
                            {{q, flip_prob, flip_prob, q}},
                            {{1.0, -1.0}});
}

double MarkovArrayModel::observable(std::int64_t k, int state) const {
    const auto& f =
        obs_raw_[static_cast<std::size_t>((k - 1) %
                   static_cast<std::int64_t>(obs_raw_.size()))];
    return (f[static_cast<std::size_t>(state)] -
            means_[static_cast<std::size_t>(k - 1)]) * scale_;
}

std::span<const double> MarkovArrayModel::marginal(std::int64_t k) const {
    check_index(k);
    return {&marginals_[static_cast<std::size_t>(k - 1) * s_],
            static_cast<std::size_t>(s_)};
}

std::span<const double> MarkovArrayModel::step_matrix(std::int64_t k) const {
    if (k < 1 || k >= n_)
        throw std::out_of_range("step matrix index must be in [1, n-1]");
    const auto& P = trans_[static_cast<std::size_t>((k - 1) %
                        static_cast<std::int64_t>(trans_.size()))];
    return {P.data(), P.size()};
}

std::vector<double> MarkovArrayModel::transition_product(std::int64_t s,
                                                         std::int64_t t) const {
    std::vector<double> M(static_cast<std::size_t>(s_) * s_, 0.0);
    for (int i = 0; i < s_; ++i) M[static_cast<std::size_t>(i) * s_ + i] = 1.0;
    std::vector<double> tmp(M.size());
    for (std::int64_t k = s; k < t; ++k) {
        const auto P = step_matrix(k);
        for (int r = 0; r < s_; ++r) {
            for (int c = 0; c < s_; ++c) {
                double v = 0.0;
                for (int m = 0; m < s_; ++m)
                    v += M[static_cast<std::size_t>(r) * s_ + m] *
                         P[static_cast<std::size_t>(m) * s_ + c];
                tmp[static_cast<std::size_t>(r) * s_ + c] = v;
            }
        }
        M.swap(tmp);
    }
    return M;
}

bool MarkovArrayModel::observable_injective(std::int64_t k) const {
    for (int a = 0; a < s_; ++a)
        for (int b = a + 1; b < s_; ++b)
            if (observable(k, a) == observable(k, b)) return false;
    return true;
}

double MarkovArrayModel::var_at(std::int64_t k) const {
    check_index(k);
    const double* mu = &marginals_[static_cast<std::size_t>(k - 1) * s_];
    double ss = 0.0;
    for (int a = 0; a < s_; ++a) {
        const double v = observable(k, a);
        ss += mu[a] * v * v;
    }
    return ss;
}

double MarkovArrayModel::pair_cov(std::int64_t i, std::int64_t j) const {
    check_index(i);
    check_index(j);
    if (i > j) std::swap(i, j);
    // w = P_i ... P_{j-1} f_j, then Cov = sum_a mu_i(a) f_i(a) w(a)
    std::vector<double> w(static_cast<std::size_t>(s_));
    for (int a = 0; a < s_; ++a) w[static_cast<std::size_t>(a)] = observable(j, a);
    std::vector<double> tmp(w.size());
    for (std::int64_t k = j - 1; k >= i; --k) {
        const auto P = step_matrix(k);
        for (int r = 0; r < s_; ++r) {
            double v = 0.0;
            for (int c = 0; c < s_; ++c)
                v += P[static_cast<std::size_t>(r) * s_ + c] *
                     w[static_cast<std::size_t>(c)];
            tmp[static_cast<std::size_t>(r)] = v;
        }
        w.swap(tmp);
    }
    const double* mu = &marginals_[static_cast<std::size_t>(i - 1) * s_];
    double cov = 0.0;
    for (int a = 0; a < s_; ++a) cov += mu[a] * observable(i, a) * w[static_cast<std::size_t>(a)];
    return cov;
}

namespace {

// maintains m_j(s) = E[S_{start..j} 1{Y_j = s}]
class MarkovCrossScan final : public CrossSumScan {
public:
    MarkovCrossScan(const MarkovArrayModel& m, std::int64_t start)
        : model_(m), next_(start),
          m_vec_(static_cast<std::size_t>(m.states()), 0.0),
          tmp_(m_vec_.size()) {}

    double advance() override {
        const std::int64_t j = next_++;
        const int s = model_.states();
        double cross = 0.0;
        if (j > model_.length())
            throw std::out_of_range("cross scan advanced past n");
        if (!first_) {
            const auto P = model_.step_matrix(j - 1);
            for (int c = 0; c < s; ++c) {
                double v = 0.0;
                for (int r = 0; r < s; ++r)
                    v += m_vec_[static_cast<std::size_t>(r)] *
                         P[static_cast<std::size_t>(r) * s + c];
                tmp_[static_cast<std::size_t>(c)] = v;
            }
            m_vec_.swap(tmp_);
            for (int c = 0; c < s; ++c)
                cross += m_vec_[static_cast<std::size_t>(c)] *
                         model_.observable(j, c);
        }
        first_ = false;
        const auto mu = model_.marginal(j);
        for (int c = 0; c < s; ++c)
            m_vec_[static_cast<std::size_t>(c)] +=
                model_.observable(j, c) * mu[static_cast<std::size_t>(c)];
        return cross;
    }

private:
    const MarkovArrayModel& model_;
    std::int64_t next_;
    bool first_ = true;
    std::vector<double> m_vec_;
    std::vector<double> tmp_;
};

}  // namespace

std::unique_ptr<CrossSumScan> MarkovArrayModel::cross_scan(
    std::int64_t start) const {
    check_index(start);
    return std::make_unique<MarkovCrossScan>(*this, start);
}

void MarkovArrayModel::sample_row(std::uint64_t seed, std::uint64_t rep,
                                  std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("output span must have length n");
    Substream rng(seed, rep);
    auto pick = [&](const double* dist, double u) {
        double acc = 0.0;
        for (int a = 0; a < s_ - 1; ++a) {
            acc += dist[a];
            if (u <= acc) return a;
        }
        return s_ - 1;
    };
    int y = pick(initial_.data(), rng.uniform());
    out[0] = observable(1, y);
    for (std::int64_t k = 2; k <= n_; ++k) {
        const auto P = step_matrix(k - 1);
        y = pick(&P[static_cast<std::size_t>(y) * s_], rng.uniform());
        out[static_cast<std::size_t>(k - 1)] = observable(k, y);
    }
}

std::vector<double> MarkovArrayModel::cov_with_suffix(Interval I) const {
    // build m over I, then propagate through the rest of the chain
    std::vector<double> out(static_cast<std::size_t>(n_ - I.hi), 0.0);
    std::vector<double> m(static_cast<std::size_t>(s_), 0.0), tmp(m.size());
    for (std::int64_t j = I.lo; j <= I.hi; ++j) {
        if (j > I.lo) {
            const auto P = step_matrix(j - 1);
            for (int c = 0; c < s_; ++c) {
                double v = 0.0;
                for (int r = 0; r < s_; ++r)
                    v += m[static_cast<std::size_t>(r)] *
                         P[static_cast<std::size_t>(r) * s_ + c];
                tmp[static_cast<std::size_t>(c)] = v;
            }
            m.swap(tmp);
        }
        const auto mu = marginal(j);
        for (int c = 0; c < s_; ++c)
            m[static_cast<std::size_t>(c)] +=
                observable(j, c) * mu[static_cast<std::size_t>(c)];
    }
    for (std::int64_t l = I.hi + 1; l <= n_; ++l) {
        const auto P = step_matrix(l - 1);
        for (int c = 0; c < s_; ++c) {
            double v = 0.0;
            for (int r = 0; r < s_; ++r)
                v += m[static_cast<std::size_t>(r)] *
                     P[static_cast<std::size_t>(r) * s_ + c];
            tmp[static_cast<std::size_t>(c)] = v;
        }
        m.swap(tmp);
        double cov = 0.0;
        for (int c = 0; c < s_; ++c)
            cov += m[static_cast<std::size_t>(c)] * observable(l, c);
        out[static_cast<std::size_t>(l - I.hi - 1)] = cov;
    }
    return out;
}

std::vector<std::vector<double>> MarkovArrayModel::interval_cov_matrix(
    const std::vector<Interval>& intervals) const {
    const std::size_t m = intervals.size();
    std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
    // order by left endpoint so suffix sweeps cover all later intervals
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return intervals[a].lo < intervals[b].lo;
    });
    for (std::size_t oa = 0; oa < m; ++oa) {
        const std::size_t a = order[oa];
        const Interval& A = intervals[a];
        if (A.empty()) continue;
        {
            KahanSum v;
            auto scan = cross_scan(A.lo);
            for (std::int64_t j = A.lo; j <= A.hi; ++j)
                v.add(var_at(j) + 2.0 * scan->advance());
            cov[a][a] = v.value();
        }
        if (A.hi >= n_) continue;
        const auto suffix = cov_with_suffix(A);
        for (std::size_t ob = oa + 1; ob < m; ++ob) {
            const std::size_t b = order[ob];
            const Interval& B = intervals[b];
            if (B.empty()) continue;
            if (B.lo <= A.hi)
                throw std::invalid_argument(
                    "interval_cov_matrix expects disjoint intervals");
            KahanSum sum;
            for (std::int64_t l = B.lo; l <= B.hi; ++l)
                sum.add(suffix[static_cast<std::size_t>(l - A.hi - 1)]);
            cov[a][b] = sum.value();
            cov[b][a] = sum.value();
        }
    }
    return cov;
}

std::string MarkovArrayModel::describe() const {
    std::ostringstream os;
    os << "markov(n=" << n_ << ", states=" << s_ << ")";
    return os.str();
}

std::vector<double> sample_rows(const ArrayModel& model, std::int64_t reps,
                                std::uint64_t seed, unsigned workers) {
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    const std::size_t n = static_cast<std::size_t>(model.length());
    std::vector<double> rows(static_cast<std::size_t>(reps) * n);
    parallel_for(0, static_cast<std::size_t>(reps), workers,
                 [&](std::size_t r) {
                     model.sample_row(seed, r,
                                      {&rows[r * n], n});
                 });
    return rows;
}

}  // namespace mixlab
