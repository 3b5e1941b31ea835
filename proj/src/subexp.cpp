#include "mixlab/subexp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mixlab/errors.hpp"
#include "mixlab/stable_sum.hpp"

namespace mixlab {

namespace {

// ln applied d times; domain_error if any intermediate value is <= 0
double iterated_log(double x, int d) {
    double v = x;
    for (int i = 0; i < d; ++i) {
        if (v <= 0.0)
            throw std::domain_error("iterated log undefined: argument <= 0");
        v = std::log(v);
    }
    if (v <= 0.0)
        throw std::domain_error("iterated log non-positive");
    return v;
}

// product ln(x) * lnln(x) * ... * ln^{d}(x); appears in d/dx [x / ln^{d}(x)]
double iterated_log_product(double x, int d) {
    double v = x;
    double prod = 1.0;
    for (int i = 0; i < d; ++i) {
        v = std::log(v);
        prod *= v;
    }
    return prod;
}

}  // namespace

SubexpSpec SubexpSpec::power(double q) {
    if (q < 0.0) throw std::invalid_argument("Power family needs q >= 0");
    SubexpSpec s;
    s.family_ = Family::Power;
    s.q_ = q;
    s.init_index_bounds();
    return s;
}

SubexpSpec SubexpSpec::exp_log_pow(double s) {
    if (s <= 1.0) throw std::invalid_argument("ExpLogPow family needs s > 1");
    SubexpSpec sp;
    sp.family_ = Family::ExpLogPow;
    sp.s_ = s;
    sp.init_index_bounds();
    return sp;
}

SubexpSpec SubexpSpec::stretched(double c, double alpha) {
    if (c <= 0.0) throw std::invalid_argument("Stretched family needs c > 0");
    if (alpha <= 0.0 || alpha > 1.0)
        throw std::invalid_argument("Stretched family needs alpha in (0,1]");
    SubexpSpec s;
    s.family_ = Family::Stretched;
    s.c_ = c;
    s.alpha_ = alpha;
    s.init_index_bounds();
    return s;
}

SubexpSpec SubexpSpec::iterated_log(int d) {
    if (d < 1) throw std::invalid_argument("IteratedLog family needs d >= 1");
    SubexpSpec s;
    s.family_ = Family::IteratedLog;
    s.d_ = d;
    s.init_index_bounds();
    return s;
}

void SubexpSpec::init_index_bounds() {
    min_index_ = 1;
    monotone_from_ = 1;
    if (family_ != Family::IteratedLog) return;
    // first integer with all iterated logs positive
    std::int64_t j = 2;
    for (;; ++j) {
        try {
            (void)::mixlab::iterated_log(static_cast<double>(j), d_);
            break;
        } catch (const std::domain_error&) {
            if (j > (std::int64_t{1} << 40))
                throw std::invalid_argument(
                    "IteratedLog depth is unusable at any reachable index");
        }
    }
    min_index_ = j;
    // G'(x) = H(x) (1 - 1/prod_i ln^{i}(x)) changes sign once, where the
    // product of the iterated logs crosses 1
    std::int64_t m = j;
    while (iterated_log_product(static_cast<double>(m), d_) < 1.0) ++m;
    monotone_from_ = m;
}

double SubexpSpec::g(double x) const {
    switch (family_) {
        case Family::Power:
            return q_ * std::log(x);
        case Family::ExpLogPow:
            return std::pow(std::log(x), s_);
        case Family::Stretched:
            return c_ * std::pow(x, alpha_);
        case Family::IteratedLog:
            return x / ::mixlab::iterated_log(x, d_);
    }
    return 0.0;
}

double SubexpSpec::g_prime(double x) const {
    switch (family_) {
        case Family::Power:
            return q_ / x;
        case Family::ExpLogPow:
            return s_ * std::pow(std::log(x), s_ - 1.0) / x;
        case Family::Stretched:
            return c_ * alpha_ * std::pow(x, alpha_ - 1.0);
        case Family::IteratedLog: {
            const double ld = ::mixlab::iterated_log(x, d_);
            return (1.0 - 1.0 / iterated_log_product(x, d_)) / ld;
        }
    }
    return 0.0;
}

double SubexpSpec::rate_h(double u) const {
    switch (family_) {
        case Family::Power:
            return 1.0 / u;
        case Family::ExpLogPow:
            return std::pow(std::log(u), s_ - 1.0) / u;
        case Family::Stretched:
            return std::pow(u, alpha_ - 1.0);
        case Family::IteratedLog:
            return 1.0 / ::mixlab::iterated_log(u, d_);
    }
    return 0.0;
}

double SubexpSpec::a(std::int64_t j) const {
    if (j < min_index_)
        throw std::domain_error("a_j undefined below the family's min index");
    if (family_ == Family::Power)
        return std::pow(static_cast<double>(j), q_);
    return std::exp(log_a(j));
}

std::string SubexpSpec::describe() const {
    std::ostringstream os;
    switch (family_) {
        case Family::Power:
            os << "power(q=" << q_ << ")";
            break;
        case Family::ExpLogPow:
            os << "exp_log_pow(s=" << s_ << ")";
            break;
        case Family::Stretched:
            os << "stretched(c=" << c_ << ", alpha=" << alpha_ << ")";
            break;
        case Family::IteratedLog:
            os << "iterated_log(d=" << d_ << ")";
            break;
    }
    return os.str();
}

double sum_a_sq(const SubexpSpec& spec, std::int64_t u) {
    KahanSum sum;
    for (std::int64_t j = spec.min_index(); j <= u; ++j) {
        const double la = spec.log_a(j);
        sum.add(std::exp(2.0 * la));
    }
    return sum.value();
}

double log_sum_a_pow(const SubexpSpec& spec, double r, std::int64_t u) {
    LogSumExp acc;
    for (std::int64_t j = spec.min_index(); j <= u; ++j)
        acc.add_log(r * spec.log_a(j));
    return acc.log_value();
}

std::int64_t estimate_u_n(const SubexpSpec& spec, double sigma_sq,
                          std::int64_t cap) {
    const std::int64_t j0 = spec.min_index();
    const double a0 = spec.a(j0);
    if (!(sigma_sq > a0 * a0))
        throw PreconditionError("estimate_u_n needs sigma_sq > a_1^2");
    KahanSum sum;
    for (std::int64_t j = j0; j <= cap; ++j) {
        const double la2 = 2.0 * spec.log_a(j);
        // a_j^2 beyond double range certainly crosses any finite target
        if (la2 >= 709.0) return j;
        sum.add(std::exp(la2));
        if (sum.value() >= sigma_sq) return j;
    }
    throw PreconditionError("estimate_u_n exceeded the configured index cap");
}

RatioLemmaResult ratio_lemma(const SubexpSpec& spec, double p,
                             std::int64_t u) {
    if (!(p > 2.0)) throw PreconditionError("ratio_lemma needs p > 2");
    if (u < 2) throw PreconditionError("ratio_lemma needs u >= 2");
    const double lp = log_sum_a_pow(spec, p, u);
    const double l2 = log_sum_a_pow(spec, 2.0, u);
    const double log_ratio = lp - 0.5 * p * l2;
    RatioLemmaResult r;
    r.ratio = std::exp(log_ratio);
    r.bound_unit =
        std::pow(spec.rate_h(static_cast<double>(u)), 0.5 * p - 1.0);
    return r;
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("geometric_grid needs 0 < lo < hi, points >= 2");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double step = std::log(hi / lo) / (points - 1);
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    g.back() = hi;
    return g;
}

std::vector<double> default_def1_grid(const SubexpSpec& spec) {
    const double lo =
        std::max(spec.c0, static_cast<double>(spec.monotone_from()) + 1.0);
    return geometric_grid(lo, 1e4, 200);
}

Def1Report check_def1(const SubexpSpec& spec, const std::vector<double>& grid) {
    Def1Report rep;
    std::vector<double> xs;
    xs.reserve(grid.size());
    const double dom = static_cast<double>(spec.min_index());
    for (double x : grid)
        if (x > dom) xs.push_back(x);
    if (xs.size() < 8) return rep;  // too little to say anything
    std::sort(xs.begin(), xs.end());

    // (1): positivity plus a divergence trend: nondecreasing over the upper
    // half of the grid and strictly larger at the top than at the bottom.
    std::vector<double> gv(xs.size());
    bool positive = true;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        gv[i] = spec.g(xs[i]);
        if (!(gv[i] > 0.0)) positive = false;
    }
    bool tail_monotone = true;
    for (std::size_t i = xs.size() / 2; i + 1 < xs.size(); ++i)
        if (gv[i + 1] < gv[i]) tail_monotone = false;
    rep.cond1 = positive && tail_monotone && gv.back() > gv.front();

    // Conditions (2) and (3) are asymptotic ("for every u >= c", "for all u
    // large enough"): the fit starts at the family's own monotone point,
    // below which iterated-log families still sit in their pre-asymptotic
    // dip (G' < 0 there).
    const double thresh =
        std::max(dom, static_cast<double>(spec.monotone_from()) - 0.5);

    // (2): fit C1 = min G'/H, C2 = max G'/H and require a genuine decay of H
    double c1 = std::numeric_limits<double>::infinity();
    double c2 = 0.0;
    double h_front = 0.0, h_back = 0.0;
    std::size_t fitted = 0;
    for (double x : xs) {
        if (x < thresh) continue;
        const double ratio = spec.g_prime(x) / spec.rate_h(x);
        c1 = std::min(c1, ratio);
        c2 = std::max(c2, ratio);
        if (fitted == 0) h_front = spec.rate_h(x);
        h_back = spec.rate_h(x);
        ++fitted;
    }
    rep.fitted_c1 = fitted > 0 ? c1 : 0.0;
    rep.fitted_c2 = c2;
    rep.cond2 = fitted >= 8 && c1 > 0.0 && std::isfinite(c2) &&
                h_back <= 0.9 * h_front;

    // (3): G(u) - G((1-delta)u) > ln(1-eps) wherever the shrunk point stays
    // above the threshold
    bool ok3 = true;
    const double bound = std::log1p(-spec.eps);
    for (double u : xs) {
        const double v = u * (1.0 - spec.delta);
        if (v <= thresh) continue;
        if (!(spec.g(u) - spec.g(v) > bound)) ok3 = false;
    }
    rep.cond3 = ok3;
    return rep;
}

}  // namespace mixlab
