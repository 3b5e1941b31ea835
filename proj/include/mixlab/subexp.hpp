#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mixlab {

// Sequence families a_j = e^{G(j)}:
//   Power        a_j = j^q                      H(u) = 1/u
//   ExpLogPow    a_j = e^{(ln j)^s},  s > 1     H(u) = (ln u)^{s-1}/u
//   Stretched    a_j = e^{c j^alpha}            H(u) = u^{alpha-1}
//   IteratedLog  a_j = e^{j / ln^{d°}(j)}       H(u) = 1/ln^{d°}(u)
//
// H is fixed to the canonical representative above; the comparability
// constants C1, C2 between G' and H are fitted outputs of check_def1, not
// inputs. Boundary parameters (q = 0, alpha = 1) are admitted by the
// factories so that the checker can exercise sequences that fail the
// divergence conditions.
enum class Family { Power, ExpLogPow, Stretched, IteratedLog };

class SubexpSpec {
public:
    static SubexpSpec power(double q);
    static SubexpSpec exp_log_pow(double s);
    static SubexpSpec stretched(double c, double alpha);
    static SubexpSpec iterated_log(int d);

    Family family() const { return family_; }
    double q() const { return q_; }
    double s() const { return s_; }
    double c() const { return c_; }
    double alpha() const { return alpha_; }
    int d() const { return d_; }

    double c0 = 10.0;    // grid floor for the definition checks
    double eps = 0.5;    // condition (3) constants
    double delta = 0.5;

    // G(x); domain_error where an iterated log is non-positive
    double g(double x) const;
    double g_prime(double x) const;
    // canonical rate function H(u)
    double rate_h(double u) const;

    double log_a(std::int64_t j) const { return g(static_cast<double>(j)); }
    double a(std::int64_t j) const;

    // smallest index where a_j is defined (IteratedLog needs positive logs)
    std::int64_t min_index() const { return min_index_; }
    // smallest index from which a_j is nondecreasing
    std::int64_t monotone_from() const { return monotone_from_; }

    std::string describe() const;

private:
    SubexpSpec() = default;
    void init_index_bounds();

    Family family_ = Family::Power;
    double q_ = 0.0, s_ = 0.0, c_ = 0.0, alpha_ = 0.0;
    int d_ = 0;
    std::int64_t min_index_ = 1;
    std::int64_t monotone_from_ = 1;
};

// Cumulative sum of a_j^2 for j = min_index..u, plain (compensated) floating
// point. Use log_sum_a_pow for families/ranges where a_j^2 overflows.
double sum_a_sq(const SubexpSpec& spec, std::int64_t u);

// log of sum_{j=min_index..u} a_j^r
double log_sum_a_pow(const SubexpSpec& spec, double r, std::int64_t u);

// Smallest u with sum_{j<=u} a_j^2 >= sigma_sq. Exact summation; the
// asymptotic closed forms are only sanity checks. Throws PreconditionError
// when u would exceed `cap`.
std::int64_t estimate_u_n(const SubexpSpec& spec, double sigma_sq,
                          std::int64_t cap = 100000000);

struct RatioLemmaResult {
    double ratio;       // sum a_j^p / (sum a_j^2)^{p/2}
    double bound_unit;  // H(u)^{p/2-1}
    double quotient() const { return ratio / bound_unit; }
};

// Both sums evaluated in log space; p > 2, u >= 2.
RatioLemmaResult ratio_lemma(const SubexpSpec& spec, double p, std::int64_t u);

struct Def1Report {
    bool cond1 = false;  // G positive and diverging along the grid
    bool cond2 = false;  // 0 < C1 <= G'/H <= C2 with H decaying
    bool cond3 = false;  // e^{G(u)} > (1-eps) e^{G((1-delta)u)}
    double fitted_c1 = 0.0;
    double fitted_c2 = 0.0;
    bool all() const { return cond1 && cond2 && cond3; }
};

// Numeric verification of the three divergence conditions on a sorted grid
// (grid min should be >= c0; points below the family's domain are skipped).
// Failures are reported, never thrown.
Def1Report check_def1(const SubexpSpec& spec, const std::vector<double>& grid);

// Geometric grid with `points` nodes on [lo, hi].
std::vector<double> geometric_grid(double lo, double hi, int points = 200);

// Default grid for check_def1: 200 geometric points from max(c0, domain)
// up to 1e4.
std::vector<double> default_def1_grid(const SubexpSpec& spec);

}  // namespace mixlab
