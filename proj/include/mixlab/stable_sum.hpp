#pragma once

#include <cmath>
#include <limits>

namespace mixlab {

// Kahan-compensated accumulator. Order-sensitive by construction, so callers
// that need worker-count-independent results must feed it in a fixed order.
class KahanSum {
public:
    KahanSum() = default;
    explicit KahanSum(double init) : sum_(init) {}

    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }

    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }

    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Accumulates log(sum_i exp(x_i)) without leaving log space. Terms like
// exp(2 G(j)) overflow double precision long before u = 1e5 for the
// stretched-exponential and iterated-log families, so every large sum over
// a_j^r goes through this.
class LogSumExp {
public:
    void add_log(double log_term) {
        if (std::isinf(log_term) && log_term < 0.0) return;
        if (count_ == 0 || log_term > max_) {
            if (count_ > 0) {
                // rescale accumulated mass to the new maximum
                const double scale = std::exp(max_ - log_term);
                const double v = inner_.value() * scale;
                inner_ = KahanSum(v);
            }
            max_ = log_term;
            inner_.add(1.0);
        } else {
            inner_.add(std::exp(log_term - max_));
        }
        ++count_;
    }

    bool empty() const { return count_ == 0; }

    // log of the accumulated sum
    double log_value() const {
        if (count_ == 0) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(inner_.value());
    }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    KahanSum inner_;
    long count_ = 0;
};

}  // namespace mixlab
