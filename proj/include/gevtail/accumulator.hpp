#pragma once

#include <cmath>
#include <cstdint>

namespace gevtail {

/// One-pass mean/variance (Welford) with pairwise merge (Chan et al.).
///
/// Merging is not bit-associative; callers that need reproducible results
/// must merge partial accumulators in a fixed order.
class RunningStats {
public:
    void push(double x) {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) {
        if (other.count_ == 0) return;
        if (count_ == 0) {
            *this = other;
            return;
        }
        const auto n_a = static_cast<double>(count_);
        const auto n_b = static_cast<double>(other.count_);
        const double total = n_a + n_b;
        const double delta = other.mean_ - mean_;
        mean_ += delta * (n_b / total);
        m2_ += other.m2_ + delta * delta * (n_a * n_b / total);
        count_ += other.count_;
    }

    std::uint64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double sum_squared_deviations() const noexcept { return m2_; }

    /// Sample variance (n-1 denominator); zero for fewer than two values.
    double variance() const noexcept {
        return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
    }
    double stddev() const noexcept { return std::sqrt(variance()); }

    /// Root mean square deviation from `target`: sqrt((mean-target)^2 + m2/n).
    double rms_about(double target) const noexcept {
        if (count_ == 0) return 0.0;
        const double bias = mean_ - target;
        return std::sqrt(bias * bias + m2_ / static_cast<double>(count_));
    }

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

} // namespace gevtail
