#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

namespace kdr {

// Compensated (Kahan) summation for long accumulations.
class KahanSum {
public:
    void add(double value) {
        const double y = value - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

// Single-pass mean/variance accumulator (Welford), mergeable (Chan).
class StreamingMoments {
public:
    void add(double value) {
        count_ += 1;
        const double delta = value - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (value - mean_);
    }

    std::int64_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }

    // Unbiased sample variance; 0 for fewer than two samples.
    double variance() const {
        return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
    }
    double stddev() const;
    // Standard error of the mean assuming independent samples.
    double standard_error() const;

    static StreamingMoments merged(const StreamingMoments& a, const StreamingMoments& b);

private:
    std::int64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

StreamingMoments merge(const StreamingMoments& a, const StreamingMoments& b);

// Standard error of the mean of a correlated series via non-overlapping
// batch means. Throws std::invalid_argument with fewer than 10 batches.
double batch_se(const std::vector<double>& values, std::size_t batch_length);

// Lagged score/observable cross-accumulator for single-orbit estimators.
//
// A stream of steps arrives in order; step t may push a score s_t and
// always pushes an observation phi_t. A pushed score pairs with the W
// observations phi_t, ..., phi_{t+W-1} (its own step first) and then
// retires. Totals over retired scores:
//
//   A = sum_j s_j * (phi_j + ... + phi_{j+W-1}),   B = sum_j s_j,
//
// so that -(A - phi_avg * W * B) / n equals the centralized lagged double
// sum over the same data for any constant phi_avg. Retirement events are
// grouped into batches of `batch_length` scores for batch-means errors.
class LagCrossAccumulator {
public:
    struct BatchPartial {
        double sum_weighted = 0.0; // sum of s * (window phi sum)
        double sum_score = 0.0;    // sum of s
        std::int64_t count = 0;
    };

    LagCrossAccumulator(int window, std::int64_t batch_length);

    void push_score(double score);
    void add_observation(double phi);

    int window() const { return window_; }
    double total_weighted() const { return total_weighted_.value(); }
    double total_score() const { return total_score_.value(); }
    std::int64_t retired_count() const { return retired_; }
    const std::vector<BatchPartial>& batches() const { return batches_; }

    // Centralized estimate -(A - phi_avg * W * B) / n over retired scores.
    double centralized_sum(double phi_avg) const;
    // Uncentralized estimate -A / n.
    double uncentralized_sum() const;

    void merge_from(const LagCrossAccumulator& other);

private:
    struct Pending {
        double score;
        double phi_sum;
        int hits_left;
    };

    void retire(const Pending& entry);

    int window_;
    std::int64_t batch_length_;
    std::deque<Pending> pending_;
    KahanSum total_weighted_;
    KahanSum total_score_;
    std::int64_t retired_ = 0;
    std::vector<BatchPartial> batches_;
};

// Biased (1/n) autocovariance at the given lag.
double autocovariance(const std::vector<double>& series, int lag);

// Least-squares slope of y against x.
double linear_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kdr
