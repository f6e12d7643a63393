#include "kdr/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace kdr {

double StreamingMoments::stddev() const {
    return std::sqrt(variance());
}

double StreamingMoments::standard_error() const {
    return count_ > 0 ? stddev() / std::sqrt(static_cast<double>(count_)) : 0.0;
}

StreamingMoments StreamingMoments::merged(const StreamingMoments& a, const StreamingMoments& b) {
    if (a.count_ == 0) return b;
    if (b.count_ == 0) return a;
    StreamingMoments out;
    const double na = static_cast<double>(a.count_);
    const double nb = static_cast<double>(b.count_);
    const double delta = b.mean_ - a.mean_;
    out.count_ = a.count_ + b.count_;
    out.mean_ = a.mean_ + delta * nb / (na + nb);
    out.m2_ = a.m2_ + b.m2_ + delta * delta * na * nb / (na + nb);
    return out;
}

StreamingMoments merge(const StreamingMoments& a, const StreamingMoments& b) {
    return StreamingMoments::merged(a, b);
}

double batch_se(const std::vector<double>& values, std::size_t batch_length) {
    if (batch_length == 0) {
        throw std::invalid_argument("batch_se: batch length must be positive");
    }
    const std::size_t num_batches = values.size() / batch_length;
    if (num_batches < 10) {
        throw std::invalid_argument(
            "batch_se: fewer than 10 complete batches; run longer or shrink the batch length");
    }
    StreamingMoments batch_means;
    for (std::size_t b = 0; b < num_batches; ++b) {
        KahanSum s;
        for (std::size_t i = 0; i < batch_length; ++i) {
            s.add(values[b * batch_length + i]);
        }
        batch_means.add(s.value() / static_cast<double>(batch_length));
    }
    return batch_means.standard_error();
}

LagCrossAccumulator::LagCrossAccumulator(int window, std::int64_t batch_length)
    : window_(window), batch_length_(batch_length) {
    if (window_ < 1) {
        throw std::invalid_argument("LagCrossAccumulator: window must be >= 1");
    }
    if (batch_length_ < 1) {
        throw std::invalid_argument("LagCrossAccumulator: batch length must be >= 1");
    }
}

void LagCrossAccumulator::push_score(double score) {
    pending_.push_back(Pending{score, 0.0, window_});
}

void LagCrossAccumulator::add_observation(double phi) {
    for (auto& entry : pending_) {
        entry.phi_sum += phi;
        entry.hits_left -= 1;
    }
    // Entries age uniformly, so completed ones sit at the front.
    while (!pending_.empty() && pending_.front().hits_left == 0) {
        retire(pending_.front());
        pending_.pop_front();
    }
}

void LagCrossAccumulator::retire(const Pending& entry) {
    const double weighted = entry.score * entry.phi_sum;
    total_weighted_.add(weighted);
    total_score_.add(entry.score);
    if (batches_.empty() || batches_.back().count == batch_length_) {
        batches_.push_back(BatchPartial{});
    }
    BatchPartial& batch = batches_.back();
    batch.sum_weighted += weighted;
    batch.sum_score += entry.score;
    batch.count += 1;
    retired_ += 1;
}

double LagCrossAccumulator::centralized_sum(double phi_avg) const {
    if (retired_ == 0) return 0.0;
    const double n = static_cast<double>(retired_);
    return -(total_weighted_.value() -
             phi_avg * static_cast<double>(window_) * total_score_.value()) / n;
}

double LagCrossAccumulator::uncentralized_sum() const {
    if (retired_ == 0) return 0.0;
    return -total_weighted_.value() / static_cast<double>(retired_);
}

void LagCrossAccumulator::merge_from(const LagCrossAccumulator& other) {
    if (other.window_ != window_) {
        throw std::invalid_argument("LagCrossAccumulator: window mismatch in merge");
    }
    if (!other.pending_.empty()) {
        throw std::invalid_argument("LagCrossAccumulator: cannot merge with pending scores");
    }
    total_weighted_.add(other.total_weighted_.value());
    total_score_.add(other.total_score_.value());
    retired_ += other.retired_;
    for (const auto& batch : other.batches_) {
        batches_.push_back(batch);
    }
}

double autocovariance(const std::vector<double>& series, int lag) {
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    if (lag < 0 || lag >= n) {
        throw std::invalid_argument("autocovariance: lag out of range");
    }
    KahanSum total;
    for (double v : series) total.add(v);
    const double mean = total.value() / static_cast<double>(n);
    KahanSum acc;
    for (std::int64_t i = 0; i + lag < n; ++i) {
        acc.add((series[i] - mean) * (series[i + lag] - mean));
    }
    return acc.value() / static_cast<double>(n);
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("linear_slope: need two or more paired points");
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("linear_slope: degenerate abscissa");
    }
    return sxy / sxx;
}

} // namespace kdr
