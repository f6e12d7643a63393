#include "kdr/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace kdr {

IsotropicGaussian::IsotropicGaussian(double sigma, int dimension)
    : sigma_(sigma), dimension_(dimension) {
    if (sigma_ <= 0.0) throw std::invalid_argument("IsotropicGaussian: sigma must be positive");
    if (dimension_ < 1) throw std::invalid_argument("IsotropicGaussian: dimension must be >= 1");
}

void IsotropicGaussian::sample(double, const State&, RngStream& rng, NoiseSample& out) const {
    out.raw.resize(static_cast<std::size_t>(dimension_));
    out.embedded.resize(static_cast<std::size_t>(dimension_));
    for (int i = 0; i < dimension_; ++i) {
        const double v = sigma_ * rng.normal();
        out.raw[static_cast<std::size_t>(i)] = v;
        out.embedded[static_cast<std::size_t>(i)] = v;
    }
}

void IsotropicGaussian::score(const NoiseSample& y, std::vector<double>& out) const {
    if (y.raw.size() != static_cast<std::size_t>(dimension_)) {
        throw std::invalid_argument("IsotropicGaussian::score: sample dimension mismatch");
    }
    out.resize(y.raw.size());
    const double inv_var = 1.0 / (sigma_ * sigma_);
    for (std::size_t i = 0; i < y.raw.size(); ++i) {
        out[i] = -y.raw[i] * inv_var;
    }
}

double IsotropicGaussian::score_term(double, const State&, const TangentVector& df,
                                     const NoiseSample& y) const {
    if (df.size() != y.raw.size()) {
        throw std::invalid_argument("IsotropicGaussian::score_term: dimension mismatch");
    }
    const double inv_var = 1.0 / (sigma_ * sigma_);
    double dot = 0.0;
    for (std::size_t i = 0; i < y.raw.size(); ++i) {
        dot += df[i] * (-y.raw[i] * inv_var);
    }
    return dot;
}

double IsotropicGaussian::log_density(const std::vector<double>& raw) const {
    double q = 0.0;
    for (double v : raw) q += v * v;
    const double d = static_cast<double>(dimension_);
    return -0.5 * q / (sigma_ * sigma_) -
           d * std::log(sigma_ * std::sqrt(6.283185307179586476925286766559));
}

DirectionalGaussian::DirectionalGaussian(double sigma, std::vector<double> direction)
    : sigma_(sigma), direction_(std::move(direction)) {
    if (sigma_ <= 0.0) throw std::invalid_argument("DirectionalGaussian: sigma must be positive");
    if (direction_.empty()) throw std::invalid_argument("DirectionalGaussian: empty direction");
    double norm2 = 0.0;
    for (double v : direction_) norm2 += v * v;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) {
        throw std::invalid_argument("DirectionalGaussian: direction must be a unit vector");
    }
}

void DirectionalGaussian::sample(double, const State&, RngStream& rng, NoiseSample& out) const {
    const double v = sigma_ * rng.normal();
    out.raw.assign(1, v);
    out.embedded.resize(direction_.size());
    for (std::size_t i = 0; i < direction_.size(); ++i) {
        out.embedded[i] = v * direction_[i];
    }
}

void DirectionalGaussian::score(const NoiseSample& y, std::vector<double>& out) const {
    if (y.raw.size() != 1) {
        throw std::invalid_argument("DirectionalGaussian::score: expected a scalar raw sample");
    }
    out.assign(1, -y.raw[0] / (sigma_ * sigma_));
}

double DirectionalGaussian::score_term(double, const State&, const TangentVector& df,
                                       const NoiseSample& y) const {
    if (df.size() != direction_.size()) {
        throw std::invalid_argument("DirectionalGaussian::score_term: dimension mismatch");
    }
    if (y.raw.size() != 1) {
        throw std::invalid_argument("DirectionalGaussian::score_term: expected scalar raw sample");
    }
    double along = 0.0;
    for (std::size_t i = 0; i < direction_.size(); ++i) {
        along += df[i] * direction_[i];
    }
    return along * (-y.raw[0] / (sigma_ * sigma_));
}

double DirectionalGaussian::log_density(const std::vector<double>& raw) const {
    if (raw.size() != 1) {
        throw std::invalid_argument("DirectionalGaussian::log_density: expected scalar");
    }
    return -0.5 * raw[0] * raw[0] / (sigma_ * sigma_) -
           std::log(sigma_ * std::sqrt(6.283185307179586476925286766559));
}

GeneralScore::GeneralScore(int dimension, Sampler sampler, CombinedScore combined_score)
    : dimension_(dimension), sampler_(std::move(sampler)), combined_score_(std::move(combined_score)) {
    if (dimension_ < 1) throw std::invalid_argument("GeneralScore: dimension must be >= 1");
    if (!sampler_ || !combined_score_) {
        throw std::invalid_argument("GeneralScore: sampler and combined_score are required");
    }
}

void GeneralScore::sample(double gamma, const State& z, RngStream& rng, NoiseSample& out) const {
    sampler_(gamma, z, rng, out);
}

void GeneralScore::score(const NoiseSample&, std::vector<double>&) const {
    throw std::logic_error("GeneralScore: only the fused dp/(p dgamma) is defined; use score_term");
}

double GeneralScore::score_term(double gamma, const State& x_prev, const TangentVector&,
                                const NoiseSample& y) const {
    return -combined_score_(gamma, x_prev, y);
}

double score_contribution(const NoiseModel& model, const TangentVector& df, const NoiseSample& y) {
    if (!model.has_pointwise_score()) {
        throw std::logic_error("score_contribution: model defines only a fused generalized score");
    }
    State unused;
    return model.score_term(0.0, unused, df, y);
}

NoiseSample sample(const NoiseModel& model, double gamma, const State& z, RngStream& rng) {
    NoiseSample out;
    model.sample(gamma, z, rng, out);
    return out;
}

std::vector<double> score(const NoiseModel& model, const NoiseSample& y) {
    std::vector<double> out;
    model.score(y, out);
    return out;
}

} // namespace kdr
