#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "kdr/core.hpp"
#include "kdr/rng.hpp"

namespace kdr {

// One realized noise draw. `raw` is the sample in the model's own
// coordinates (length M for full-dimensional noise, length 1 for
// directional noise); `embedded` is the state-space increment.
struct NoiseSample {
    std::vector<double> raw;
    std::vector<double> embedded;
};

// Sampler plus the score functions the estimators consume.
//
// Every step of the production estimators reduces to one scalar per
// step, the score term I. The convention throughout is that the
// estimators accumulate S = -sum I, so for translation kernels
// I = df . (dp/p)(y); models with generalized parameter- or
// location-dependent randomness fold everything into score_term.
class NoiseModel {
public:
    virtual ~NoiseModel() = default;

    // State dimension the embedded increments live in.
    virtual int dimension() const = 0;

    // Draw y ~ p( . | gamma, z) into `out`. Translation-kernel models
    // ignore (gamma, z).
    virtual void sample(double gamma, const State& z, RngStream& rng, NoiseSample& out) const = 0;

    // dp/p at the realized sample, in the model's raw coordinates.
    virtual void score(const NoiseSample& y, std::vector<double>& out) const = 0;

    // False for models where only the fused generalized score exists.
    virtual bool has_pointwise_score() const { return true; }

    // Score term I for the transition that left x_prev with perturbation
    // direction df and realized noise y. Default: I = df . score(y) in
    // the appropriate coordinates.
    virtual double score_term(double gamma, const State& x_prev, const TangentVector& df,
                              const NoiseSample& y) const = 0;
};

// I.i.d. N(0, sigma^2) in every state coordinate; dp/p(y) = -y / sigma^2.
class IsotropicGaussian final : public NoiseModel {
public:
    IsotropicGaussian(double sigma, int dimension);

    int dimension() const override { return dimension_; }
    double sigma() const { return sigma_; }

    void sample(double gamma, const State& z, RngStream& rng, NoiseSample& out) const override;
    void score(const NoiseSample& y, std::vector<double>& out) const override;
    double score_term(double gamma, const State& x_prev, const TangentVector& df,
                      const NoiseSample& y) const override;

    double log_density(const std::vector<double>& raw) const;

private:
    double sigma_;
    int dimension_;
};

// Scalar N(0, sigma^2) noise embedded along a fixed unit direction
// (plane foliation leaf tangent). The Gaussian score formula carries
// over unchanged on the leaf: a scalar -y_raw / sigma^2 along the
// direction.
class DirectionalGaussian final : public NoiseModel {
public:
    DirectionalGaussian(double sigma, std::vector<double> direction);

    int dimension() const override { return static_cast<int>(direction_.size()); }
    double sigma() const { return sigma_; }
    const std::vector<double>& direction() const { return direction_; }

    void sample(double gamma, const State& z, RngStream& rng, NoiseSample& out) const override;
    void score(const NoiseSample& y, std::vector<double>& out) const override;
    double score_term(double gamma, const State& x_prev, const TangentVector& df,
                      const NoiseSample& y) const override;

    double log_density(const std::vector<double>& raw) const;

private:
    double sigma_;
    std::vector<double> direction_;
};

// Fully general randomness: the density may depend on the parameter and
// on the pre-noise point z = f_gamma(x). The user supplies the fused
// generalized score dp/(p dgamma)(x_m, y_{m+1}); only that combination
// enters the estimators. Free centralization requires
// E[combined_score] = 0 under the model's own sampler.
class GeneralScore final : public NoiseModel {
public:
    using Sampler = std::function<void(double gamma, const State& z, RngStream& rng, NoiseSample& out)>;
    using CombinedScore = std::function<double(double gamma, const State& x_prev, const NoiseSample& y)>;

    GeneralScore(int dimension, Sampler sampler, CombinedScore combined_score);

    int dimension() const override { return dimension_; }

    void sample(double gamma, const State& z, RngStream& rng, NoiseSample& out) const override;
    // Not pointwise-defined for general models; throws.
    void score(const NoiseSample& y, std::vector<double>& out) const override;
    bool has_pointwise_score() const override { return false; }
    // I = -combined_score, so that S = -sum I recovers the generalized
    // formula with its positive sign.
    double score_term(double gamma, const State& x_prev, const TangentVector& df,
                      const NoiseSample& y) const override;

private:
    int dimension_;
    Sampler sampler_;
    CombinedScore combined_score_;
};

// The scalar I = df . (dp/p)(y). Hard error on dimension mismatch.
double score_contribution(const NoiseModel& model, const TangentVector& df, const NoiseSample& y);

// Convenience wrappers matching the operation-style interface.
NoiseSample sample(const NoiseModel& model, double gamma, const State& z, RngStream& rng);
std::vector<double> score(const NoiseModel& model, const NoiseSample& y);

} // namespace kdr
