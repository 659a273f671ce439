#pragma once

// Scenario sampling (red noise over base profiles) and blended forecasts.

#include <cstdint>
#include <random>
#include <vector>

#include "recopt/domain.hpp"
#include "recopt/simulator.hpp"

namespace recopt {

struct NoiseParams {
    double correlation = 0.5;
    double sigma = 0.3;
    std::uint64_t seed = 0;
    bool relative = false;  // sigma is a fraction of each flow's mean level

    void validate() const;
};

NoiseParams noise_from_config(const RecConfig& cfg, std::uint64_t seed);

using ExogenousSequence = std::vector<Exogenous>;

// Portable Gaussian stream: mt19937_64 seeded from (seed, stream) through
// splitmix64, Box-Muller transform.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream);
    double next(double sigma);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// AR(1) noise with stationary variance sigma^2.
std::vector<double> red_noise(std::uint64_t seed, std::uint64_t stream, std::size_t length, double correlation,
                              double sigma);

// Base profiles as an exogenous sequence of `length` steps.
ExogenousSequence base_sequence(const RecConfig& cfg, std::size_t length);

// Noisy scenario of horizon_steps steps.
ExogenousSequence sample_sequence(const RecConfig& cfg, const NoiseParams& params);

// Forecast for steps t .. t+count-1: exact for the first two offsets, then
// alpha^k * truth + (1 - alpha^k) * base.
ExogenousSequence blend_foresight(const ExogenousSequence& truth, const ExogenousSequence& base, double alpha,
                                  std::size_t t, std::size_t count);

}  // namespace recopt
