#include "recopt/exogenous.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "recopt/errors.hpp"

namespace recopt {

void NoiseParams::validate() const {
    if (!(correlation > 0.0 && correlation <= 1.0)) throw PreconditionError("noise: correlation must lie in (0, 1]");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw PreconditionError("noise: sigma must be >= 0");
}

NoiseParams noise_from_config(const RecConfig& cfg, std::uint64_t seed) {
    return NoiseParams{cfg.noise.correlation, cfg.noise.sigma, seed, cfg.noise.relative};
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

double GaussianStream::next(double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return sigma * spare_;
    }
    // 53-bit uniforms in (0, 1]
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return sigma * radius * std::cos(angle);
}

std::vector<double> red_noise(std::uint64_t seed, std::uint64_t stream, std::size_t length, double correlation,
                              double sigma) {
    std::vector<double> x(length, 0.0);
    if (length == 0) return x;
    GaussianStream g(seed, stream);
    const double scale = std::sqrt(std::max(0.0, 1.0 - correlation * correlation));
    x[0] = g.next(sigma);
    for (std::size_t t = 1; t < length; ++t) x[t] = correlation * x[t - 1] + scale * g.next(sigma);
    return x;
}

ExogenousSequence base_sequence(const RecConfig& cfg, std::size_t length) {
    ExogenousSequence seq(length);
    const std::size_t members = cfg.member_count();
    for (std::size_t t = 0; t < length; ++t) {
        seq[t].consumption.resize(members);
        seq[t].production.resize(members);
        for (std::size_t m = 0; m < members; ++m) {
            seq[t].consumption[m] = cfg.base_profiles[m].consumption_at(t);
            seq[t].production[m] = cfg.base_profiles[m].production_at(t);
        }
    }
    return seq;
}

ExogenousSequence sample_sequence(const RecConfig& cfg, const NoiseParams& params) {
    params.validate();
    const auto length = static_cast<std::size_t>(cfg.time_grid.horizon_steps);
    ExogenousSequence seq = base_sequence(cfg, length);
    if (params.sigma == 0.0) return seq;

    auto perturb = [&](std::size_t m, bool consumption) {
        const auto& base = consumption ? cfg.base_profiles[m].consumption : cfg.base_profiles[m].production;
        if (base.empty()) return;  // undeclared flows stay at zero
        double sigma = params.sigma;
        if (params.relative) {
            double level = 0.0;
            for (std::size_t t = 0; t < length; ++t) level += std::abs(base[t]);
            sigma *= level / static_cast<double>(length);
        }
        const auto noise = red_noise(params.seed, 2 * m + (consumption ? 0 : 1), length, params.correlation, sigma);
        for (std::size_t t = 0; t < length; ++t) {
            double& v = consumption ? seq[t].consumption[m] : seq[t].production[m];
            v = std::max(0.0, v + noise[t]);
        }
    };
    for (std::size_t m = 0; m < cfg.member_count(); ++m) {
        perturb(m, true);
        perturb(m, false);
    }
    for (auto& e : seq)
        for (std::size_t m = 0; m < cfg.member_count(); ++m) {
            const double common = std::min(e.consumption[m], e.production[m]);
            e.consumption[m] -= common;
            e.production[m] -= common;
        }
    return seq;
}

ExogenousSequence blend_foresight(const ExogenousSequence& truth, const ExogenousSequence& base, double alpha,
                                  std::size_t t, std::size_t count) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError("blend_foresight: alpha must lie in (0, 1]");
    if (t + count > truth.size() || t + count > base.size())
        throw PreconditionError("blend_foresight: forecast horizon exceeds the available data");
    ExogenousSequence out(truth.begin() + static_cast<std::ptrdiff_t>(t),
                          truth.begin() + static_cast<std::ptrdiff_t>(t + count));
    if (alpha == 1.0) return out;
    for (std::size_t k = 2; k < count; ++k) {
        const double w = std::pow(alpha, static_cast<double>(k));
        auto& e = out[k];
        const auto& b = base[t + k];
        for (std::size_t m = 0; m < e.consumption.size(); ++m) {
            e.consumption[m] = w * e.consumption[m] + (1.0 - w) * b.consumption[m];
            e.production[m] = w * e.production[m] + (1.0 - w) * b.production[m];
        }
    }
    return out;
}

}  // namespace recopt
