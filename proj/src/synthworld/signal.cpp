#include "mixscape/errors.hpp"
#include "mixscape/rng.hpp"
#include "mixscape/synthworld.hpp"

#include <cmath>
#include <numbers>

namespace mixscape {

double peak(const Signal& s)
{
    double p = 0.0;
    for (double x : s.samples.data())
        p = std::max(p, std::abs(x));
    return p;
}

Signal synth_signal(const ClassSpec& spec, std::uint64_t seed, double noise_level, std::size_t length)
{
    if (!(noise_level >= 0.0) || noise_level >= 0.5)
        throw ConfigError("noise_level must lie in [0, 0.5), got " + std::to_string(noise_level));
    constexpr double two_pi = 2.0 * std::numbers::pi;

    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(spec.id)));
    Tensor samples({length});
    for (const auto& h : harmonic_pattern(spec.harmonic_pattern)) {
        // Class-specific reference phase plus a small per-signal deviation.
        const std::uint64_t phase_key = derive_seed(static_cast<std::uint64_t>(spec.id), h.multiple);
        const double phase =
            two_pi * static_cast<double>(phase_key >> 11) * 0x1.0p-53 + rng.uniform(-0.125, 0.125) * std::numbers::pi;
        const double amp = h.amplitude * rng.uniform(0.85, 1.15);
        const double freq = static_cast<double>(spec.base_frequency * h.multiple);
        for (std::size_t t = 0; t < length; ++t)
            samples[t] += amp * std::sin(two_pi * freq * static_cast<double>(t) / static_cast<double>(length) + phase);
    }
    if (noise_level > 0.0)
        for (std::size_t t = 0; t < length; ++t)
            samples[t] += noise_level * rng.normal();

    Signal s{std::move(samples), {spec.id}};
    const double p = peak(s);
    for (auto& x : s.samples.data())
        x /= p;
    return s;
}

Signal mix(const Signal& a1, const Signal& a2, double gain1, double gain2)
{
    if (a1.samples.shape() != a2.samples.shape())
        throw ShapeError("cannot mix signals of shapes " + shape_string(a1.samples.shape()) + " and " +
                         shape_string(a2.samples.shape()));
    Signal out;
    out.samples = Tensor(a1.samples.shape());
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = gain1 * a1.samples[i] + gain2 * a2.samples[i];
    const double p = peak(out);
    if (p > 1.0)
        for (auto& x : out.samples.data())
            x /= p;
    out.provenance = a1.provenance;
    out.provenance.insert(a2.provenance.begin(), a2.provenance.end());
    return out;
}

} // namespace mixscape
