#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "l0lab/noise.hpp"
#include "l0lab/random.hpp"

namespace l0lab {

/// The data-generating process: dimension d, signal constant c, and the
/// per-coordinate mean mu = c / sqrt(d). Negative c is accepted; downstream
/// error formulas depend on |c| only.
struct ProblemInstance {
    ProblemInstance(std::size_t dimension, double signal, const ExpPolyNoise& noise_model)
        : d(dimension), c(signal), noise(&noise_model) {
        if (d < 1) throw std::invalid_argument("dimension must be at least 1");
        if (c == 0.0) throw std::invalid_argument("signal constant c must be nonzero");
    }

    double mu() const noexcept { return c / std::sqrt(static_cast<double>(d)); }

    std::size_t d;
    double c;
    const ExpPolyNoise* noise;
};

struct LabeledDataset {
    int label = 0;                       // -1 or +1
    std::vector<double> samples;         // length d
    std::uint64_t master_seed = 0;
    std::uint64_t trial_id = 0;
};

/// Draw one labeled dataset: samples[i] = y * mu + z_i with z_i iid from the
/// noise sampler. Pass label = nullopt to draw Y uniformly from {-1, +1}
/// first (the label consumes the stream's first draw).
inline LabeledDataset generate(const ProblemInstance& instance, std::optional<int> label,
                               RandomStream& stream, std::uint64_t master_seed = 0,
                               std::uint64_t trial_id = 0) {
    LabeledDataset out;
    out.master_seed = master_seed;
    out.trial_id = trial_id;
    out.label = label ? *label : stream.next_sign();
    const double shift = out.label * instance.mu();
    out.samples.resize(instance.d);
    for (auto& x : out.samples) x = shift + instance.noise->sample(stream);
    return out;
}

} // namespace l0lab
