#pragma once

#include <cstdint>

#include "thinfilm/field.hpp"

namespace thinfilm {

enum class PerturbationKind { SecondDerivative, FirstDerivative, Cosine, Random };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::Cosine;
    double amplitude = 0.0;   // signed factor applied to the unit shape
    double wavenumber = 1.0;  // Cosine: phi(x) = cos(w x); w X/(2 pi) must be a mesh mode
    double decay = 0.036;     // Random: spectral envelope e^{-decay k}
    std::uint64_t seed = 1;   // Random
};

// Unit perturbation shape on the base mesh: mean subtracted, then normalized to
// L_inf = 1. Derivative kinds differentiate `base` spectrally; Random draws one
// uniform amplitude and one uniform phase per mode k = 1..N/2-1 (ascending k,
// amplitude before phase) from a mt19937_64 stream and sums
// a_k e^{-decay k} cos(2 pi k x / X + 2 pi phi_k).
PeriodicField perturbation_shape(const PerturbationSpec& spec, const PeriodicField& base);

// base + amplitude * shape.
PeriodicField apply_perturbation(const PerturbationSpec& spec, const PeriodicField& base);

}  // namespace thinfilm
