#include "thinfilm/perturb.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "thinfilm/spectral.hpp"

namespace thinfilm {

namespace {

// 53-bit mantissa draw in [0,1); fixed mapping keeps streams bit-reproducible across
// platforms (distribution classes make no such promise).
double uniform53(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

void center_and_normalize(PeriodicField& f) {
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= f.size();
    double amp = 0.0;
    for (double& v : f.values) {
        v -= mean;
        amp = std::max(amp, std::fabs(v));
    }
    if (amp == 0.0) throw std::invalid_argument("perturbation_shape: shape vanishes on this base");
    for (double& v : f.values) v /= amp;
}

}  // namespace

PeriodicField perturbation_shape(const PerturbationSpec& spec, const PeriodicField& base) {
    const int n = base.size();
    if (n == 0) throw std::invalid_argument("perturbation_shape: empty base field");
    PeriodicField shape;

    switch (spec.kind) {
        case PerturbationKind::SecondDerivative:
            shape = spectral_derivative(base, 2);
            break;
        case PerturbationKind::FirstDerivative:
            shape = spectral_derivative(base, 1);
            break;
        case PerturbationKind::Cosine: {
            const double cycles = spec.wavenumber * base.X / (2.0 * M_PI);
            const double k = std::rint(cycles);
            if (!(spec.wavenumber > 0.0) || std::fabs(cycles - k) > 1e-9 * std::max(1.0, k))
                throw std::invalid_argument("perturbation_shape: cosine wavenumber must fit the period");
            if (k < 1.0 || k > n / 2 - 1)
                throw std::invalid_argument("perturbation_shape: cosine mode outside the resolvable range");
            shape.X = base.X;
            shape.values.resize(static_cast<size_t>(n));
            for (int j = 0; j < n; ++j) shape.values[static_cast<size_t>(j)] = std::cos(spec.wavenumber * base.x(j));
            break;
        }
        case PerturbationKind::Random: {
            if (!(spec.decay >= 0.0)) throw std::invalid_argument("perturbation_shape: decay must be >= 0");
            std::mt19937_64 gen(spec.seed);
            const int kmax = n / 2 - 1;
            std::vector<double> amp(static_cast<size_t>(kmax) + 1, 0.0);
            std::vector<double> phase(static_cast<size_t>(kmax) + 1, 0.0);
            for (int k = 1; k <= kmax; ++k) {
                amp[static_cast<size_t>(k)] = uniform53(gen) * std::exp(-spec.decay * k);
                phase[static_cast<size_t>(k)] = 2.0 * M_PI * uniform53(gen);
            }
            shape.X = base.X;
            shape.values.assign(static_cast<size_t>(n), 0.0);
            const double kappa0 = 2.0 * M_PI / base.X;
            for (int j = 0; j < n; ++j) {
                const double x = base.x(j);
                double s = 0.0;
                for (int k = 1; k <= kmax; ++k)
                    s += amp[static_cast<size_t>(k)] * std::cos(kappa0 * k * x + phase[static_cast<size_t>(k)]);
                shape.values[static_cast<size_t>(j)] = s;
            }
            break;
        }
    }

    center_and_normalize(shape);
    return shape;
}

PeriodicField apply_perturbation(const PerturbationSpec& spec, const PeriodicField& base) {
    if (!std::isfinite(spec.amplitude)) throw std::invalid_argument("apply_perturbation: amplitude must be finite");
    PeriodicField shape = perturbation_shape(spec, base);
    PeriodicField out = base;
    for (int j = 0; j < out.size(); ++j) out.values[static_cast<size_t>(j)] += spec.amplitude * shape.values[static_cast<size_t>(j)];
    return out;
}

}  // namespace thinfilm
