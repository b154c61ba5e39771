#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "thinfilm/field.hpp"
#include "thinfilm/perturb.hpp"
#include "thinfilm/spectral.hpp"

using namespace thinfilm;

namespace {

bool mean_is_zero(const PeriodicField& f, double tol) {
    double mean = 0.0;
    for (double v : f.values) mean += v;
    return std::fabs(mean / f.size()) < tol;
}

double linf(const PeriodicField& f) {
    double a = 0.0;
    for (double v : f.values) a = std::max(a, std::fabs(v));
    return a;
}

}  // namespace

TEST_SUITE("perturbation") {

TEST_CASE("cosine shape is the requested mesh mode") {
    PeriodicField base = make_grid(4.0 * M_PI, 64, [](double x) { return 1.5 + 0.1 * std::sin(x); });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Cosine;
    spec.wavenumber = 1.0;  // 2 cycles on X = 4 pi
    PeriodicField shape = perturbation_shape(spec, base);
    for (int j = 0; j < shape.size(); ++j)
        CHECK(shape.values[static_cast<size_t>(j)] == doctest::Approx(std::cos(shape.x(j))).epsilon(1e-12));
    CHECK(mean_is_zero(shape, 1e-14));
    CHECK(linf(shape) == doctest::Approx(1.0));
}

TEST_CASE("cosine wavenumber must fit the period and the mesh") {
    PeriodicField base = make_grid(2.0 * M_PI, 32, [](double) { return 1.0; });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Cosine;
    spec.wavenumber = 1.3;  // not an integer number of cycles
    CHECK_THROWS_AS(perturbation_shape(spec, base), std::invalid_argument);
    spec.wavenumber = 16.0;  // Nyquist on N = 32
    CHECK_THROWS_AS(perturbation_shape(spec, base), std::invalid_argument);
    spec.wavenumber = -2.0;
    CHECK_THROWS_AS(perturbation_shape(spec, base), std::invalid_argument);
    spec.wavenumber = 15.0;  // last resolvable mode
    CHECK_NOTHROW(perturbation_shape(spec, base));
}

TEST_CASE("derivative shapes are normalized spectral derivatives") {
    PeriodicField base = make_grid(2.0 * M_PI, 128, [](double x) { return 1.0 + 0.2 * std::cos(x) + 0.05 * std::sin(3.0 * x); });
    for (int order : {1, 2}) {
        PerturbationSpec spec;
        spec.kind = order == 1 ? PerturbationKind::FirstDerivative : PerturbationKind::SecondDerivative;
        PeriodicField shape = perturbation_shape(spec, base);
        PeriodicField ref = spectral_derivative(base, order);
        const double scale = linf(ref);  // derivative of a trig polynomial has zero mean already
        REQUIRE(scale > 0.0);
        for (int j = 0; j < shape.size(); ++j)
            CHECK(shape.values[static_cast<size_t>(j)] ==
                  doctest::Approx(ref.values[static_cast<size_t>(j)] / scale).epsilon(1e-12));
        CHECK(mean_is_zero(shape, 1e-14));
        CHECK(linf(shape) == doctest::Approx(1.0));
    }
}

TEST_CASE("random shape reconstructs from its documented stream") {
    // mt19937_64 seeded directly; per mode k = 1..N/2-1: amplitude draw, then a phase
    // draw, each a 53-bit mantissa uniform in [0,1)
    const int N = 64;
    const double X = 3.0;
    const double decay = 0.036;
    const std::uint64_t seed = 12345;
    PeriodicField base = make_grid(X, N, [](double) { return 1.0; });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Random;
    spec.decay = decay;
    spec.seed = seed;
    PeriodicField shape = perturbation_shape(spec, base);

    std::mt19937_64 gen(seed);
    auto draw = [&gen]() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::vector<double> raw(static_cast<size_t>(N), 0.0);
    for (int k = 1; k <= N / 2 - 1; ++k) {
        const double a = draw() * std::exp(-decay * k);
        const double ph = 2.0 * M_PI * draw();
        for (int j = 0; j < N; ++j)
            raw[static_cast<size_t>(j)] += a * std::cos(2.0 * M_PI * k * (X * j / N) / X + ph);
    }
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= N;
    double amp = 0.0;
    for (double& v : raw) {
        v -= mean;
        amp = std::max(amp, std::fabs(v));
    }
    for (int j = 0; j < N; ++j)
        CHECK(shape.values[static_cast<size_t>(j)] == doctest::Approx(raw[static_cast<size_t>(j)] / amp).epsilon(1e-12));
}

TEST_CASE("random shapes are deterministic in the seed") {
    PeriodicField base = make_grid(2.0 * M_PI, 64, [](double) { return 1.0; });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Random;
    spec.seed = 7;
    PeriodicField a = perturbation_shape(spec, base);
    PeriodicField b = perturbation_shape(spec, base);
    for (int j = 0; j < a.size(); ++j)
        CHECK(a.values[static_cast<size_t>(j)] == b.values[static_cast<size_t>(j)]);
    spec.seed = 8;
    PeriodicField c = perturbation_shape(spec, base);
    CHECK(linf_distance(a, c) > 1e-3);
}

TEST_CASE("apply_perturbation adds the signed scaled shape") {
    PeriodicField base = make_grid(2.0 * M_PI, 64, [](double x) { return 1.0 + 0.1 * std::cos(x); });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::Cosine;
    spec.wavenumber = 2.0;
    spec.amplitude = -0.001;
    PeriodicField out = apply_perturbation(spec, base);
    PeriodicField shape = perturbation_shape(spec, base);
    for (int j = 0; j < out.size(); ++j)
        CHECK(out.values[static_cast<size_t>(j)] ==
              doctest::Approx(base.values[static_cast<size_t>(j)] - 0.001 * shape.values[static_cast<size_t>(j)]).epsilon(1e-14));
    // perturbing keeps the mass: the shape is mean-free
    CHECK(mass(out) == doctest::Approx(mass(base)).epsilon(1e-13));
}

TEST_CASE("a shape that vanishes on the base is rejected") {
    PeriodicField flat = make_grid(2.0 * M_PI, 64, [](double) { return 2.0; });
    PerturbationSpec spec;
    spec.kind = PerturbationKind::SecondDerivative;  // h'' of a constant is zero
    CHECK_THROWS_AS(perturbation_shape(spec, flat), std::invalid_argument);
}

}
