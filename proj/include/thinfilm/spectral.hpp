#pragma once

#include <complex>
#include <vector>

#include "thinfilm/field.hpp"

namespace thinfilm {

// One-sided amplitude spectrum of a real field: amplitude[k] for k = 0..N/2-1.
// Normalization: a constant field c has amplitude |c| at k=0 and zero elsewhere;
// cos(k x 2pi/X) has amplitude 1 at wavenumber index k. (amplitude[k] = 2|a_k| for
// k >= 1 with a_k the two-sided DFT coefficients, |a_0| at k = 0.)
struct PowerSpectrum {
    std::vector<double> amplitude;

    int modes() const { return static_cast<int>(amplitude.size()); }
};

PowerSpectrum power_spectrum(const PeriodicField& f);

// A field counts as spectrally resolved when the top tail_fraction of wavenumbers
// carries only roundoff: max amplitude over k >= floor((1-tail_fraction)*N/2) is below
// roundoff_level times the maximum amplitude overall. A zero field is resolved.
bool is_resolved(const PowerSpectrum& s, double tail_fraction = 0.1, double roundoff_level = 1e-11);

// Trigonometric interpolation onto the doubled mesh (N -> 2N): Fourier coefficients for
// |k| <= N/2-1 are preserved and zero beyond; the input's (roundoff-level, for resolved
// fields) Nyquist content is dropped.
PeriodicField zero_pad_double(const PeriodicField& f);

// General trigonometric resampling onto M points (M a power of two). Growing pads with
// zeros; shrinking truncates the spectrum (caller must know the tail is negligible).
PeriodicField resample(const PeriodicField& f, int M);

// Spectral derivative d^order/dx^order (order >= 1). The Nyquist mode is zeroed for odd
// orders (its derivative sign is ambiguous on the mesh) and kept for even orders.
PeriodicField spectral_derivative(const PeriodicField& f, int order);

// g(x) = f(x - s) by phase shift; s need not be a multiple of dx.
PeriodicField shift_field(const PeriodicField& f, double s);

namespace detail {

// In-place radix-2 complex FFT, size a power of two. forward: e^{-2pi i jk/N} sum,
// unnormalized. inverse: e^{+2pi i jk/N} sum, unnormalized (caller divides by N).
void fft(std::vector<std::complex<double>>& a, bool inverse);

// Two-sided DFT coefficients a_k = (1/N) sum_j v_j e^{-2pi i jk/N}, k = 0..N-1.
std::vector<std::complex<double>> dft_coefficients(const PeriodicField& f);

// Rebuild mesh samples from two-sided coefficients (inverse of dft_coefficients).
PeriodicField field_from_coefficients(double X, const std::vector<std::complex<double>>& coeff);

}  // namespace detail

}  // namespace thinfilm
