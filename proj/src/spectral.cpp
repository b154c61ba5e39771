#include "thinfilm/spectral.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace thinfilm {

namespace detail {

namespace {

// Twiddle table w[j] = exp(-2pi i j / N), j < N/2, each entry from std::polar so phase
// error stays at one ulp instead of accumulating through a recurrence. thread_local so
// sweep workers can transform concurrently.
const std::vector<std::complex<double>>& twiddles(int N) {
    thread_local std::map<int, std::vector<std::complex<double>>> cache;
    auto it = cache.find(N);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> w(static_cast<size_t>(N / 2));
    for (int j = 0; j < N / 2; ++j)
        w[static_cast<size_t>(j)] = std::polar(1.0, -2.0 * std::numbers::pi * j / N);
    return cache.emplace(N, std::move(w)).first->second;
}

}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const int n = static_cast<int>(a.size());
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    // bit-reversal permutation
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[static_cast<size_t>(i)], a[static_cast<size_t>(j)]);
    }
    const auto& w = twiddles(n);
    for (int len = 2; len <= n; len <<= 1) {
        const int stride = n / len;
        for (int i = 0; i < n; i += len) {
            for (int j = 0; j < len / 2; ++j) {
                std::complex<double> t = w[static_cast<size_t>(j * stride)];
                if (inverse) t = std::conj(t);
                t *= a[static_cast<size_t>(i + j + len / 2)];
                std::complex<double> u = a[static_cast<size_t>(i + j)];
                a[static_cast<size_t>(i + j)] = u + t;
                a[static_cast<size_t>(i + j + len / 2)] = u - t;
            }
        }
    }
}

std::vector<std::complex<double>> dft_coefficients(const PeriodicField& f) {
    const int N = f.size();
    std::vector<std::complex<double>> a(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) a[static_cast<size_t>(j)] = f.values[static_cast<size_t>(j)];
    fft(a, false);
    for (auto& c : a) c /= static_cast<double>(N);
    return a;
}

PeriodicField field_from_coefficients(double X, const std::vector<std::complex<double>>& coeff) {
    std::vector<std::complex<double>> a = coeff;
    fft(a, true);  // unnormalized inverse undoes the 1/N in dft_coefficients
    PeriodicField f;
    f.X = X;
    f.values.resize(a.size());
    for (size_t j = 0; j < a.size(); ++j) f.values[j] = a[j].real();
    return f;
}

}  // namespace detail

PowerSpectrum power_spectrum(const PeriodicField& f) {
    const int N = f.size();
    if (!is_power_of_two(N)) throw std::invalid_argument("power_spectrum: N must be a power of two");
    auto a = detail::dft_coefficients(f);
    PowerSpectrum s;
    s.amplitude.resize(static_cast<size_t>(N / 2));
    s.amplitude[0] = std::abs(a[0]);
    for (int k = 1; k < N / 2; ++k) s.amplitude[static_cast<size_t>(k)] = 2.0 * std::abs(a[static_cast<size_t>(k)]);
    return s;
}

bool is_resolved(const PowerSpectrum& s, double tail_fraction, double roundoff_level) {
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
        throw std::invalid_argument("is_resolved: tail_fraction must be in (0,1)");
    const int M = s.modes();
    double overall = 0.0;
    for (double v : s.amplitude) overall = std::max(overall, v);
    if (overall == 0.0) return true;
    int start = static_cast<int>(std::floor((1.0 - tail_fraction) * M));
    if (start < 1) start = 1;
    if (start >= M) start = M - 1;
    double tail = 0.0;
    for (int k = start; k < M; ++k) tail = std::max(tail, s.amplitude[static_cast<size_t>(k)]);
    return tail < roundoff_level * overall;
}

PeriodicField resample(const PeriodicField& f, int M) {
    const int N = f.size();
    if (M < 8 || !is_power_of_two(M)) throw std::invalid_argument("resample: M must be a power of two >= 8");
    if (M == N) return f;
    auto a = detail::dft_coefficients(f);
    std::vector<std::complex<double>> b(static_cast<size_t>(M), 0.0);
    const int keep = std::min(N, M) / 2 - 1;  // Nyquist dropped on both paths
    for (int k = 0; k <= keep; ++k) {
        b[static_cast<size_t>(k)] = a[static_cast<size_t>(k)];
        if (k > 0) b[static_cast<size_t>(M - k)] = a[static_cast<size_t>(N - k)];
    }
    return detail::field_from_coefficients(f.X, b);
}

PeriodicField zero_pad_double(const PeriodicField& f) { return resample(f, 2 * f.size()); }

PeriodicField spectral_derivative(const PeriodicField& f, int order) {
    if (order < 1) throw std::invalid_argument("spectral_derivative: order must be >= 1");
    const int N = f.size();
    auto a = detail::dft_coefficients(f);
    const double kappa0 = 2.0 * std::numbers::pi / f.X;
    for (int k = 0; k < N; ++k) {
        int kk = (k <= N / 2) ? k : k - N;  // signed wavenumber index
        std::complex<double> factor;
        if (kk == N / 2 && (order % 2 != 0)) {
            factor = 0.0;
        } else {
            factor = std::pow(std::complex<double>(0.0, kappa0 * kk), order);
        }
        a[static_cast<size_t>(k)] *= factor;
    }
    return detail::field_from_coefficients(f.X, a);
}

PeriodicField shift_field(const PeriodicField& f, double s) {
    const int N = f.size();
    auto a = detail::dft_coefficients(f);
    const double kappa0 = 2.0 * std::numbers::pi / f.X;
    for (int k = 0; k < N; ++k) {
        int kk = (k <= N / 2) ? k : k - N;
        if (kk == N / 2) {
            // keep the real-signal Nyquist mode real under fractional shifts
            a[static_cast<size_t>(k)] *= std::cos(kappa0 * kk * s);
        } else {
            a[static_cast<size_t>(k)] *= std::polar(1.0, -kappa0 * kk * s);
        }
    }
    return detail::field_from_coefficients(f.X, a);
}

}  // namespace thinfilm
