#pragma once

#include <functional>
#include <vector>

namespace thinfilm {

// Samples of an X-periodic function on the uniform mesh x_j = j*X/N, j = 0..N-1.
// Indexing is periodic: at(j) wraps modulo N, so at(N) aliases at(0).
struct PeriodicField {
    double X = 0.0;
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
    double dx() const { return X / size(); }
    double x(int j) const { return X * j / size(); }

    double at(int j) const {
        int n = size();
        j %= n;
        if (j < 0) j += n;
        return values[static_cast<size_t>(j)];
    }

    double min() const;
    double max() const;
};

// Sample f on the mesh: values[j] = f(j*X/N). Requires X > 0 and N >= 8 a power of two
// (every spectral operation in this library assumes power-of-two grids).
PeriodicField make_grid(double X, int N, const std::function<double(double)>& f);

// Rectangle-rule integral dx * sum(values); exact for trigonometric polynomials below Nyquist.
double mass(const PeriodicField& f);

// max_j |a_j - b_j| for same-size, same-domain fields.
double linf_distance(const PeriodicField& a, const PeriodicField& b);

// Indices of strict local minima under periodic wrap, plateau-aware: each maximal run
// of equal values counts once (its center index), judged against the distinct values
// on either side. A constant vector has none.
std::vector<int> local_minima_indices(const std::vector<double>& values);

bool is_power_of_two(int n);

}  // namespace thinfilm
