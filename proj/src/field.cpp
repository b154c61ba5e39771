#include "thinfilm/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thinfilm {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

double PeriodicField::min() const { return *std::min_element(values.begin(), values.end()); }

double PeriodicField::max() const { return *std::max_element(values.begin(), values.end()); }

PeriodicField make_grid(double X, int N, const std::function<double(double)>& f) {
    if (!(X > 0.0)) throw std::invalid_argument("make_grid: domain length must be positive");
    if (N < 8 || !is_power_of_two(N)) throw std::invalid_argument("make_grid: N must be a power of two >= 8");
    PeriodicField g;
    g.X = X;
    g.values.resize(static_cast<size_t>(N));
    for (int j = 0; j < N; ++j) g.values[static_cast<size_t>(j)] = f(X * j / N);
    return g;
}

double mass(const PeriodicField& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.dx();
}

double linf_distance(const PeriodicField& a, const PeriodicField& b) {
    if (a.size() != b.size() || a.X != b.X)
        throw std::invalid_argument("linf_distance: fields live on different meshes");
    double d = 0.0;
    for (int j = 0; j < a.size(); ++j)
        d = std::max(d, std::fabs(a.values[static_cast<size_t>(j)] - b.values[static_cast<size_t>(j)]));
    return d;
}

std::vector<int> local_minima_indices(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    std::vector<int> out;
    if (n < 2) return out;
    auto at = [&](int j) { return values[static_cast<size_t>((j % n + n) % n)]; };

    // Start the scan at the head of a run so every run is visited exactly once.
    int start = -1;
    for (int j = 0; j < n; ++j)
        if (values[static_cast<size_t>(j)] != at(j - 1)) {
            start = j;
            break;
        }
    if (start < 0) return out;  // constant vector

    int i = start, seen = 0;
    while (seen < n) {
        int len = 1;
        while (at(i + len) == at(i)) ++len;
        if (at(i) < at(i - 1) && at(i) < at(i + len))
            out.push_back((i + (len - 1) / 2) % n);
        seen += len;
        i = (i + len) % n;
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace thinfilm
