#include "thinfilm/pentadiag.hpp"

#include <cmath>
#include <stdexcept>

#include <lapacke.h>

#include "thinfilm/model.hpp"

namespace thinfilm {

namespace {
constexpr int kKL = 4;  // folded bandwidth: cyclic distance 2 maps to at most 4
constexpr int kKU = 4;
constexpr int kLDAB = 2 * kKL + kKU + 1;
}  // namespace

PentaCyclic::PentaCyclic(const PentaBands& bands) : bands_(bands) {
    n_ = static_cast<int>(bands[0].size());
    if (n_ < 8 || n_ % 2 != 0) throw std::invalid_argument("PentaCyclic: need even N >= 8");
    for (const auto& b : bands)
        if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("PentaCyclic: ragged bands");

    // Fold the ring: even positions walk up from 0, odd positions walk down from N-1.
    pos_.resize(n_);
    idx_.resize(n_);
    for (int i = 0; i < n_ / 2; ++i) {
        pos_[i] = 2 * i;
        pos_[n_ - 1 - i] = 2 * i + 1;
    }
    for (int i = 0; i < n_; ++i) idx_[pos_[i]] = i;

    ab_.assign(static_cast<size_t>(kLDAB) * n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        const int fi = pos_[i];
        for (int d = 0; d < 5; ++d) {
            const int j = ((i + d - 2) % n_ + n_) % n_;
            const int fj = pos_[j];
            // col-major band storage: entry (fi, fj) lives at row kl+ku+fi-fj of column fj
            ab_[static_cast<size_t>(fj) * kLDAB + (kKL + kKU + fi - fj)] += bands_[d][i];
        }
    }

    ipiv_.resize(n_);
    const lapack_int info =
        LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kKL, kKU, ab_.data(), kLDAB, ipiv_.data());
    if (info != 0) throw numeric_error("PentaCyclic: banded LU factorization failed");
}

std::vector<double> PentaCyclic::solve_factored(const std::vector<double>& rhs) const {
    std::vector<double> b(static_cast<size_t>(n_));
    for (int i = 0; i < n_; ++i) b[static_cast<size_t>(pos_[i])] = rhs[static_cast<size_t>(i)];
    const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kKL, kKU, 1, ab_.data(), kLDAB,
                                           ipiv_.data(), b.data(), n_);
    if (info != 0) throw numeric_error("PentaCyclic: banded solve failed");
    std::vector<double> x(static_cast<size_t>(n_));
    for (int p = 0; p < n_; ++p) x[static_cast<size_t>(idx_[p])] = b[static_cast<size_t>(p)];
    return x;
}

std::vector<double> PentaCyclic::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("PentaCyclic::apply: size mismatch");
    std::vector<double> y(static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (int d = 0; d < 5; ++d) {
            const int j = ((i + d - 2) % n_ + n_) % n_;
            acc += bands_[d][static_cast<size_t>(i)] * x[static_cast<size_t>(j)];
        }
        y[static_cast<size_t>(i)] = acc;
    }
    return y;
}

std::vector<double> PentaCyclic::solve(const std::vector<double>& rhs) const {
    if (static_cast<int>(rhs.size()) != n_) throw std::invalid_argument("PentaCyclic::solve: size mismatch");
    std::vector<double> x = solve_factored(rhs);

    // One refinement pass tightens the forward error; the factorization itself is
    // already backward stable.
    std::vector<double> r = apply(x);
    for (int i = 0; i < n_; ++i) r[static_cast<size_t>(i)] = rhs[static_cast<size_t>(i)] - r[static_cast<size_t>(i)];
    std::vector<double> dx = solve_factored(r);
    for (int i = 0; i < n_; ++i) x[static_cast<size_t>(i)] += dx[static_cast<size_t>(i)];

    for (double v : x)
        if (!std::isfinite(v)) throw numeric_error("PentaCyclic: non-finite solution");
    return x;
}

std::vector<double> solve_pentadiagonal_periodic(const PentaBands& bands, const std::vector<double>& rhs) {
    return PentaCyclic(bands).solve(rhs);
}

}  // namespace thinfilm
