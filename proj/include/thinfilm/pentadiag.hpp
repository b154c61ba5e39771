#pragma once

#include <array>
#include <vector>

namespace thinfilm {

// Bands of a periodic pentadiagonal matrix: band[d][i] = A(i, (i + d - 2) mod N), so
// band[0] multiplies x_{i-2}, band[2] is the diagonal, band[4] multiplies x_{i+2}.
using PentaBands = std::array<std::vector<double>, 5>;

// Factored solver. The ring is folded by reordering unknowns (0, N-1, 1, N-2, ...),
// which maps every cyclic neighbour pair within distance 2 to an ordinary banded
// position within distance 4. The folded matrix is factored once by banded LU with
// partial pivoting, so the solve stays backward stable for arbitrarily stiff
// operators (no corner correction whose capacitance could degenerate). One
// iterative-refinement pass per solve. Requires even N >= 8.
class PentaCyclic {
public:
    explicit PentaCyclic(const PentaBands& bands);
    std::vector<double> solve(const std::vector<double>& rhs) const;

    // y = A x with the full cyclic operator (used for refinement and tests).
    std::vector<double> apply(const std::vector<double>& x) const;

private:
    int n_ = 0;
    PentaBands bands_;
    std::vector<int> pos_;     // pos_[i] = folded position of cyclic index i
    std::vector<int> idx_;     // idx_[p] = cyclic index at folded position p
    std::vector<double> ab_;   // LAPACK band storage of the folded matrix, factored
    std::vector<int> ipiv_;

    std::vector<double> solve_factored(const std::vector<double>& rhs) const;
};

// One-shot convenience wrapper.
std::vector<double> solve_pentadiagonal_periodic(const PentaBands& bands, const std::vector<double>& rhs);

}  // namespace thinfilm
