#include "modalsim/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace modalsim::assignment {

// Shortest augmenting path formulation with row/column potentials, O(n^3).
// Rows of the cost matrix are the sources j, columns the targets i.
std::vector<int> max_weight_matching(const Eigen::MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    if (n == 0 || w.cols() != n) throw std::invalid_argument("max_weight_matching: weight matrix must be square");
    if (!w.allFinite()) throw std::invalid_argument("max_weight_matching: non-finite weights");
    const double wmax = w.maxCoeff();
    auto cost = [&](int j, int i) { return wmax - w(i, j); };

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int row = 1; row <= n; ++row) {
        p[0] = row;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(n, -1);
    for (int col = 1; col <= n; ++col) perm[p[col] - 1] = col - 1;
    return perm;
}

}  // namespace modalsim::assignment
