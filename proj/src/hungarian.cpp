#include "checkout/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace checkout {

namespace {

// Shortest augmenting path with row/column potentials, O(n^2 m) for n <= m.
// `a` is 1-indexed (n+1) x (m+1); returns assignment of each row to a column.
std::vector<std::size_t> solve_rows_le_cols(const std::vector<double>& a, std::size_t n, std::size_t m) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    auto at = [&](std::size_t i, std::size_t j) { return a[i * (m + 1) + j]; };
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = at(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
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
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace

std::vector<Match> hungarian(const AssignmentProblem& problem) {
    const std::size_t rows = problem.rows();
    const std::size_t cols = problem.cols();
    if (rows == 0 || cols == 0) return {};

    double max_cost = 0.0;
    bool any_allowed = false;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (problem.forbidden(r, c)) continue;
            any_allowed = true;
            max_cost = std::max(max_cost, std::abs(problem.cost(r, c)));
        }
    }
    if (!any_allowed) return {};
    const double sentinel = 1e6 * std::max(max_cost, 1.0);

    const bool transpose = rows > cols;
    const std::size_t n = transpose ? cols : rows;
    const std::size_t m = transpose ? rows : cols;
    std::vector<double> a((n + 1) * (m + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const std::size_t r = transpose ? j : i;
            const std::size_t c = transpose ? i : j;
            a[(i + 1) * (m + 1) + (j + 1)] = problem.forbidden(r, c) ? sentinel : problem.cost(r, c);
        }
    }
    const auto assign = solve_rows_le_cols(a, n, m);

    std::vector<Match> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = transpose ? assign[i] : i;
        const std::size_t c = transpose ? i : assign[i];
        if (!problem.forbidden(r, c)) out.emplace_back(r, c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace checkout
