#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace checkout {

/// Dense rectangular cost matrix with an optional mask of disallowed pairs.
class AssignmentProblem {
public:
    AssignmentProblem() = default;
    AssignmentProblem(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), cost_(rows * cols, fill), forbidden_(rows * cols, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& cost(std::size_t r, std::size_t c) { return cost_[r * cols_ + c]; }
    double cost(std::size_t r, std::size_t c) const { return cost_[r * cols_ + c]; }

    bool forbidden(std::size_t r, std::size_t c) const { return forbidden_[r * cols_ + c] != 0; }
    void forbid(std::size_t r, std::size_t c) { forbidden_[r * cols_ + c] = 1; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> cost_;
    std::vector<std::uint8_t> forbidden_;
};

using Match = std::pair<std::size_t, std::size_t>;

/// Minimum-cost one-to-one assignment over allowed pairs (min(rows, cols) pairs before
/// forbidden ones are stripped). Forbidden pairs cost 1e6 x the largest allowed cost during
/// the solve. Result sorted by row.
std::vector<Match> hungarian(const AssignmentProblem& problem);

}  // namespace checkout
