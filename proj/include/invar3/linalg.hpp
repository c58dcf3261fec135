#pragma once

#include "invar3/jet.hpp"

#include <vector>

namespace invar3 {

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kConditionWarning = 1e12;

struct JetSolution {
    std::vector<Jet2> x;
    double cond1 = 0.0;       // 1-norm condition number of the value matrix
    double determinant = 0.0; // of the value matrix
};

// Solves A x = b over truncated series. A is row-major n x n.
JetSolution solve(const std::vector<Jet2>& A, const std::vector<Jet2>& b);

} // namespace invar3
