#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "abst/linalg.hpp"

namespace abst {

// min c.x  s.t.  rows (<= rhs), lower <= x <= upper.
// Lower bounds must be finite; upper bounds may be +inf.
struct LpRow {
    std::vector<std::pair<int, double>> coef;
    double rhs = 0.0;
};

struct LpProblem {
    int nvars = 0;
    Vec c;
    std::vector<LpRow> rows;
    Vec lower, upper;
    // optional: place a variable at its upper bound in the initial point
    // (cuts away phase 1 for instances that are feasible there)
    std::vector<std::uint8_t> start_at_upper;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpResult {
    LpStatus status = LpStatus::Optimal;
    Vec x;             // structural variables only
    double objective = 0.0;
    int iterations = 0;
    bool used_phase1 = false;
};

// Bounded-variable two-phase primal simplex with Bland's smallest-index rule;
// deterministic and dependency-free. Dense tableau, pivots via the axpy
// kernel.
LpResult solve_lp(const LpProblem& p);

constexpr double kLpInf = std::numeric_limits<double>::infinity();

} // namespace abst
