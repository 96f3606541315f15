#include "abst/lp.hpp"

#include <cmath>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"

namespace abst {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivTol = 1e-9;
constexpr int kMaxIters = 200000;

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper };

struct Tableau {
    int m = 0;       // rows
    int width = 0;   // total columns (structural + slack + artificial)
    int n = 0;       // structural
    std::vector<Vec> t;       // m rows of width
    Vec value;                // current value per column
    Vec lower, upper;
    Vec cost;                 // current phase costs
    Vec dj;                   // reduced costs
    std::vector<VarStatus> status;
    std::vector<int> basis;   // column basic in each row

    double* row(int i) { return t[i].data(); }
};

// One simplex phase over the prepared tableau. Returns iterations used, or
// throws on iteration-limit (never expected on this problem family).
int run_simplex(Tableau& tb, int* iters_io) {
    int iters = 0;
    for (;;) {
        if (++iters + *iters_io > kMaxIters) return -1;
        // Bland: smallest-index eligible entering column.
        int enter = -1;
        int dir = 0;
        for (int j = 0; j < tb.width; ++j) {
            if (tb.status[j] == VarStatus::Basic) continue;
            if (tb.lower[j] == tb.upper[j]) continue;  // fixed
            if (tb.status[j] == VarStatus::AtLower && tb.dj[j] < -kCostTol) {
                enter = j;
                dir = +1;
                break;
            }
            if (tb.status[j] == VarStatus::AtUpper && tb.dj[j] > kCostTol) {
                enter = j;
                dir = -1;
                break;
            }
        }
        if (enter < 0) break;  // optimal for this phase

        // Ratio test: entering moves by delta in direction dir.
        double delta = tb.upper[enter] - tb.lower[enter];  // own bound flip
        int leave_row = -1;
        bool leave_to_upper = false;
        for (int i = 0; i < tb.m; ++i) {
            const double coef = dir * tb.t[i][enter];
            const int bv = tb.basis[i];
            if (coef > kPivTol) {
                const double room = tb.value[bv] - tb.lower[bv];
                const double lim = room / coef;
                if (lim < delta - 1e-12 ||
                    (leave_row >= 0 && lim < delta + 1e-12 && bv < tb.basis[leave_row])) {
                    delta = lim < 0.0 ? 0.0 : lim;
                    leave_row = i;
                    leave_to_upper = false;
                }
            } else if (coef < -kPivTol) {
                if (tb.upper[bv] == kLpInf) continue;
                const double room = tb.upper[bv] - tb.value[bv];
                const double lim = room / (-coef);
                if (lim < delta - 1e-12 ||
                    (leave_row >= 0 && lim < delta + 1e-12 && bv < tb.basis[leave_row])) {
                    delta = lim < 0.0 ? 0.0 : lim;
                    leave_row = i;
                    leave_to_upper = true;
                }
            }
        }
        if (leave_row < 0 && delta == kLpInf) return -2;  // unbounded

        // Apply the step.
        if (delta > 0.0) {
            for (int i = 0; i < tb.m; ++i) {
                const int bv = tb.basis[i];
                tb.value[bv] -= dir * delta * tb.t[i][enter];
            }
            tb.value[enter] += dir * delta;
        }
        if (leave_row < 0) {
            // bound flip, no basis change
            tb.status[enter] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
            tb.value[enter] = dir > 0 ? tb.upper[enter] : tb.lower[enter];
            continue;
        }

        const int leave = tb.basis[leave_row];
        tb.value[leave] = leave_to_upper ? tb.upper[leave] : tb.lower[leave];
        tb.status[leave] = leave_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
        tb.status[enter] = VarStatus::Basic;
        tb.basis[leave_row] = enter;

        // Pivot: normalize the leaving row, eliminate the entering column.
        double* prow = tb.row(leave_row);
        const double piv = prow[enter];
        const double inv = 1.0 / piv;
        for (int j = 0; j < tb.width; ++j) prow[j] *= inv;
        prow[enter] = 1.0;
        for (int i = 0; i < tb.m; ++i) {
            if (i == leave_row) continue;
            const double f = tb.t[i][enter];
            if (f != 0.0) {
                kernels::axpy(tb.row(i), -f, prow, static_cast<std::size_t>(tb.width));
                tb.t[i][enter] = 0.0;
            }
        }
        const double fz = tb.dj[enter];
        if (fz != 0.0) {
            kernels::axpy(tb.dj.data(), -fz, prow, static_cast<std::size_t>(tb.width));
            tb.dj[enter] = 0.0;
        }
    }
    return iters;
}

void rebuild_reduced_costs(Tableau& tb) {
    tb.dj = tb.cost;
    for (int i = 0; i < tb.m; ++i) {
        const double cb = tb.cost[tb.basis[i]];
        if (cb != 0.0) kernels::axpy(tb.dj.data(), -cb, tb.row(i), static_cast<std::size_t>(tb.width));
    }
    for (int i = 0; i < tb.m; ++i) tb.dj[tb.basis[i]] = 0.0;
}

} // namespace

LpResult solve_lp(const LpProblem& p) {
    const int n = p.nvars;
    const int m = static_cast<int>(p.rows.size());
    if (static_cast<int>(p.c.size()) != n || static_cast<int>(p.lower.size()) != n ||
        static_cast<int>(p.upper.size()) != n)
        throw DimensionError("solve_lp: inconsistent problem vectors");
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(p.lower[j])) throw RangeError("solve_lp: lower bounds must be finite");
        if (p.upper[j] < p.lower[j]) throw Infeasible("solve_lp: crossed bounds");
    }

    Tableau tb;
    tb.m = m;
    tb.n = n;

    // Initial nonbasic point.
    Vec x0(n);
    for (int j = 0; j < n; ++j) {
        const bool up = !p.start_at_upper.empty() && p.start_at_upper[j] && std::isfinite(p.upper[j]);
        x0[j] = up ? p.upper[j] : p.lower[j];
    }
    Vec resid(m);
    for (int i = 0; i < m; ++i) {
        double ax = 0.0;
        for (const auto& [j, v] : p.rows[i].coef) ax += v * x0[j];
        resid[i] = p.rows[i].rhs - ax;  // slack value if the slack is basic
    }
    std::vector<int> art_rows;
    for (int i = 0; i < m; ++i)
        if (resid[i] < -kFeasTol) art_rows.push_back(i);
    const int n_art = static_cast<int>(art_rows.size());
    tb.width = n + m + n_art;

    tb.lower.assign(tb.width, 0.0);
    tb.upper.assign(tb.width, kLpInf);
    tb.cost.assign(tb.width, 0.0);
    tb.value.assign(tb.width, 0.0);
    tb.status.assign(tb.width, VarStatus::AtLower);
    for (int j = 0; j < n; ++j) {
        tb.lower[j] = p.lower[j];
        tb.upper[j] = p.upper[j];
        tb.value[j] = x0[j];
        tb.status[j] = (x0[j] == p.upper[j] && p.lower[j] != p.upper[j]) ? VarStatus::AtUpper
                                                                         : VarStatus::AtLower;
    }

    tb.t.assign(m, Vec(tb.width, 0.0));
    tb.basis.assign(m, -1);
    std::vector<int> art_of_row(m, -1);
    for (int a = 0; a < n_art; ++a) art_of_row[art_rows[a]] = n + m + a;
    for (int i = 0; i < m; ++i) {
        const double sgn = art_of_row[i] >= 0 ? -1.0 : 1.0;
        for (const auto& [j, v] : p.rows[i].coef) tb.t[i][j] += sgn * v;
        tb.t[i][n + i] = sgn;
        if (art_of_row[i] >= 0) {
            tb.t[i][art_of_row[i]] = 1.0;
            tb.basis[i] = art_of_row[i];
            tb.status[art_of_row[i]] = VarStatus::Basic;
            tb.value[art_of_row[i]] = -resid[i];
        } else {
            tb.basis[i] = n + i;
            tb.status[n + i] = VarStatus::Basic;
            tb.value[n + i] = resid[i] < 0.0 ? 0.0 : resid[i];
        }
    }

    LpResult res;
    int total_iters = 0;

    if (n_art > 0) {
        res.used_phase1 = true;
        for (int a = 0; a < n_art; ++a) tb.cost[n + m + a] = 1.0;
        rebuild_reduced_costs(tb);
        const int it = run_simplex(tb, &total_iters);
        if (it == -1) {
            res.status = LpStatus::IterLimit;
            return res;
        }
        if (it == -2) throw Unbounded("solve_lp: phase 1 unbounded (internal error)");
        total_iters += it;
        double infeas = 0.0;
        for (int a = 0; a < n_art; ++a) infeas += tb.value[n + m + a];
        if (infeas > 1e-7) {
            res.status = LpStatus::Infeasible;
            res.iterations = total_iters;
            return res;
        }
        // Drive the remaining artificials out, or pin them at zero.
        for (int i = 0; i < m; ++i) {
            const int bv = tb.basis[i];
            if (bv < n + m) continue;
            int piv_col = -1;
            for (int j = 0; j < n + m; ++j) {
                if (tb.status[j] == VarStatus::Basic) continue;
                if (std::abs(tb.t[i][j]) > kPivTol) {
                    piv_col = j;
                    break;
                }
            }
            if (piv_col < 0) continue;  // redundant row; artificial stays basic at 0
            double* prow = tb.row(i);
            const double inv = 1.0 / prow[piv_col];
            for (int j = 0; j < tb.width; ++j) prow[j] *= inv;
            prow[piv_col] = 1.0;
            for (int r = 0; r < m; ++r) {
                if (r == i) continue;
                const double f = tb.t[r][piv_col];
                if (f != 0.0) {
                    kernels::axpy(tb.row(r), -f, prow, static_cast<std::size_t>(tb.width));
                    tb.t[r][piv_col] = 0.0;
                }
            }
            tb.status[bv] = VarStatus::AtLower;
            tb.value[bv] = 0.0;
            tb.status[piv_col] = VarStatus::Basic;
            // the entering column's value is unchanged (degenerate swap at 0)
            tb.basis[i] = piv_col;
        }
        for (int a = 0; a < n_art; ++a) {
            tb.cost[n + m + a] = 0.0;
            tb.lower[n + m + a] = tb.upper[n + m + a] = 0.0;
        }
    }

    // Phase 2.
    for (int j = 0; j < n; ++j) tb.cost[j] = p.c[j];
    for (int j = n; j < tb.width; ++j) tb.cost[j] = 0.0;
    rebuild_reduced_costs(tb);
    const int it2 = run_simplex(tb, &total_iters);
    if (it2 == -1) {
        res.status = LpStatus::IterLimit;
        return res;
    }
    if (it2 == -2) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    total_iters += it2;

    res.status = LpStatus::Optimal;
    res.iterations = total_iters;
    res.x.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double v = tb.value[j];
        // snap tiny bound violations from accumulated pivots
        if (v < tb.lower[j]) v = tb.lower[j];
        if (v > tb.upper[j]) v = tb.upper[j];
        res.x[j] = v;
    }
    res.objective = kernels::dot(p.c.data(), res.x.data(), static_cast<std::size_t>(n));
    return res;
}

} // namespace abst
