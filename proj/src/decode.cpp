#include "abst/decode.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"

namespace abst {

namespace {

constexpr double kIntTol = 1e-7;
constexpr double kPruneEps = 1e-9;
constexpr long kDfsNodeBudget = 10000;

bool fixed_r(const DecodeOptions& o, int i) {
    if (o.no_abstention) return true;
    return !o.may_abstain.empty() && !o.may_abstain[i];
}

} // namespace

PredSpaceOptions DecodeOptions::space_options(int d) const {
    PredSpaceOptions ps;
    ps.cap = brute_cap;
    ps.rule = rule;
    ps.strict_hierarchy = strict_hierarchy;
    if (no_abstention) {
        ps.may_abstain.assign(d, 0);
    } else if (!may_abstain.empty()) {
        ps.may_abstain = may_abstain;
    }
    return ps;
}

int IlpVarMeta::kron_var_of(int j, int k) const {
    const auto it = std::lower_bound(kron_pairs.begin(), kron_pairs.end(), std::make_pair(j, k));
    if (it == kron_pairs.end() || *it != std::make_pair(j, k)) return -1;
    return kron_var[static_cast<std::size_t>(it - kron_pairs.begin())];
}

IlpInstance build_ilp(const LossSpec& spec, const HexGraph& g, const Vec& psi_x,
                      const DecodeOptions& opt) {
    if (spec.d != g.d) throw DimensionError("build_ilp: loss spec and graph disagree on d");
    if (static_cast<int>(psi_x.size()) != spec.q) throw DimensionError("build_ilp: psi_x length mismatch");
    if (!g.is_rooted_tree) throw NotATree("build_ilp: hierarchy is not a rooted tree");
    if (!opt.may_abstain.empty() && static_cast<int>(opt.may_abstain.size()) != g.d)
        throw DimensionError("build_ilp: abstention mask length mismatch");
    for (double v : psi_x)
        if (!std::isfinite(v)) throw RangeError("build_ilp: non-finite psi_x");

    const int d = spec.d;
    // objective over the augmented stack: <psi_x, C psi_a> = w . stack
    const Vec t = matvec_t(spec.C, psi_x);
    Vec w(static_cast<std::size_t>(spec.stack_cols()), 0.0);
    std::set<std::pair<int, int>> referenced;
    for (int r = 0; r < spec.p; ++r) {
        for (const auto& [col, val] : spec.M[r]) {
            w[col] += val * t[r];
            if (col >= 2 * d && col < 2 * d + d * d)
                referenced.insert({(col - 2 * d) / d, (col - 2 * d) % d});
        }
    }

    IlpInstance inst;
    inst.options = opt;
    IlpVarMeta& meta = inst.meta;
    meta.d = d;
    meta.r_var.assign(d, -1);
    int next = d;
    for (int i = 0; i < d; ++i)
        if (!fixed_r(opt, i)) meta.r_var[i] = next++;

    // Interaction pairs that survive substitution: referenced by the loss, or
    // needed by the relaxed hierarchy rows; in both cases only when the y_r
    // coordinate is free.
    std::set<std::pair<int, int>> pairs;
    for (const auto& [j, k] : referenced)
        if (meta.r_var[k] >= 0) pairs.insert({j, k});
    if (!opt.strict_hierarchy) {
        for (int i = 0; i < d; ++i) {
            const int p = g.parent[i];
            if (p < 0 || meta.r_var[p] < 0) continue;
            pairs.insert({i, p});
            pairs.insert({p, p});
        }
    }
    for (const auto& pr : pairs) {
        meta.kron_pairs.push_back(pr);
        meta.kron_var.push_back(next++);
    }
    meta.nvars = next;

    inst.objective.assign(meta.nvars, 0.0);
    inst.objective_offset = w[spec.col_one()];
    for (int i = 0; i < d; ++i) inst.objective[i] = w[spec.col_h(i)];
    for (int k = 0; k < d; ++k) {
        if (meta.r_var[k] >= 0)
            inst.objective[meta.r_var[k]] = w[spec.col_r(k)];
        else
            inst.objective_offset += w[spec.col_r(k)];  // fixed at 1
    }
    for (const auto& [j, k] : referenced) {
        const double wc = w[spec.col_kron(j, k)];
        if (meta.r_var[k] < 0)
            inst.objective[j] += wc;  // y_h[j] * 1
        else
            inst.objective[meta.kron_var_of(j, k)] += wc;
    }

    // Product linearization rows for every surviving pair.
    for (std::size_t s = 0; s < meta.kron_pairs.size(); ++s) {
        const auto [j, k] = meta.kron_pairs[s];
        const int v = meta.kron_var[s];
        const int rv = meta.r_var[k];
        inst.rows.push_back({{{v, 1.0}, {j, -1.0}}, 0.0});
        inst.rows.push_back({{{v, 1.0}, {rv, -1.0}}, 0.0});
        inst.rows.push_back({{{j, 1.0}, {rv, 1.0}, {v, -1.0}}, 1.0});
    }
    // Hierarchy rows.
    for (int i = 0; i < d; ++i) {
        const int p = g.parent[i];
        if (p < 0) continue;
        if (opt.strict_hierarchy || meta.r_var[p] < 0) {
            inst.rows.push_back({{{i, 1.0}, {p, -1.0}}, 0.0});
        } else {
            inst.rows.push_back(
                {{{meta.kron_var_of(i, p), 1.0}, {meta.kron_var_of(p, p), -1.0}}, 0.0});
        }
    }
    // Abstention-coupling rows.
    for (int i = 0; i < d; ++i) {
        const int p = g.parent[i];
        if (p < 0) continue;
        const int ri = meta.r_var[i];
        const int rp = meta.r_var[p];
        if (opt.rule == AbstentionRule::Purpose) {
            if (ri >= 0 && rp >= 0) inst.rows.push_back({{{ri, -1.0}, {rp, -1.0}}, -1.0});
        } else {
            if (ri >= 0 && rp >= 0)
                inst.rows.push_back({{{ri, 1.0}, {rp, 1.0}}, 1.0});
            else if (ri >= 0)
                inst.rows.push_back({{{ri, 1.0}}, 0.0});
            else if (rp >= 0)
                inst.rows.push_back({{{rp, 1.0}}, 0.0});
            else
                inst.rows.push_back({{}, -1.0});  // 1 + 1 <= 1: infeasible by construction
        }
    }

    inst.lower.assign(meta.nvars, 0.0);
    inst.upper.assign(meta.nvars, 1.0);
    inst.start_at_upper.assign(meta.nvars, 0);
    for (int k = 0; k < d; ++k)
        if (meta.r_var[k] >= 0) inst.start_at_upper[meta.r_var[k]] = 1;
    return inst;
}

double ilp_objective(const IlpInstance& inst, const BitVec& y_h, const BitVec& y_r) {
    const IlpVarMeta& m = inst.meta;
    if (static_cast<int>(y_h.size()) != m.d || static_cast<int>(y_r.size()) != m.d)
        throw DimensionError("ilp_objective: prediction length mismatch");
    double acc = inst.objective_offset;
    for (int i = 0; i < m.d; ++i) acc += inst.objective[i] * y_h[i];
    for (int k = 0; k < m.d; ++k)
        if (m.r_var[k] >= 0) acc += inst.objective[m.r_var[k]] * y_r[k];
    for (std::size_t s = 0; s < m.kron_pairs.size(); ++s) {
        const auto [j, k] = m.kron_pairs[s];
        acc += inst.objective[m.kron_var[s]] * (y_h[j] * y_r[k]);
    }
    return acc;
}

std::pair<AbstainedPrediction, double> brute_force_decode(const LossSpec& spec, const HexGraph& g,
                                                          const Vec& psi_x,
                                                          const DecodeOptions& opt) {
    if (spec.d != g.d) throw DimensionError("brute_force_decode: loss spec and graph disagree on d");
    if (static_cast<int>(psi_x.size()) != spec.q)
        throw DimensionError("brute_force_decode: psi_x length mismatch");
    if (g.d > opt.brute_cap) throw CapExceeded("brute_force_decode: d exceeds enumeration cap");
    if (!g.is_rooted_tree) throw NotATree("brute_force_decode: hierarchy is not a rooted tree");

    const PredSpaceOptions ps = opt.space_options(g.d);
    const Vec t = matvec_t(spec.C, psi_x);
    const int d = g.d;
    const unsigned long total = 1ul << d;
    bool found = false;
    BitVec best_h, best_r;
    double best = 0.0;
    BitVec y_h(d), y_r(d);
    for (unsigned long mh = 0; mh < total; ++mh) {
        for (int i = 0; i < d; ++i) y_h[i] = static_cast<std::uint8_t>((mh >> (d - 1 - i)) & 1u);
        for (unsigned long mr = 0; mr < total; ++mr) {
            for (int i = 0; i < d; ++i) y_r[i] = static_cast<std::uint8_t>((mr >> (d - 1 - i)) & 1u);
            if (!prediction_feasible(g, y_h, y_r, ps)) continue;
            const Vec a = psi_a(spec, y_h, y_r);
            const double obj = kernels::dot(t.data(), a.data(), a.size());
            if (!found || obj < best) {
                found = true;
                best = obj;
                best_h = y_h;
                best_r = y_r;
            }
        }
    }
    if (!found) throw Infeasible("brute_force_decode: empty prediction space");
    return {make_prediction(best_h, best_r), best};
}

namespace {

LpProblem to_lp(const IlpInstance& inst, const Vec& lower, const Vec& upper) {
    LpProblem p;
    p.nvars = inst.meta.nvars;
    p.c = inst.objective;
    p.rows = inst.rows;
    p.lower = lower;
    p.upper = upper;
    p.start_at_upper = inst.start_at_upper;
    return p;
}

bool point_is_integral(const Vec& x) {
    for (double v : x)
        if (std::abs(v - std::round(v)) > kIntTol) return false;
    return true;
}

// Binary candidate satisfies every instance row (with kron entries set to
// exact products).
bool binary_point_feasible(const IlpInstance& inst, const BitVec& y_h, const BitVec& y_r) {
    const IlpVarMeta& m = inst.meta;
    Vec x(m.nvars, 0.0);
    for (int i = 0; i < m.d; ++i) x[i] = y_h[i];
    for (int k = 0; k < m.d; ++k) {
        if (m.r_var[k] >= 0)
            x[m.r_var[k]] = y_r[k];
        else if (y_r[k] != 1)
            return false;  // fixed coordinate must predict
    }
    for (std::size_t s = 0; s < m.kron_pairs.size(); ++s) {
        const auto [j, k] = m.kron_pairs[s];
        x[m.kron_var[s]] = y_h[j] * y_r[k];
    }
    // rows have integer data, so violations at binary points are >= 1
    for (const auto& row : inst.rows) {
        double lhs = 0.0;
        for (const auto& [j, v] : row.coef) lhs += v * x[j];
        if (lhs > row.rhs + 0.5) return false;
    }
    return true;
}

void reconstruct(const IlpInstance& inst, const Vec& x, BitVec* y_h, BitVec* y_r) {
    const IlpVarMeta& m = inst.meta;
    y_h->assign(m.d, 0);
    y_r->assign(m.d, 1);
    for (int i = 0; i < m.d; ++i) (*y_h)[i] = x[i] > 0.5 ? 1 : 0;
    for (int k = 0; k < m.d; ++k)
        if (m.r_var[k] >= 0) (*y_r)[k] = x[m.r_var[k]] > 0.5 ? 1 : 0;
}

bool lex_less(const BitVec& ah, const BitVec& ar, const BitVec& bh, const BitVec& br) {
    for (std::size_t i = 0; i < ah.size(); ++i)
        if (ah[i] != bh[i]) return ah[i] < bh[i];
    for (std::size_t i = 0; i < ar.size(); ++i)
        if (ar[i] != br[i]) return ar[i] < br[i];
    return false;
}

} // namespace

LpRelaxation solve_lp_relaxation(const IlpInstance& inst) {
    const LpResult r = solve_lp(to_lp(inst, inst.lower, inst.upper));
    if (r.status == LpStatus::Infeasible)
        throw Infeasible("solve_lp_relaxation: constraints are infeasible");
    if (r.status == LpStatus::Unbounded)
        throw Unbounded("solve_lp_relaxation: relaxation unbounded (internal error)");
    if (r.status != LpStatus::Optimal) throw Error("solve_lp_relaxation: iteration limit");
    LpRelaxation out;
    out.x = r.x;
    out.bound = r.objective + inst.objective_offset;
    out.integral = point_is_integral(r.x);
    return out;
}

BnbReport branch_and_bound(const IlpInstance& inst,
                           std::optional<std::pair<BitVec, BitVec>> warm_start) {
    struct Node {
        std::vector<std::pair<int, std::uint8_t>> fix;
        double parent_bound;
        long id;
    };

    BnbReport rep;
    bool has_inc = false;
    BitVec inc_h, inc_r;
    double inc_obj = 0.0;

    if (warm_start) {
        const auto& [wh, wr] = *warm_start;
        if (!binary_point_feasible(inst, wh, wr))
            throw RangeError("branch_and_bound: warm start is infeasible");
        inc_h = wh;
        inc_r = wr;
        inc_obj = ilp_objective(inst, wh, wr);
        has_inc = true;
        rep.warm_start_used = true;
    }

    std::vector<Node> open;
    open.push_back({{}, -kLpInf, 0});
    long next_id = 1;
    long popped = 0;

    Vec lo = inst.lower, hi = inst.upper;
    while (!open.empty()) {
        std::size_t pick = open.size() - 1;  // depth-first
        if (popped > kDfsNodeBudget) {       // best-bound fallback
            for (std::size_t i = 0; i < open.size(); ++i)
                if (open[i].parent_bound < open[pick].parent_bound ||
                    (open[i].parent_bound == open[pick].parent_bound && open[i].id < open[pick].id))
                    pick = i;
        }
        Node node = std::move(open[pick]);
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        ++popped;

        if (has_inc && node.parent_bound >= inc_obj - kPruneEps) continue;

        lo = inst.lower;
        hi = inst.upper;
        for (const auto& [var, val] : node.fix) lo[var] = hi[var] = static_cast<double>(val);

        const LpResult lp = solve_lp(to_lp(inst, lo, hi));
        if (lp.status == LpStatus::Infeasible) continue;
        if (lp.status != LpStatus::Optimal) throw Error("branch_and_bound: LP did not solve");
        const double bound = lp.objective + inst.objective_offset;
        if (has_inc && bound >= inc_obj - kPruneEps) continue;

        if (point_is_integral(lp.x)) {
            if (node.fix.empty()) rep.lp_integral_at_root = true;
            BitVec y_h, y_r;
            reconstruct(inst, lp.x, &y_h, &y_r);
            if (binary_point_feasible(inst, y_h, y_r)) {
                const double exact = ilp_objective(inst, y_h, y_r);
                if (!has_inc || exact < inc_obj - 1e-12 ||
                    (std::abs(exact - inc_obj) <= 1e-12 && lex_less(y_h, y_r, inc_h, inc_r))) {
                    has_inc = true;
                    inc_obj = exact;
                    inc_h = std::move(y_h);
                    inc_r = std::move(y_r);
                }
                continue;
            }
            // fall through to branching when rounding broke feasibility
        }

        // Branch on the most fractional y_r variable first (ties to the
        // lowest index): with every y_r integral the remaining rows reduce
        // to a network system, so the child relaxations come out integral.
        // Only when no y_r is fractional fall back to the remaining vars.
        int branch_var = -1;
        double best_dist = kIntTol;
        for (int k = 0; k < inst.meta.d; ++k) {
            const int j = inst.meta.r_var[k];
            if (j < 0) continue;
            const double f = lp.x[j];
            const double dist = std::min(f - std::floor(f), std::ceil(f) - f);
            if (dist > best_dist + 1e-12) {
                best_dist = dist;
                branch_var = j;
            }
        }
        if (branch_var < 0) {
            for (int j = 0; j < inst.meta.nvars; ++j) {
                const double f = lp.x[j];
                const double dist = std::min(f - std::floor(f), std::ceil(f) - f);
                if (dist > best_dist + 1e-12) {
                    best_dist = dist;
                    branch_var = j;
                }
            }
        }
        if (branch_var < 0) continue;  // numerically integral but infeasible; give up on the node

        auto fix1 = node.fix;
        fix1.emplace_back(branch_var, 1);
        open.push_back({std::move(fix1), bound, next_id++});
        auto fix0 = node.fix;
        fix0.emplace_back(branch_var, 0);
        open.push_back({std::move(fix0), bound, next_id++});
    }

    if (!has_inc) throw Infeasible("branch_and_bound: no feasible binary point");
    rep.optimum = make_prediction(inc_h, inc_r);
    rep.objective_value = inc_obj;
    rep.nodes_explored = popped;
    return rep;
}

BnbReport decode_psi(const LossSpec& spec, const HexGraph& g, const Vec& psi_x,
                     const DecodeOptions& opt) {
    const IlpInstance inst = build_ilp(spec, g, psi_x, opt);
    std::optional<std::pair<BitVec, BitVec>> warm;
    if (!opt.no_abstention && opt.rule == AbstentionRule::Purpose) {
        DecodeOptions warm_opt = opt;
        warm_opt.no_abstention = true;
        const IlpInstance warm_inst = build_ilp(spec, g, psi_x, warm_opt);
        const BnbReport warm_rep = branch_and_bound(warm_inst);
        warm = std::make_pair(warm_rep.optimum.y_h, warm_rep.optimum.y_r);
    }
    return branch_and_bound(inst, warm);
}

BnbReport decode(const TrainedSurrogate& model, const LossSpec& spec, const HexGraph& g,
                 const Vec& x, const DecodeOptions& opt) {
    if (model.psi_train.cols != spec.q)
        throw ModelError("decode: model output dimension does not match the loss spec");
    return decode_psi(spec, g, g_hat(model, x), opt);
}

} // namespace abst
