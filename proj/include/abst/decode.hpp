#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "abst/hexgraph.hpp"
#include "abst/linalg.hpp"
#include "abst/losses.hpp"
#include "abst/lp.hpp"
#include "abst/surrogate.hpp"

namespace abst {

struct DecodeOptions {
    bool strict_hierarchy = false;        // y_h child <= parent instead of the relaxed rows
    bool no_abstention = false;           // force y_r = 1 everywhere
    AbstentionRule rule = AbstentionRule::Purpose;
    std::vector<std::uint8_t> may_abstain;  // per node; empty = all nodes may abstain
    int brute_cap = 10;

    PredSpaceOptions space_options(int d) const;
};

// Variable layout of an instance: y_h block, then the free y_r variables,
// then one variable per surviving interaction pair (j, k) ~ y_h[j] * y_r[k].
// Pairs whose y_r coordinate is fixed are substituted away at build time.
struct IlpVarMeta {
    int d = 0;
    int nvars = 0;
    std::vector<int> r_var;                        // per node; -1 = fixed to 1
    std::vector<std::pair<int, int>> kron_pairs;   // sorted
    std::vector<int> kron_var;                     // var id per pair

    int kron_var_of(int j, int k) const;
};

struct IlpInstance {
    IlpVarMeta meta;
    Vec objective;
    double objective_offset = 0.0;
    std::vector<LpRow> rows;
    Vec lower, upper;
    std::vector<std::uint8_t> start_at_upper;
    DecodeOptions options;
};

IlpInstance build_ilp(const LossSpec& spec, const HexGraph& g, const Vec& psi_x,
                      const DecodeOptions& opt = {});

// Exact objective of a binary prediction under the instance's objective
// (interaction variables evaluated as products).
double ilp_objective(const IlpInstance& inst, const BitVec& y_h, const BitVec& y_r);

std::pair<AbstainedPrediction, double> brute_force_decode(const LossSpec& spec, const HexGraph& g,
                                                          const Vec& psi_x,
                                                          const DecodeOptions& opt = {});

struct LpRelaxation {
    Vec x;
    double bound = 0.0;     // LP optimum plus the constant objective offset
    bool integral = false;
};

// Throws Infeasible / Unbounded; used for the root relaxation.
LpRelaxation solve_lp_relaxation(const IlpInstance& inst);

struct BnbReport {
    AbstainedPrediction optimum;
    double objective_value = 0.0;
    long nodes_explored = 0;
    bool lp_integral_at_root = false;
    bool warm_start_used = false;
};

BnbReport branch_and_bound(const IlpInstance& inst,
                           std::optional<std::pair<BitVec, BitVec>> warm_start = std::nullopt);

// Full decoding step: surrogate prediction, warm start from the
// no-abstention solve, branch-and-bound on the abstention-aware instance.
BnbReport decode(const TrainedSurrogate& model, const LossSpec& spec, const HexGraph& g,
                 const Vec& x, const DecodeOptions& opt = {});

BnbReport decode_psi(const LossSpec& spec, const HexGraph& g, const Vec& psi_x,
                     const DecodeOptions& opt = {});

} // namespace abst
