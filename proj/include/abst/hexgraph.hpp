#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace abst {

using BitVec = std::vector<std::uint8_t>;

// Ternary labeling entry: predicted 0, predicted 1, or abstained.
enum class Ternary : std::uint8_t { Zero = 0, One = 1, Abstain = 2 };

// Output structure: a DAG of hierarchy edges (child active => parent active)
// plus undirected exclusion edges (endpoints never both active).
struct HexGraph {
    int d = 0;
    std::vector<std::pair<int, int>> hierarchy_edges;  // (parent, child)
    std::vector<std::pair<int, int>> exclusion_edges;
    // parent[i] = -1 for roots; populated when the hierarchy is a forest
    std::vector<int> parent;
    std::vector<std::vector<int>> children;
    bool is_forest = false;
    bool is_rooted_tree = false;  // single root at index 0
};

struct Assignment {
    BitVec y;
};

struct AbstainedPrediction {
    BitVec y_h;
    BitVec y_r;  // 1 = predict, 0 = abstain
    std::vector<Ternary> composed;
};

// How the no-consecutive-abstention condition is written. `Purpose` forbids
// abstaining at both ends of a hierarchy edge; `Literal` keeps the printed
// inequality r_i + r_p <= 1 as-is, which instead forbids predicting at both.
enum class AbstentionRule { Purpose, Literal };

struct PredSpaceOptions {
    int cap = 10;
    AbstentionRule rule = AbstentionRule::Purpose;
    bool strict_hierarchy = false;       // y_h child <= parent instead of the relaxed form
    std::vector<std::uint8_t> may_abstain;  // per node; empty = all may abstain
};

HexGraph validate_graph(int d,
                        const std::vector<std::pair<int, int>>& hierarchy_edges,
                        const std::vector<std::pair<int, int>>& exclusion_edges);

bool is_legal(const HexGraph& g, const BitVec& y);

std::vector<Assignment> enumerate_state_space(const HexGraph& g, int cap = 20);

std::vector<AbstainedPrediction> enumerate_prediction_space(const HexGraph& g,
                                                            const PredSpaceOptions& opt = {});

// Feasibility of a (y_h, y_r) pair under the same options the enumerator uses.
bool prediction_feasible(const HexGraph& g, const BitVec& y_h, const BitVec& y_r,
                         const PredSpaceOptions& opt = {});

std::vector<Ternary> compose_prediction(const BitVec& y_h, const BitVec& y_r);

std::string render_composed(const std::vector<Ternary>& composed);

AbstainedPrediction make_prediction(BitVec y_h, BitVec y_r);

} // namespace abst
