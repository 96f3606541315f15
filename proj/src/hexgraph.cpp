#include "abst/hexgraph.hpp"

#include <algorithm>
#include <queue>

#include "abst/errors.hpp"

namespace abst {

HexGraph validate_graph(int d,
                        const std::vector<std::pair<int, int>>& hierarchy_edges,
                        const std::vector<std::pair<int, int>>& exclusion_edges) {
    if (d <= 0) throw IndexError("validate_graph: d must be positive");
    auto check = [d](int v, const char* what) {
        if (v < 0 || v >= d) throw IndexError(std::string("validate_graph: ") + what + " index out of range");
    };
    for (const auto& [p, c] : hierarchy_edges) {
        check(p, "hierarchy");
        check(c, "hierarchy");
    }
    for (const auto& [i, j] : exclusion_edges) {
        check(i, "exclusion");
        check(j, "exclusion");
        if (i == j) throw SelfLoopError("validate_graph: exclusion self loop");
    }

    HexGraph g;
    g.d = d;
    g.hierarchy_edges = hierarchy_edges;
    g.exclusion_edges = exclusion_edges;

    // Kahn's algorithm on the hierarchy subgraph.
    std::vector<int> indeg(d, 0);
    std::vector<std::vector<int>> adj(d);
    for (const auto& [p, c] : hierarchy_edges) {
        adj[p].push_back(c);
        ++indeg[c];
    }
    std::queue<int> q;
    for (int i = 0; i < d; ++i)
        if (indeg[i] == 0) q.push(i);
    int seen = 0;
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        ++seen;
        for (int c : adj[v])
            if (--indeg[c] == 0) q.push(c);
    }
    if (seen != d) throw CycleError("validate_graph: hierarchy has a directed cycle");

    // Parent map; defined when every node has at most one distinct parent.
    g.parent.assign(d, -1);
    g.children.assign(d, {});
    g.is_forest = true;
    for (const auto& [p, c] : hierarchy_edges) {
        if (g.parent[c] == p) continue;  // duplicate edge
        if (g.parent[c] != -1) {
            g.is_forest = false;
            break;
        }
        g.parent[c] = p;
        g.children[p].push_back(c);
    }
    if (!g.is_forest) {
        g.parent.assign(d, -1);
        g.children.assign(d, {});
        g.is_rooted_tree = false;
        return g;
    }
    for (auto& ch : g.children) std::sort(ch.begin(), ch.end());
    int roots = 0;
    for (int i = 0; i < d; ++i)
        if (g.parent[i] == -1) ++roots;
    g.is_rooted_tree = (roots == 1 && g.parent[0] == -1);
    return g;
}

bool is_legal(const HexGraph& g, const BitVec& y) {
    if (static_cast<int>(y.size()) != g.d) throw DimensionError("is_legal: labeling length mismatch");
    for (const auto& [p, c] : g.hierarchy_edges)
        if (y[c] > y[p]) return false;
    for (const auto& [i, j] : g.exclusion_edges)
        if (y[i] + y[j] > 1) return false;
    return true;
}

namespace {

BitVec bits_from_mask(unsigned long mask, int d) {
    BitVec y(d);
    for (int i = 0; i < d; ++i) y[i] = static_cast<std::uint8_t>((mask >> (d - 1 - i)) & 1u);
    return y;
}

} // namespace

std::vector<Assignment> enumerate_state_space(const HexGraph& g, int cap) {
    if (g.d > cap) throw CapExceeded("enumerate_state_space: d exceeds enumeration cap");
    std::vector<Assignment> out;
    const unsigned long total = 1ul << g.d;
    for (unsigned long mask = 0; mask < total; ++mask) {
        BitVec y = bits_from_mask(mask, g.d);
        if (is_legal(g, y)) out.push_back(Assignment{std::move(y)});
    }
    return out;
}

bool prediction_feasible(const HexGraph& g, const BitVec& y_h, const BitVec& y_r,
                         const PredSpaceOptions& opt) {
    if (static_cast<int>(y_h.size()) != g.d || static_cast<int>(y_r.size()) != g.d)
        throw DimensionError("prediction_feasible: vector length mismatch");
    if (!opt.may_abstain.empty()) {
        for (int i = 0; i < g.d; ++i)
            if (!opt.may_abstain[i] && y_r[i] == 0) return false;
    }
    for (int i = 0; i < g.d; ++i) {
        const int p = g.parent[i];
        if (p < 0) continue;
        if (opt.strict_hierarchy) {
            if (y_h[i] > y_h[p]) return false;
        } else {
            // y_h[i] * y_r[p] <= y_h[p] * y_r[p]
            if (y_h[i] * y_r[p] > y_h[p] * y_r[p]) return false;
        }
        if (opt.rule == AbstentionRule::Purpose) {
            if ((1 - y_r[i]) + (1 - y_r[p]) > 1) return false;
        } else {
            if (y_r[i] + y_r[p] > 1) return false;
        }
    }
    return true;
}

std::vector<AbstainedPrediction> enumerate_prediction_space(const HexGraph& g,
                                                            const PredSpaceOptions& opt) {
    if (!g.is_rooted_tree) throw NotATree("enumerate_prediction_space: hierarchy is not a rooted tree");
    if (g.d > opt.cap) throw CapExceeded("enumerate_prediction_space: d exceeds enumeration cap");
    std::vector<AbstainedPrediction> out;
    const unsigned long total = 1ul << g.d;
    for (unsigned long mh = 0; mh < total; ++mh) {
        const BitVec y_h = bits_from_mask(mh, g.d);
        for (unsigned long mr = 0; mr < total; ++mr) {
            BitVec y_r = bits_from_mask(mr, g.d);
            if (!prediction_feasible(g, y_h, y_r, opt)) continue;
            out.push_back(make_prediction(y_h, std::move(y_r)));
        }
    }
    return out;
}

std::vector<Ternary> compose_prediction(const BitVec& y_h, const BitVec& y_r) {
    if (y_h.size() != y_r.size()) throw DimensionError("compose_prediction: length mismatch");
    std::vector<Ternary> out(y_h.size());
    for (std::size_t i = 0; i < y_h.size(); ++i) {
        if (y_r[i] == 0)
            out[i] = Ternary::Abstain;
        else
            out[i] = y_h[i] ? Ternary::One : Ternary::Zero;
    }
    return out;
}

std::string render_composed(const std::vector<Ternary>& composed) {
    std::string s(composed.size(), '0');
    for (std::size_t i = 0; i < composed.size(); ++i) {
        switch (composed[i]) {
            case Ternary::Zero: s[i] = '0'; break;
            case Ternary::One: s[i] = '1'; break;
            case Ternary::Abstain: s[i] = 'a'; break;
        }
    }
    return s;
}

AbstainedPrediction make_prediction(BitVec y_h, BitVec y_r) {
    AbstainedPrediction p;
    p.composed = compose_prediction(y_h, y_r);
    p.y_h = std::move(y_h);
    p.y_r = std::move(y_r);
    return p;
}

} // namespace abst
