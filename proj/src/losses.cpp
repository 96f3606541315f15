#include "abst/losses.hpp"

#include <cmath>
#include <queue>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"

namespace abst {

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::BinaryAbstention: return "binary_abstention";
        case LossKind::Hamming: return "hamming";
        case LossKind::HLoss: return "h_loss";
        case LossKind::HaLoss: return "ha_loss";
    }
    return "?";
}

LossKind loss_kind_from_name(const std::string& s) {
    if (s == "binary_abstention") return LossKind::BinaryAbstention;
    if (s == "hamming") return LossKind::Hamming;
    if (s == "h_loss") return LossKind::HLoss;
    if (s == "ha_loss") return LossKind::HaLoss;
    throw RangeError("unknown loss kind: " + s);
}

std::vector<double> sibling_weights(const HexGraph& g) {
    if (!g.is_rooted_tree) throw NotATree("sibling_weights: hierarchy is not a rooted tree");
    std::vector<double> c(g.d, 0.0);
    c[0] = 1.0;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
        const int v = q.front();
        q.pop();
        const auto& ch = g.children[v];
        for (int u : ch) {
            c[u] = c[v] / static_cast<double>(ch.size());
            q.push(u);
        }
    }
    return c;
}

WeightScheme weight_scheme(const std::vector<double>& c, double K_A, double K_Ac) {
    if (K_A < 0.0 || K_Ac < 0.0) throw RangeError("weight_scheme: negative multiplier");
    WeightScheme w;
    w.c = c;
    w.c_A.resize(c.size());
    w.c_Ac.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        w.c_A[i] = K_A * c[i];
        w.c_Ac[i] = K_Ac * c[i];
    }
    return w;
}

namespace {

void check_tree_weights(const HexGraph& g, const std::vector<double>& c) {
    if (!g.is_rooted_tree) throw NotATree("loss spec: hierarchy is not a rooted tree");
    if (static_cast<int>(c.size()) != g.d) throw DimensionError("loss spec: weight length mismatch");
    for (int i = 0; i < g.d; ++i) {
        if (c[i] < 0.0) throw RangeError("loss spec: negative weight");
        const int p = g.parent[i];
        if (p >= 0 && c[i] > c[p] + 1e-12) throw RangeError("loss spec: weights increase along a path");
    }
}

void init_tree_fields(LossSpec& s, const HexGraph& g) {
    s.d = g.d;
    s.parent = g.parent;
    s.children = g.children;
    for (int i = 0; i < g.d; ++i)
        if (g.parent[i] >= 0) s.nonroot.push_back(i);
}

} // namespace

LossSpec binary_abstention_spec(double c_reject) {
    if (c_reject < 0.0 || c_reject > 0.5) throw RangeError("binary_abstention_spec: c outside [0, 0.5]");
    LossSpec s;
    s.kind = LossKind::BinaryAbstention;
    s.d = 1;
    s.q = 2;
    s.p = 3;
    s.parent = {-1};
    s.children = {{}};
    s.c = {c_reject};
    s.C = Matrix(2, 3);
    s.C(0, 0) = 0.0; s.C(0, 1) = 1.0; s.C(0, 2) = c_reject;
    s.C(1, 0) = 1.0; s.C(1, 1) = 0.0; s.C(1, 2) = c_reject;
    s.M.resize(3);
    s.M[0] = {{s.col_kron(0, 0), 1.0}};                       // h r
    s.M[1] = {{s.col_r(0), 1.0}, {s.col_kron(0, 0), -1.0}};   // (1-h) r
    s.M[2] = {{s.col_one(), 1.0}, {s.col_r(0), -1.0}};        // 1-r
    return s;
}

LossSpec hamming_spec(int d) {
    if (d < 1) throw RangeError("hamming_spec: d must be >= 1");
    LossSpec s;
    s.kind = LossKind::Hamming;
    s.d = d;
    s.q = 2 * d;
    s.p = 2 * d;
    s.C = Matrix(2 * d, 2 * d);
    for (int i = 0; i < 2 * d; ++i) s.C(i, i) = 1.0;
    s.M.resize(2 * d);
    for (int i = 0; i < d; ++i) {
        s.M[i] = {{s.col_one(), 1.0}, {s.col_h(i), -1.0}};  // 1-h
        s.M[d + i] = {{s.col_h(i), 1.0}};                   // h
    }
    return s;
}

// H-loss charges c_i where the composed prediction is a wrong non-abstained
// label under a correctly predicted parent (vacuously correct at the root).
// psi_wa(z) = (z, Pz) where row i of P points at the parent and the root row
// is the constant 1 (the "parent of the root is always right" convention);
// with that orientation the printed block matrix
//   C = [[-2 diag(c), diag(c)], [diag(c), 0]]
// reproduces the loss exactly on legal pairs without abstention. The C built
// here extends that identity to predictions with abstention.
LossSpec hloss_spec(const HexGraph& g, const std::vector<double>& c) {
    check_tree_weights(g, c);
    LossSpec s;
    s.kind = LossKind::HLoss;
    init_tree_fields(s, g);
    s.c = c;
    const int d = s.d;
    s.q = 2 * d;
    s.p = 2 + 2 * static_cast<int>(s.nonroot.size());
    s.C = Matrix(s.q, s.p);
    s.M.resize(s.p);

    // psi_a rows 0, 1: root predict-one and predict-zero indicators
    s.M[0] = {{s.col_kron(0, 0), 1.0}};                      // h0 r0
    s.M[1] = {{s.col_r(0), 1.0}, {s.col_kron(0, 0), -1.0}};  // (1-h0) r0
    // wrong non-abstained root: y0 * (1-h0) r0 + (1-y0) * h0 r0; the
    // constant row of psi_wa is (Pz)_0.
    s.C(d + 0, 0) += c[0];
    s.C(0, 0) -= c[0];
    s.C(0, 1) += c[0];

    for (std::size_t t = 0; t < s.nonroot.size(); ++t) {
        const int i = s.nonroot[t];
        const int p = s.parent[i];
        const int rowW11 = 2 + 2 * static_cast<int>(t);
        const int rowW01 = rowW11 + 1;
        // W11 = h_i h_p r_i r_p, W01 = (1-h_i) h_p r_i r_p, linearized on the
        // feasible set (no consecutive abstention; relaxed hierarchy).
        s.M[rowW11] = {{s.col_kron(i, i), 1.0}, {s.col_kron(i, p), 1.0}, {s.col_h(i), -1.0}};
        s.M[rowW01] = {{s.col_kron(p, i), 1.0}, {s.col_kron(p, p), 1.0}, {s.col_h(p), -1.0},
                       {s.col_kron(i, i), -1.0}, {s.col_kron(i, p), -1.0}, {s.col_h(i), 1.0}};
        // y_i * W01 + (y_p - y_i) * W11
        s.C(i, rowW01) += c[i];
        s.C(p, rowW11) += c[i];
        s.C(i, rowW11) -= c[i];
    }
    return s;
}

// Abstention-aware H-loss: abstention cost K_A c_i (abstain while the parent
// is right), abstention regret K_Ac c_i (wrong after an abstained parent) and
// the misclassification cost c_i. The feature maps below linearize all the
// per-edge interaction monomials over (y_h, y_r, y_h (x) y_r, 1) using the
// identities that hold on the prediction space: no consecutive abstention
// and the relaxed hierarchy inequality.
LossSpec haloss_spec(const HexGraph& g, const std::vector<double>& c, double K_A, double K_Ac) {
    if (K_A < 0.0 || K_Ac < 0.0) throw RangeError("haloss_spec: negative multiplier");
    check_tree_weights(g, c);
    LossSpec s;
    s.kind = LossKind::HaLoss;
    init_tree_fields(s, g);
    s.c = c;
    s.K_A = K_A;
    s.K_Ac = K_Ac;
    const int d = s.d;
    s.q = 4 * d + 1;
    s.p = 3 * d + 6 * static_cast<int>(s.nonroot.size());
    s.C = Matrix(s.q, s.p);
    s.M.resize(s.p);

    const int row_one = 4 * d;  // constant coordinate of psi_wa

    for (int i = 0; i < d; ++i) {
        s.M[3 * i + 0] = {{s.col_kron(i, i), 1.0}};                      // h r
        s.M[3 * i + 1] = {{s.col_r(i), 1.0}, {s.col_kron(i, i), -1.0}};  // (1-h) r
        s.M[3 * i + 2] = {{s.col_one(), 1.0}, {s.col_r(i), -1.0}};       // 1-r
    }
    // root: abstention always pays (its parent is vacuously right), and a
    // wrong non-abstained root pays c_0.
    s.C(row_one, 3 * 0 + 2) += K_A * c[0];
    s.C(0, 3 * 0 + 1) += c[0];
    s.C(d + 0, 3 * 0 + 0) += c[0];

    for (std::size_t t = 0; t < s.nonroot.size(); ++t) {
        const int i = s.nonroot[t];
        const int p = s.parent[i];
        const int base = 3 * d + 6 * static_cast<int>(t);
        const int rowP1 = base + 0;  // (1-r_i) r_p h_p
        const int rowP0 = base + 1;  // (1-r_i) r_p (1-h_p)
        const int rowQ1 = base + 2;  // r_i h_i (1-r_p)
        const int rowQ0 = base + 3;  // r_i (1-h_i) (1-r_p)
        const int rowW11 = base + 4; // h_i h_p r_i r_p
        const int rowW01 = base + 5; // (1-h_i) h_p r_i r_p

        s.M[rowP1] = {{s.col_h(p), 1.0}, {s.col_kron(p, i), -1.0}};
        s.M[rowP0] = {{s.col_one(), 1.0}, {s.col_r(i), -1.0}, {s.col_h(p), -1.0}, {s.col_kron(p, i), 1.0}};
        s.M[rowQ1] = {{s.col_h(i), 1.0}, {s.col_kron(i, p), -1.0}};
        s.M[rowQ0] = {{s.col_one(), 1.0}, {s.col_r(p), -1.0}, {s.col_h(i), -1.0}, {s.col_kron(i, p), 1.0}};
        s.M[rowW11] = {{s.col_kron(i, i), 1.0}, {s.col_kron(i, p), 1.0}, {s.col_h(i), -1.0}};
        s.M[rowW01] = {{s.col_kron(p, i), 1.0}, {s.col_kron(p, p), 1.0}, {s.col_h(p), -1.0},
                       {s.col_kron(i, i), -1.0}, {s.col_kron(i, p), -1.0}, {s.col_h(i), 1.0}};

        // abstention cost: y_p P1 + (1-y_p) P0
        s.C(p, rowP1) += K_A * c[i];
        s.C(d + p, rowP0) += K_A * c[i];
        // abstention regret: y_i Q0 + (1-y_i) Q1
        s.C(i, rowQ0) += K_Ac * c[i];
        s.C(d + i, rowQ1) += K_Ac * c[i];
        // misclassification: y_i W01 + (y_p - y_i) W11
        s.C(i, rowW01) += c[i];
        s.C(p, rowW11) += c[i];
        s.C(i, rowW11) -= c[i];
    }
    return s;
}

Vec psi_wa(const LossSpec& spec, const BitVec& y) {
    if (static_cast<int>(y.size()) != spec.d) throw DimensionError("psi_wa: labeling length mismatch");
    const int d = spec.d;
    Vec v;
    switch (spec.kind) {
        case LossKind::BinaryAbstention:
        case LossKind::Hamming:
            v.resize(2 * d);
            for (int i = 0; i < d; ++i) {
                v[i] = y[i];
                v[d + i] = 1.0 - y[i];
            }
            break;
        case LossKind::HLoss:
            v.resize(2 * d);
            for (int i = 0; i < d; ++i) {
                v[i] = y[i];
                v[d + i] = spec.parent[i] < 0 ? 1.0 : static_cast<double>(y[spec.parent[i]]);
            }
            break;
        case LossKind::HaLoss:
            v.assign(4 * d + 1, 0.0);
            for (int i = 0; i < d; ++i) {
                v[i] = y[i];
                v[d + i] = 1.0 - y[i];
                double s = 0.0;
                for (int ch : spec.children[i]) s += y[ch];
                v[2 * d + i] = s;
                v[3 * d + i] = static_cast<double>(spec.children[i].size()) - s;
            }
            v[4 * d] = 1.0;
            break;
    }
    return v;
}

Vec psi_a(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r) {
    if (static_cast<int>(y_h.size()) != spec.d || static_cast<int>(y_r.size()) != spec.d)
        throw DimensionError("psi_a: prediction length mismatch");
    const int d = spec.d;
    Vec v(spec.p, 0.0);
    for (int row = 0; row < spec.p; ++row) {
        double acc = 0.0;
        for (const auto& [col, val] : spec.M[row]) {
            double x;
            if (col < d) x = y_h[col];
            else if (col < 2 * d) x = y_r[col - d];
            else if (col < 2 * d + d * d) {
                const int j = (col - 2 * d) / d;
                const int k = (col - 2 * d) % d;
                x = static_cast<double>(y_h[j] * y_r[k]);
            } else x = 1.0;
            acc += val * x;
        }
        v[row] = acc;
    }
    return v;
}

namespace {

void check_loss_args(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r, const BitVec& y) {
    if (static_cast<int>(y_h.size()) != spec.d || static_cast<int>(y_r.size()) != spec.d ||
        static_cast<int>(y.size()) != spec.d)
        throw DimensionError("loss: vector length mismatch");
    for (std::size_t i = 0; i < spec.parent.size(); ++i) {
        const int p = spec.parent[i];
        if (p >= 0 && y[i] > y[p]) throw RangeError("loss: labeling violates the hierarchy");
    }
}

} // namespace

double loss_direct(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r, const BitVec& y) {
    check_loss_args(spec, y_h, y_r, y);
    const int d = spec.d;
    switch (spec.kind) {
        case LossKind::BinaryAbstention:
            if (y_r[0] == 0) return spec.c[0];
            return y_h[0] != y[0] ? 1.0 : 0.0;
        case LossKind::Hamming: {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += (y_h[i] != y[i]) ? 1.0 : 0.0;
            return s;
        }
        case LossKind::HLoss:
        case LossKind::HaLoss: {
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                const int p = spec.parent[i];
                const bool self_abstained = y_r[i] == 0;
                const bool self_wrong = self_abstained || y_h[i] != y[i];
                const bool parent_abstained = p >= 0 && y_r[p] == 0;
                const bool parent_right = p < 0 || (y_r[p] == 1 && y_h[p] == y[p]);
                if (spec.kind == LossKind::HaLoss) {
                    if (self_abstained && parent_right) s += spec.K_A * spec.c[i];
                    if (self_wrong && parent_abstained) s += spec.K_Ac * spec.c[i];
                }
                if (self_wrong && parent_right && !self_abstained) s += spec.c[i];
            }
            return s;
        }
    }
    return 0.0;
}

double loss_innerproduct(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r, const BitVec& y) {
    check_loss_args(spec, y_h, y_r, y);
    const Vec wa = psi_wa(spec, y);
    const Vec a = psi_a(spec, y_h, y_r);
    const Vec ca = matvec(spec.C, a);
    return kernels::dot(wa.data(), ca.data(), wa.size());
}

} // namespace abst
