#pragma once

#include <utility>
#include <vector>

#include "abst/hexgraph.hpp"
#include "abst/linalg.hpp"

namespace abst {

enum class LossKind { BinaryAbstention, Hamming, HLoss, HaLoss };

const char* loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& s);

// A loss instance (psi_wa, psi_a, C). The loss of a prediction (y_h, y_r)
// against a full labeling y is <psi_wa(y), C psi_a(y_h, y_r)>.
//
// psi_a is linear in the augmented interaction stack
//   (y_h, y_r, y_h (x) y_r, 1)
// and is stored as the sparse matrix M over its 2d + d^2 + 1 columns. The
// trailing constant column carries the affine parts of the printed feature
// maps (1 - r and friends); the decoder folds it into a constant objective
// offset, which leaves argmins untouched.
struct LossSpec {
    LossKind kind;
    int d = 0;
    int q = 0;  // psi_wa dimension
    int p = 0;  // psi_a dimension

    Matrix C;  // q x p
    // M rows: p entries lists of (column, value) over the augmented stack
    std::vector<std::vector<std::pair<int, double>>> M;

    std::vector<int> parent;                 // -1 for root; empty when no hierarchy
    std::vector<std::vector<int>> children;  // mirrors parent
    std::vector<int> nonroot;                // ascending indices with a parent

    std::vector<double> c;  // per-node weights (h/ha); {c_reject} for binary
    double K_A = 0.0;
    double K_Ac = 0.0;

    int stack_cols() const { return 2 * d + d * d + 1; }
    int col_h(int i) const { return i; }
    int col_r(int i) const { return d + i; }
    int col_kron(int j, int k) const { return 2 * d + j * d + k; }
    int col_one() const { return 2 * d + d * d; }
};

// Per-node weights with non-increasing root-to-leaf recursion: the root gets
// 1 and each child its parent's weight divided by the sibling-group size.
std::vector<double> sibling_weights(const HexGraph& g);

struct WeightScheme {
    std::vector<double> c;
    std::vector<double> c_A;
    std::vector<double> c_Ac;
};
WeightScheme weight_scheme(const std::vector<double>& c, double K_A, double K_Ac);

LossSpec binary_abstention_spec(double c_reject);
LossSpec hamming_spec(int d);
LossSpec hloss_spec(const HexGraph& g, const std::vector<double>& c);
LossSpec haloss_spec(const HexGraph& g, const std::vector<double>& c, double K_A, double K_Ac);

Vec psi_wa(const LossSpec& spec, const BitVec& y);
Vec psi_a(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r);

// Indicator-sum evaluation, the oracle path; no matrices involved.
double loss_direct(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r, const BitVec& y);
// Feature-map evaluation through C.
double loss_innerproduct(const LossSpec& spec, const BitVec& y_h, const BitVec& y_r, const BitVec& y);

} // namespace abst
