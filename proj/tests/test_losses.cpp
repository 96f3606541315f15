#include "doctest.h"

#include <cmath>

#include "abst/errors.hpp"
#include "abst/experiments.hpp"
#include "abst/losses.hpp"
#include "abst/rng.hpp"
#include "abst/verify.hpp"

using namespace abst;

namespace {

BitVec bv(std::initializer_list<int> xs) {
    BitVec v;
    for (int x : xs) v.push_back(static_cast<std::uint8_t>(x));
    return v;
}

// conceptual interaction monomials, evaluated directly; the production path
// goes through M and must agree on the prediction space
Vec psi_a_monomials(const LossSpec& s, const BitVec& h, const BitVec& r) {
    const int d = s.d;
    Vec v(s.p, 0.0);
    const auto hp = [&](int i) { return static_cast<double>(h[i]); };
    const auto rp = [&](int i) { return static_cast<double>(r[i]); };
    switch (s.kind) {
        case LossKind::BinaryAbstention:
            v = {hp(0) * rp(0), (1 - hp(0)) * rp(0), 1 - rp(0)};
            break;
        case LossKind::Hamming:
            for (int i = 0; i < d; ++i) {
                v[i] = 1 - hp(i);
                v[d + i] = hp(i);
            }
            break;
        case LossKind::HLoss: {
            v[0] = hp(0) * rp(0);
            v[1] = (1 - hp(0)) * rp(0);
            for (std::size_t t = 0; t < s.nonroot.size(); ++t) {
                const int i = s.nonroot[t];
                const int p = s.parent[i];
                v[2 + 2 * t] = hp(i) * hp(p) * rp(i) * rp(p);
                v[2 + 2 * t + 1] = (1 - hp(i)) * hp(p) * rp(i) * rp(p);
            }
            break;
        }
        case LossKind::HaLoss: {
            for (int i = 0; i < d; ++i) {
                v[3 * i] = hp(i) * rp(i);
                v[3 * i + 1] = (1 - hp(i)) * rp(i);
                v[3 * i + 2] = 1 - rp(i);
            }
            for (std::size_t t = 0; t < s.nonroot.size(); ++t) {
                const int i = s.nonroot[t];
                const int p = s.parent[i];
                const int base = 3 * d + 6 * static_cast<int>(t);
                v[base + 0] = (1 - rp(i)) * rp(p) * hp(p);
                v[base + 1] = (1 - rp(i)) * rp(p) * (1 - hp(p));
                v[base + 2] = rp(i) * hp(i) * (1 - rp(p));
                v[base + 3] = rp(i) * (1 - hp(i)) * (1 - rp(p));
                v[base + 4] = hp(i) * hp(p) * rp(i) * rp(p);
                v[base + 5] = (1 - hp(i)) * hp(p) * rp(i) * rp(p);
            }
            break;
        }
    }
    return v;
}

} // namespace

TEST_SUITE("losses") {

TEST_CASE("sibling weights") {
    const HexGraph single = validate_graph(1, {}, {});
    CHECK(sibling_weights(single) == std::vector<double>{1.0});

    const HexGraph opinion = opinion_tree(10, 3);
    const auto c = sibling_weights(opinion);
    CHECK(c[0] == doctest::Approx(1.0));
    for (int a : opinion.children[0]) {
        CHECK(c[a] == doctest::Approx(0.1));
        for (int p : opinion.children[a]) CHECK(c[p] == doctest::Approx(0.1 / 3.0));
    }

    const HexGraph forest = validate_graph(3, {{0, 1}}, {});
    CHECK_THROWS_AS(sibling_weights(forest), NotATree);
}

TEST_CASE("weight scheme multipliers") {
    const auto w = weight_scheme({1.0, 0.5}, 0.4, 0.5);
    CHECK(w.c_A == std::vector<double>{0.4, 0.2});
    CHECK(w.c_Ac == std::vector<double>{0.5, 0.25});
    CHECK_THROWS_AS(weight_scheme({1.0}, -0.1, 0.0), RangeError);
}

TEST_CASE("binary abstention case table") {
    CHECK_THROWS_AS(binary_abstention_spec(0.6), RangeError);
    CHECK_THROWS_AS(binary_abstention_spec(-0.1), RangeError);
    for (double c : {0.0, 0.25, 0.3, 0.5}) {
        const LossSpec s = binary_abstention_spec(c);
        for (int y = 0; y <= 1; ++y)
            for (int h = 0; h <= 1; ++h)
                for (int r = 0; r <= 1; ++r) {
                    const double expect = r == 0 ? c : (y != h ? 1.0 : 0.0);
                    CHECK(loss_direct(s, bv({h}), bv({r}), bv({y})) == expect);
                    CHECK(std::abs(loss_innerproduct(s, bv({h}), bv({r}), bv({y})) - expect) <= 1e-15);
                }
    }
}

TEST_CASE("hamming spec counts disagreements") {
    const LossSpec s3 = hamming_spec(3);
    CHECK(loss_direct(s3, bv({0, 0, 1}), bv({1, 1, 1}), bv({1, 0, 1})) == 1.0);
    CHECK(loss_innerproduct(s3, bv({1, 0, 1}), bv({1, 1, 1}), bv({1, 0, 1})) == doctest::Approx(0.0));
    const LossSpec s2 = hamming_spec(2);
    CHECK(loss_innerproduct(s2, bv({0, 0}), bv({1, 1}), bv({1, 1})) == doctest::Approx(2.0));
    CHECK_THROWS_AS(hamming_spec(0), RangeError);
}

TEST_CASE("h-loss charges the first wrong node under a right parent") {
    const HexGraph chain = validate_graph(2, {{0, 1}}, {});
    const LossSpec eq = hloss_spec(chain, {1.0, 1.0});
    const BitVec ones = bv({1, 1});
    CHECK(loss_direct(eq, bv({0, 0}), ones, bv({1, 1})) == doctest::Approx(1.0));
    CHECK(loss_innerproduct(eq, bv({0, 0}), ones, bv({1, 1})) == doctest::Approx(1.0));
    CHECK(loss_direct(eq, bv({1, 1}), ones, bv({1, 1})) == 0.0);

    const LossSpec half = hloss_spec(chain, {1.0, 0.5});
    CHECK(loss_direct(half, bv({1, 1}), ones, bv({1, 0})) == doctest::Approx(0.5));
    CHECK(loss_innerproduct(half, bv({1, 1}), ones, bv({1, 0})) == doctest::Approx(0.5));

    CHECK_THROWS_AS(hloss_spec(chain, {1.0}), DimensionError);
    CHECK_THROWS_AS(hloss_spec(chain, {0.5, 1.0}), RangeError);  // increasing on the path
}

TEST_CASE("ha-loss abstention cost and regret on a chain") {
    const HexGraph chain = validate_graph(2, {{0, 1}}, {});
    const LossSpec s = haloss_spec(chain, {1.0, 0.5}, 0.4, 0.5);
    const BitVec y = bv({1, 1});
    // abstain at the root, child correct: pay the root abstention cost only
    CHECK(loss_direct(s, bv({0, 1}), bv({0, 1}), y) == doctest::Approx(0.4));
    CHECK(loss_innerproduct(s, bv({0, 1}), bv({0, 1}), y) == doctest::Approx(0.4));
    // child wrong after the abstained root: add the regret 0.5 * 0.5
    CHECK(loss_direct(s, bv({0, 0}), bv({0, 1}), y) == doctest::Approx(0.65));
    CHECK(loss_innerproduct(s, bv({0, 0}), bv({0, 1}), y) == doctest::Approx(0.65));
    // perfect prediction costs nothing
    CHECK(loss_direct(s, bv({1, 1}), bv({1, 1}), y) == 0.0);

    CHECK_THROWS_AS(haloss_spec(chain, {1.0, 0.5}, -0.1, 0.0), RangeError);
}

TEST_CASE("psi_wa printed forms") {
    const LossSpec ham = hamming_spec(2);
    CHECK(psi_wa(ham, bv({1, 0})) == Vec{1, 0, 0, 1});

    const LossSpec bin = binary_abstention_spec(0.3);
    CHECK(psi_a(bin, bv({1}), bv({0})) == Vec{0, 0, 1});

    // chain 0->1: the parent-feature block carries the virtual root constant,
    // so z = (1,1) maps to (1,1,1,1)
    const HexGraph chain = validate_graph(2, {{0, 1}}, {});
    const LossSpec hl = hloss_spec(chain, {1.0, 0.5});
    CHECK(psi_wa(hl, bv({1, 1})) == Vec{1, 1, 1, 1});
    CHECK(psi_wa(hl, bv({1, 0})) == Vec{1, 0, 1, 1});
    CHECK(psi_wa(hl, bv({0, 0})) == Vec{0, 0, 1, 0});
}

TEST_CASE("h-loss printed cost matrix appears verbatim in C") {
    // rows/cols 0..d-1 pair with z, rows/cols d..2d-1 with the parent block
    const HexGraph chain = validate_graph(3, {{0, 1}, {1, 2}}, {});
    const std::vector<double> c{1.0, 0.5, 0.25};
    const LossSpec s = hloss_spec(chain, c);
    // the bilinear form must reproduce  -2 diag(c) / diag(c) blocks when
    // restricted to full predictions; spot-check against the block formula
    const auto states = enumerate_state_space(chain);
    const BitVec ones = bv({1, 1, 1});
    for (const auto& sy : states)
        for (const auto& sh : states) {
            double expect = 0.0;
            for (int i = 0; i < 3; ++i) {
                const int p = chain.parent[i];
                const bool parent_ok = p < 0 || sh.y[p] == sy.y[p];
                if (sh.y[i] != sy.y[i] && parent_ok) expect += c[i];
            }
            CHECK(loss_innerproduct(s, sh.y, ones, sy.y) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("oracle equality over every kind and small tree") {
    for (const auto& [g, name] : oracle_tree_family(5)) {
        CAPTURE(name);
        std::vector<LossSpec> specs;
        specs.push_back(hamming_spec(g.d));
        specs.push_back(hloss_spec(g, sibling_weights(g)));
        specs.push_back(haloss_spec(g, sibling_weights(g), 0.3, 0.45));
        if (g.d == 1) specs.push_back(binary_abstention_spec(0.3));
        for (const auto& spec : specs) {
            CAPTURE(loss_kind_name(spec.kind));
            CHECK(loss_equality_gap(spec, g) <= 1e-12);
        }
    }
}

TEST_CASE("oracle equality on random triples") {
    Rng rng(2024);
    const HexGraph g = opinion_tree(2, 2, false);  // d = 7
    const auto states = enumerate_state_space(g);
    const auto preds = enumerate_prediction_space(g);
    const LossSpec specs[] = {hamming_spec(g.d), hloss_spec(g, sibling_weights(g)),
                              haloss_spec(g, sibling_weights(g), 0.17, 0.62)};
    for (int it = 0; it < 1000; ++it) {
        const auto& y = states[rng.uniform_int(static_cast<int>(states.size()))].y;
        const auto& pr = preds[rng.uniform_int(static_cast<int>(preds.size()))];
        for (const auto& spec : specs) {
            const double a = loss_direct(spec, pr.y_h, pr.y_r, y);
            const double b = loss_innerproduct(spec, pr.y_h, pr.y_r, y);
            CHECK(std::abs(a - b) <= 1e-12);
        }
    }
}

TEST_CASE("psi_a equals the interaction monomials on the prediction space") {
    for (const auto& [g, name] : oracle_tree_family(5)) {
        CAPTURE(name);
        std::vector<LossSpec> specs;
        specs.push_back(hamming_spec(g.d));
        specs.push_back(hloss_spec(g, sibling_weights(g)));
        specs.push_back(haloss_spec(g, sibling_weights(g), 0.3, 0.45));
        if (g.d == 1) specs.push_back(binary_abstention_spec(0.3));
        for (const auto& spec : specs) {
            CAPTURE(loss_kind_name(spec.kind));
            for (const auto& pr : enumerate_prediction_space(g)) {
                const Vec lin = psi_a(spec, pr.y_h, pr.y_r);
                const Vec mono = psi_a_monomials(spec, pr.y_h, pr.y_r);
                REQUIRE(lin.size() == mono.size());
                for (std::size_t i = 0; i < lin.size(); ++i)
                    CHECK(lin[i] == doctest::Approx(mono[i]).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("losses are non-negative on the legal domain") {
    for (const auto& [g, name] : oracle_tree_family(5)) {
        CAPTURE(name);
        std::vector<LossSpec> specs;
        specs.push_back(hamming_spec(g.d));
        specs.push_back(hloss_spec(g, sibling_weights(g)));
        specs.push_back(haloss_spec(g, sibling_weights(g), 0.5, 0.75));
        for (const auto& spec : specs)
            for (const auto& st : enumerate_state_space(g))
                for (const auto& pr : enumerate_prediction_space(g))
                    CHECK(loss_innerproduct(spec, pr.y_h, pr.y_r, st.y) >= -1e-12);
    }
}

TEST_CASE("ha-loss with full prediction reduces to the h-loss") {
    for (const auto& [g, name] : oracle_tree_family(5)) {
        const auto c = sibling_weights(g);
        const LossSpec ha = haloss_spec(g, c, 0.31, 0.77);
        const LossSpec hl = hloss_spec(g, c);
        const BitVec ones(g.d, 1);
        for (const auto& st : enumerate_state_space(g))
            for (const auto& sh : enumerate_state_space(g)) {
                const double a = loss_innerproduct(ha, sh.y, ones, st.y);
                const double b = loss_innerproduct(hl, sh.y, ones, st.y);
                CHECK(std::abs(a - b) <= 1e-12);
            }
    }
}

TEST_CASE("negative control: a corrupted cost entry breaks the equality check") {
    const HexGraph g = validate_graph(3, {{0, 1}, {0, 2}}, {});
    LossSpec spec = haloss_spec(g, sibling_weights(g), 0.3, 0.45);
    CHECK(loss_equality_gap(spec, g) <= 1e-12);
    spec.C(0, 0) += 0.125;
    CHECK(loss_equality_gap(spec, g) > 1e-3);
}

TEST_CASE("dimension and legality errors") {
    const HexGraph chain = validate_graph(2, {{0, 1}}, {});
    const LossSpec s = haloss_spec(chain, {1.0, 0.5}, 0.2, 0.2);
    CHECK_THROWS_AS(loss_direct(s, bv({1}), bv({1, 1}), bv({1, 1})), DimensionError);
    CHECK_THROWS_AS(loss_direct(s, bv({1, 1}), bv({1, 1}), bv({0, 1})), RangeError);
}

} // TEST_SUITE
