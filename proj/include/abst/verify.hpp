#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "abst/experiments.hpp"
#include "abst/hexgraph.hpp"
#include "abst/losses.hpp"
#include "abst/rng.hpp"

namespace abst {

struct VerifyOptions {
    int tree_max_d = 5;        // exhaustive loss-equality trees up to this size
    int pred_cap = 10;         // prediction-space enumeration cap
    int decoder_instances = 150;  // per loss kind
    int decoder_max_d = 7;
    int lp_instances = 100;
    int worlds = 250;
    std::uint64_t seed = 12345;
};

struct SuiteResult {
    enum class Status { Pass, Fail, Skip };
    std::string name;
    Status status = Status::Pass;
    std::string detail;
};

std::vector<SuiteResult> run_verify(const VerifyOptions& opt);
std::string format_verify_report(const std::vector<SuiteResult>& results);
bool verify_failed(const std::vector<SuiteResult>& results);

// Granular checks reused by the test suites.

// Exhaustive |loss_innerproduct - loss_direct| over legal y and the
// prediction space; returns the maximum absolute gap.
double loss_equality_gap(const LossSpec& spec, const HexGraph& g);

// Small named trees with d <= max_d used by the exhaustive suites.
std::vector<std::pair<HexGraph, std::string>> oracle_tree_family(int max_d);

// Every rooted tree on d <= max_d nodes (all parent arrays with
// parent[i] < i), for the exhaustive acceptance criteria.
std::vector<HexGraph> all_rooted_trees(int max_d);

HexGraph random_tree(int d, Rng& rng);
LossSpec random_spec_for(LossKind kind, const HexGraph& g, Rng& rng);
Vec random_psi(const LossSpec& spec, Rng& rng);
FiniteWorld random_world(Rng& rng, int max_inputs, int max_d);

} // namespace abst
