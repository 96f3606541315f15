#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "abst/decode.hpp"
#include "abst/hexgraph.hpp"
#include "abst/linalg.hpp"
#include "abst/losses.hpp"
#include "abst/surrogate.hpp"

namespace abst {

// Root -> aspect layer -> polarity layer. Node 0 is the root, aspects are
// 1..n_aspects, and the polarities of aspect a start at
// 1 + n_aspects + (a-1)*n_polarities. Sibling polarities can carry mutual
// exclusion edges (at most one polarity per aspect).
HexGraph opinion_tree(int n_aspects, int n_polarities, bool polarity_exclusions = true);

// Aspect node indices of an opinion tree (or generally: children of the root).
std::vector<int> aspect_nodes(const HexGraph& g);
// Mask allowing abstention only on the given nodes.
std::vector<std::uint8_t> abstain_mask(int d, const std::vector<int>& nodes);

struct SyntheticConfig {
    HexGraph graph;
    int n_train = 100;
    int n_test = 50;
    int feature_dim = 8;
    double noise = 0.05;            // per-node label flip probability
    std::vector<int> hard_nodes;    // nodes with elevated flip probability
    double hard_noise = 0.35;
    std::uint64_t seed = 1;
    // top-down activation of the clean labeling
    double p_root = 0.9;
    double p_child = 0.5;
    double feature_noise = 0.1;
};

struct Dataset {
    std::vector<Vec> x;
    std::vector<BitVec> y;
};

std::pair<Dataset, Dataset> synth_dataset(const SyntheticConfig& cfg);

enum class HammingExclusion { Left, Right };

// Normalized Hamming distance over the nodes kept after removing abstained
// nodes (Left) or abstained nodes together with their children (Right).
double hamming_excluding_abstained(const AbstainedPrediction& pred, const BitVec& y,
                                   HammingExclusion mode, const HexGraph& g);

double micro_f1(const std::vector<AbstainedPrediction>& preds, const std::vector<BitVec>& truths);

// y_a = h - (1 - r), componentwise in {-1, 0, 1}.
Vec abstention_representation(const AbstainedPrediction& pred);

struct SweepCell {
    double K_A = 0.0;
    double K_Ac = 0.0;
    double mean_abstentions = 0.0;
    double hamming_left = 0.0;
    double hamming_right = 0.0;
    double weighted_abstention_coeff = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // sorted by (K_Ac, K_A)
};

SweepResult sweep_abstention(const TrainedSurrogate& model, const HexGraph& g,
                             const std::vector<double>& c, const Dataset& test,
                             const Vec& K_A_grid, const Vec& K_Ac_grid,
                             const DecodeOptions& base_opt, int jobs = 1);

// ----- star-rating pipeline -----

struct Review {
    int id = 0;
    std::vector<Vec> sentence_x;
    std::vector<BitVec> sentence_y;
    Vec ratings;  // one per overall aspect, values in {-1, 0, 1}
};

using ReviewSet = std::vector<Review>;

using SentenceDecoder = std::function<AbstainedPrediction(const Vec&)>;

struct StarPipelineResult {
    Vec mae_oracle;      // per overall aspect
    Vec mae_predicted;
    Vec mae_abstention;
    double macro_oracle = 0.0;
    double macro_predicted = 0.0;
    double macro_abstention = 0.0;
    double sentence_polarity_mae = 0.0;  // on true-positive aspects, no abstention path
};

StarPipelineResult star_pipeline(const ReviewSet& train, const ReviewSet& test,
                                 const SentenceDecoder& plain_decoder,
                                 const SentenceDecoder& abstain_decoder,
                                 const HexGraph& g, double ridge_lambda = 1e-3, int jobs = 1);

// Synthetic review data for the pipeline; ratings derive from the polarity
// balance of each aspect across the review's sentences.
ReviewSet synth_reviews(const SyntheticConfig& cfg, int n_reviews, int overall_aspects,
                        std::uint64_t seed);

// ----- excess-risk bound -----

struct FiniteWorld {
    HexGraph g;
    LossSpec spec;
    std::vector<Vec> xs;  // placeholder inputs (identities only matter)
    Vec px;               // input probabilities
    std::vector<Assignment> states;
    std::vector<Vec> cond;  // per input: probability over `states`
};

struct RiskBoundResult {
    double excess = 0.0;
    double bound = 0.0;
    double c_l = 0.0;
    double surrogate_excess = 0.0;
    bool holds = false;
};

// Evaluates both sides of the excess-risk inequality exactly by enumeration:
// risks of the decoded and of the optimal pair, the surrogate excess of the
// supplied estimate, and c_l = ||C|| max ||psi_a||.
RiskBoundResult risk_bound_check(const FiniteWorld& world, const std::vector<Vec>& g_estimate);

// ----- small shared helpers -----

double plain_hamming(const BitVec& a, const BitVec& b);  // normalized

void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

} // namespace abst
