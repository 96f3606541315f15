#pragma once

#include <string>
#include <vector>

#include "abst/decode.hpp"
#include "abst/experiments.hpp"
#include "abst/hexgraph.hpp"
#include "abst/losses.hpp"
#include "abst/surrogate.hpp"

namespace abst::io {

// All writers go through a temp file + rename so no partial file survives an
// error.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Graph files: `.json` uses keys d/hierarchy/exclusion, anything else the
// line format `d=<int>`, `h <parent> <child>`, `e <i> <j>`.
void save_graph(const HexGraph& g, const std::string& path);
HexGraph load_graph(const std::string& path);

// Sample rows: `x_1,...,x_m|y_1,...,y_d`; rows without `|` carry features
// only. `#` starts a comment line.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);  // y empty when labels absent

void save_model(const TrainedSurrogate& m, const std::string& path);
TrainedSurrogate load_model(const std::string& path);

// Reproducibility dump: kind, d, weights, multipliers, parent map and the
// dense C / M matrices (row-major).
void save_loss_spec(const LossSpec& s, const std::string& path);
LossSpec load_loss_spec(const std::string& path);

void save_sweep_csv(const SweepResult& r, const std::string& path);

struct PredictionRow {
    std::string composed;
    double objective = 0.0;
    long nodes = 0;
};
void save_predictions(const std::vector<PredictionRow>& rows, const std::string& path);

// Review grouping rows: `review_id,f_1,...,f_m|y_1,...,y_d`; ratings rows:
// `review_id,aspect,rating`.
void save_reviews(const ReviewSet& rs, const std::string& sentences_path,
                  const std::string& ratings_path);
ReviewSet load_reviews(const std::string& sentences_path, const std::string& ratings_path);

// LP-format text dump of an instance (objective, rows, bounds, binaries).
void dump_lp(const IlpInstance& inst, const std::string& path);

std::string format_double(double v);  // shortest round-trip decimal

} // namespace abst::io
