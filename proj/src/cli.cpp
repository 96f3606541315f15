#include "abst/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "abst/decode.hpp"
#include "abst/errors.hpp"
#include "abst/experiments.hpp"
#include "abst/io.hpp"
#include "abst/losses.hpp"
#include "abst/surrogate.hpp"
#include "abst/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace abst {

namespace {

struct RunConfig {
    json raw;
    std::string config_path;

    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out = "out";
    bool strict = false;
    bool no_abstention = false;
    int state_cap = 20;
    int pred_cap = 10;

    // graph: either a file or a synthetic opinion tree
    std::string graph_file;
    int tree_aspects = 0, tree_polarities = 0;
    bool tree_exclusions = true;

    std::string loss_kind = "ha_loss";
    std::string c_scheme = "sibling";
    double K_A = 0.2, K_Ac = 0.5, c_reject = 0.25;

    KernelConfig kernel;
    double lambda = 0.1;

    std::string train_path, test_path;
    bool have_synth = false;
    SyntheticConfig synth;  // graph filled later

    std::string abstain = "all";
    std::vector<int> abstain_nodes;
    AbstentionRule rule = AbstentionRule::Purpose;

    Vec ka_grid{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
    Vec kac_grid{0.25, 0.5, 0.75};

    int n_reviews_train = 60, n_reviews_test = 40, overall_aspects = 0;
    double star_lambda = 1e-3;
    std::string reviews_train, reviews_test, ratings_train, ratings_test;

    VerifyOptions verify;
    bool dump_loss_spec = false;
};

double get_num(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
    return j.at(key).get<double>();
}

RunConfig parse_config(const std::string& path) {
    RunConfig c;
    c.config_path = path;
    if (!path.empty()) {
        if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
        try {
            c.raw = json::parse(io::read_file(path));
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
    } else {
        c.raw = json::object();
    }
    const json& j = c.raw;
    try {
        c.seed = static_cast<std::uint64_t>(get_num(j, "seed", 1));
        c.jobs = static_cast<int>(get_num(j, "jobs", 1));
        c.out = j.value("out", std::string("out"));
        c.strict = j.value("strict", false);
        if (j.contains("caps")) {
            c.state_cap = static_cast<int>(get_num(j.at("caps"), "state_enum", 20));
            c.pred_cap = static_cast<int>(get_num(j.at("caps"), "pred_enum", 10));
        }
        if (j.contains("graph")) {
            const json& g = j.at("graph");
            if (g.contains("file")) {
                c.graph_file = g.at("file").get<std::string>();
            } else {
                c.tree_aspects = static_cast<int>(get_num(g, "aspects", 0));
                c.tree_polarities = static_cast<int>(get_num(g, "polarities", 0));
                c.tree_exclusions = g.value("exclusions", true);
                if (c.tree_aspects < 1 || c.tree_polarities < 1)
                    throw ConfigError("config: graph needs file or aspects/polarities");
            }
        }
        if (j.contains("loss")) {
            const json& l = j.at("loss");
            c.loss_kind = l.value("kind", std::string("ha_loss"));
            c.c_scheme = l.value("scheme", std::string("sibling"));
            c.K_A = get_num(l, "K_A", 0.2);
            c.K_Ac = get_num(l, "K_Ac", 0.5);
            c.c_reject = get_num(l, "c_reject", 0.25);
            if (c.K_A < 0 || c.K_Ac < 0) throw ConfigError("config: abstention multipliers must be >= 0");
        }
        if (j.contains("kernel")) {
            const std::string k = j.at("kernel").value("kind", std::string("gaussian"));
            if (k == "linear") c.kernel.kind = KernelKind::Linear;
            else if (k == "gaussian") c.kernel.kind = KernelKind::Gaussian;
            else throw ConfigError("config: unknown kernel kind " + k);
            c.kernel.gamma = get_num(j.at("kernel"), "gamma", 1.0);
            if (c.kernel.kind == KernelKind::Gaussian && c.kernel.gamma <= 0)
                throw ConfigError("config: gaussian gamma must be positive");
        }
        c.lambda = get_num(j, "lambda", 0.1);
        if (c.lambda <= 0) throw ConfigError("config: lambda must be positive");
        if (j.contains("data")) {
            c.train_path = j.at("data").value("train", std::string());
            c.test_path = j.at("data").value("test", std::string());
        }
        if (j.contains("synthetic")) {
            const json& s = j.at("synthetic");
            c.have_synth = true;
            c.synth.n_train = static_cast<int>(get_num(s, "n_train", 100));
            c.synth.n_test = static_cast<int>(get_num(s, "n_test", 50));
            c.synth.feature_dim = static_cast<int>(get_num(s, "feature_dim", 8));
            c.synth.noise = get_num(s, "noise", 0.05);
            c.synth.hard_noise = get_num(s, "hard_noise", 0.35);
            c.synth.p_root = get_num(s, "p_root", 0.9);
            c.synth.p_child = get_num(s, "p_child", 0.5);
            c.synth.feature_noise = get_num(s, "feature_noise", 0.1);
            if (s.contains("hard_nodes")) c.synth.hard_nodes = s.at("hard_nodes").get<std::vector<int>>();
            if (c.synth.noise < 0 || c.synth.noise >= 0.5 || c.synth.hard_noise < 0 ||
                c.synth.hard_noise >= 0.5)
                throw ConfigError("config: noise must lie in [0, 0.5)");
        }
        if (j.contains("abstain")) {
            if (j.at("abstain").is_array()) {
                c.abstain = "list";
                c.abstain_nodes = j.at("abstain").get<std::vector<int>>();
            } else {
                c.abstain = j.at("abstain").get<std::string>();
                if (c.abstain != "all" && c.abstain != "aspects")
                    throw ConfigError("config: abstain must be 'all', 'aspects' or a node list");
            }
        }
        if (j.contains("abstention_rule")) {
            const std::string r = j.at("abstention_rule").get<std::string>();
            if (r == "purpose") c.rule = AbstentionRule::Purpose;
            else if (r == "literal") c.rule = AbstentionRule::Literal;
            else throw ConfigError("config: abstention_rule must be 'purpose' or 'literal'");
        }
        if (j.contains("sweep")) {
            if (j.at("sweep").contains("K_A")) c.ka_grid = j.at("sweep").at("K_A").get<Vec>();
            if (j.at("sweep").contains("K_Ac")) c.kac_grid = j.at("sweep").at("K_Ac").get<Vec>();
            if (c.ka_grid.empty() || c.kac_grid.empty()) throw ConfigError("config: empty sweep grid");
        }
        if (j.contains("pipeline")) {
            const json& p = j.at("pipeline");
            c.n_reviews_train = static_cast<int>(get_num(p, "n_reviews_train", 60));
            c.n_reviews_test = static_cast<int>(get_num(p, "n_reviews_test", 40));
            c.overall_aspects = static_cast<int>(get_num(p, "overall_aspects", 0));
            c.star_lambda = get_num(p, "ridge_lambda", 1e-3);
            c.reviews_train = p.value("reviews_train", std::string());
            c.reviews_test = p.value("reviews_test", std::string());
            c.ratings_train = p.value("ratings_train", std::string());
            c.ratings_test = p.value("ratings_test", std::string());
        }
        if (j.contains("verify")) {
            const json& v = j.at("verify");
            c.verify.tree_max_d = static_cast<int>(get_num(v, "tree_max_d", 5));
            c.verify.decoder_instances = static_cast<int>(get_num(v, "decoder_instances", 150));
            c.verify.decoder_max_d = static_cast<int>(get_num(v, "decoder_max_d", 7));
            c.verify.lp_instances = static_cast<int>(get_num(v, "lp_instances", 100));
            c.verify.worlds = static_cast<int>(get_num(v, "worlds", 250));
        }
        c.dump_loss_spec = j.value("dump_loss_spec", false);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    c.verify.pred_cap = c.pred_cap;
    c.verify.seed = c.seed;
    return c;
}

HexGraph resolve_graph(const RunConfig& c) {
    if (!c.graph_file.empty()) {
        if (!fs::exists(c.graph_file)) throw DataError("graph file not found: " + c.graph_file);
        return io::load_graph(c.graph_file);
    }
    if (c.tree_aspects > 0) return opinion_tree(c.tree_aspects, c.tree_polarities, c.tree_exclusions);
    throw ConfigError("config: no graph given");
}

LossSpec resolve_spec(const RunConfig& c, const HexGraph& g) {
    const LossKind kind = loss_kind_from_name(c.loss_kind);
    std::vector<double> w;
    if (kind == LossKind::HLoss || kind == LossKind::HaLoss) {
        if (c.c_scheme == "sibling") w = sibling_weights(g);
        else if (c.c_scheme == "uniform") w.assign(g.d, 1.0);
        else throw ConfigError("config: unknown weight scheme " + c.c_scheme);
    }
    switch (kind) {
        case LossKind::BinaryAbstention:
            if (g.d != 1) throw ConfigError("config: binary_abstention needs a single-node graph");
            return binary_abstention_spec(c.c_reject);
        case LossKind::Hamming: return hamming_spec(g.d);
        case LossKind::HLoss: return hloss_spec(g, w);
        case LossKind::HaLoss: return haloss_spec(g, w, c.K_A, c.K_Ac);
    }
    throw ConfigError("config: bad loss kind");
}

DecodeOptions resolve_decode_options(const RunConfig& c, const HexGraph& g) {
    DecodeOptions o;
    o.strict_hierarchy = c.strict;
    o.no_abstention = c.no_abstention;
    o.rule = c.rule;
    o.brute_cap = c.pred_cap;
    if (c.abstain == "aspects") o.may_abstain = abstain_mask(g.d, aspect_nodes(g));
    else if (c.abstain == "list") o.may_abstain = abstain_mask(g.d, c.abstain_nodes);
    return o;
}

void echo_config(const RunConfig& c) {
    const std::string dest = (fs::path(c.out) / "config.json").string();
    if (!c.config_path.empty()) io::write_file_atomic(dest, io::read_file(c.config_path));
    else io::write_file_atomic(dest, c.raw.dump(2) + "\n");
}

Dataset load_or_gen(const RunConfig& c, const HexGraph& g, bool train_split) {
    const std::string& path = train_split ? c.train_path : c.test_path;
    if (!path.empty()) {
        if (!fs::exists(path)) throw DataError("data file not found: " + path);
        Dataset ds = io::load_dataset(path);
        for (const auto& y : ds.y)
            if (static_cast<int>(y.size()) != g.d) throw DataError("label width mismatch in " + path);
        if (ds.y.empty() && train_split) throw DataError("training rows need labels: " + path);
        return ds;
    }
    if (!c.have_synth) throw ConfigError("config: neither data paths nor a synthetic block given");
    SyntheticConfig sc = c.synth;
    sc.graph = g;
    sc.seed = c.seed;
    auto [tr, te] = synth_dataset(sc);
    return train_split ? tr : te;
}

Matrix psi_matrix(const LossSpec& spec, const std::vector<BitVec>& ys) {
    Matrix psi(static_cast<int>(ys.size()), spec.q);
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const Vec row = psi_wa(spec, ys[i]);
        for (int jj = 0; jj < spec.q; ++jj) psi(static_cast<int>(i), jj) = row[jj];
    }
    return psi;
}

int cmd_gen(const RunConfig& c) {
    const HexGraph g = resolve_graph(c);
    if (!c.have_synth) throw ConfigError("config: gen needs a synthetic block");
    SyntheticConfig sc = c.synth;
    sc.graph = g;
    sc.seed = c.seed;
    const auto [train, test] = synth_dataset(sc);
    const fs::path out(c.out);
    io::save_graph(g, (out / "graph.hexg").string());
    io::save_graph(g, (out / "graph.json").string());
    io::save_dataset(train, (out / "train.txt").string());
    io::save_dataset(test, (out / "test.txt").string());
    if (c.overall_aspects > 0) {
        const ReviewSet rtrain = synth_reviews(sc, c.n_reviews_train, c.overall_aspects, 1);
        const ReviewSet rtest = synth_reviews(sc, c.n_reviews_test, c.overall_aspects, 2);
        io::save_reviews(rtrain, (out / "reviews_train.txt").string(),
                         (out / "ratings_train.txt").string());
        io::save_reviews(rtest, (out / "reviews_test.txt").string(),
                         (out / "ratings_test.txt").string());
    }
    echo_config(c);
    std::cout << "gen: wrote " << (out / "train.txt").string() << " (" << train.x.size()
              << " rows), " << (out / "test.txt").string() << " (" << test.x.size() << " rows)\n";
    return 0;
}

int cmd_train(const RunConfig& c) {
    const HexGraph g = resolve_graph(c);
    const LossSpec spec = resolve_spec(c, g);
    const Dataset train = load_or_gen(c, g, true);
    for (const auto& y : train.y)
        if (!is_legal(g, y)) throw DataError("training labeling violates the graph");
    const Matrix psi = psi_matrix(spec, train.y);
    const TrainedSurrogate model = fit_ridge(c.kernel, train.x, psi, c.lambda);
    const fs::path out(c.out);
    io::save_model(model, (out / "model.json").string());
    json summary;
    summary["n_train"] = train.x.size();
    summary["q"] = spec.q;
    summary["lambda"] = c.lambda;
    summary["kernel"] = c.kernel.kind == KernelKind::Linear ? "linear" : "gaussian";
    summary["gamma"] = c.kernel.gamma;
    summary["loss_kind"] = loss_kind_name(spec.kind);
    summary["surrogate_train_mse"] = surrogate_mse(model, train.x, psi);
    io::write_file_atomic((out / "train_summary.json").string(), summary.dump(2) + "\n");
    if (c.dump_loss_spec) io::save_loss_spec(spec, (out / "loss_spec.json").string());
    echo_config(c);
    std::cout << "train: model written to " << (out / "model.json").string() << "\n";
    return 0;
}

int cmd_decode(const RunConfig& c, const std::string& model_path, const std::string& input_path,
               bool dump_lp_files) {
    const HexGraph g = resolve_graph(c);
    const LossSpec spec = resolve_spec(c, g);
    const std::string mp = model_path.empty() ? (fs::path(c.out) / "model.json").string() : model_path;
    if (!fs::exists(mp)) throw DataError("model file not found: " + mp);
    const TrainedSurrogate model = io::load_model(mp);
    if (model.psi_train.cols != spec.q)
        throw ModelError("model output dimension " + std::to_string(model.psi_train.cols) +
                         " does not match loss spec q=" + std::to_string(spec.q));
    Dataset in;
    if (!input_path.empty()) {
        if (!fs::exists(input_path)) throw DataError("input file not found: " + input_path);
        in = io::load_dataset(input_path);
    } else {
        in = load_or_gen(c, g, false);
    }
    const DecodeOptions opt = resolve_decode_options(c, g);
    const int n = static_cast<int>(in.x.size());
    const fs::path out(c.out);
    std::vector<io::PredictionRow> rows(n);
    parallel_for(n, c.jobs, [&](int i) {
        if (dump_lp_files) {
            char name[32];
            std::snprintf(name, sizeof(name), "instance_%04d.lp", i);
            io::dump_lp(build_ilp(spec, g, g_hat(model, in.x[i]), opt), (out / name).string());
        }
        const BnbReport rep = decode(model, spec, g, in.x[i], opt);
        rows[i].composed = render_composed(rep.optimum.composed);
        rows[i].objective = rep.objective_value;
        rows[i].nodes = rep.nodes_explored;
    });
    io::save_predictions(rows, (out / "predictions.txt").string());
    echo_config(c);
    std::cout << "decode: " << n << " rows written to " << (out / "predictions.txt").string() << "\n";
    return 0;
}

int cmd_sweep(const RunConfig& c, const std::string& model_path) {
    const HexGraph g = resolve_graph(c);
    if (loss_kind_from_name(c.loss_kind) != LossKind::HaLoss)
        throw ConfigError("config: sweep needs the abstention-aware loss");
    const std::string mp = model_path.empty() ? (fs::path(c.out) / "model.json").string() : model_path;
    if (!fs::exists(mp)) throw DataError("model file not found: " + mp);
    const TrainedSurrogate model = io::load_model(mp);
    std::vector<double> w = c.c_scheme == "uniform" ? std::vector<double>(g.d, 1.0)
                                                    : sibling_weights(g);
    const LossSpec probe = haloss_spec(g, w, 0.0, 0.0);
    if (model.psi_train.cols != probe.q)
        throw ModelError("model output dimension does not match the sweep loss");
    const Dataset test = load_or_gen(c, g, false);
    if (test.y.empty()) throw DataError("sweep needs labeled test rows");
    DecodeOptions opt = resolve_decode_options(c, g);
    opt.no_abstention = false;  // the sweep varies abstention itself
    const SweepResult res =
        sweep_abstention(model, g, w, test, c.ka_grid, c.kac_grid, opt, c.jobs);
    const fs::path out(c.out);
    io::save_sweep_csv(res, (out / "curves.csv").string());
    echo_config(c);
    std::cout << "sweep: " << res.cells.size() << " cells written to "
              << (out / "curves.csv").string() << "\n";
    return 0;
}

int cmd_pipeline(const RunConfig& c) {
    const HexGraph g = resolve_graph(c);
    const int overall = c.overall_aspects > 0 ? c.overall_aspects
                                              : static_cast<int>(aspect_nodes(g).size());
    ReviewSet rtrain, rtest;
    if (!c.reviews_train.empty()) {
        for (const std::string& p : {c.reviews_train, c.reviews_test, c.ratings_train, c.ratings_test})
            if (!fs::exists(p)) throw DataError("review file not found: " + p);
        rtrain = io::load_reviews(c.reviews_train, c.ratings_train);
        rtest = io::load_reviews(c.reviews_test, c.ratings_test);
    } else {
        if (!c.have_synth) throw ConfigError("config: pipeline needs review files or a synthetic block");
        SyntheticConfig sc = c.synth;
        sc.graph = g;
        sc.seed = c.seed;
        rtrain = synth_reviews(sc, c.n_reviews_train, overall, 1);
        rtest = synth_reviews(sc, c.n_reviews_test, overall, 2);
    }

    // sentence-level surrogate trained on all training sentences
    const LossSpec spec = resolve_spec(c, g);
    Dataset sentences;
    for (const auto& rv : rtrain) {
        sentences.x.insert(sentences.x.end(), rv.sentence_x.begin(), rv.sentence_x.end());
        sentences.y.insert(sentences.y.end(), rv.sentence_y.begin(), rv.sentence_y.end());
    }
    const TrainedSurrogate model = fit_ridge(c.kernel, sentences.x, psi_matrix(spec, sentences.y), c.lambda);

    DecodeOptions plain_opt = resolve_decode_options(c, g);
    plain_opt.no_abstention = true;
    DecodeOptions abst_opt = resolve_decode_options(c, g);
    abst_opt.no_abstention = false;
    const SentenceDecoder plain = [&](const Vec& x) {
        return decode(model, spec, g, x, plain_opt).optimum;
    };
    const SentenceDecoder withabst = [&](const Vec& x) {
        return decode(model, spec, g, x, abst_opt).optimum;
    };
    const StarPipelineResult res =
        star_pipeline(rtrain, rtest, plain, withabst, g, c.star_lambda, c.jobs);

    json out_j;
    out_j["mae_oracle"] = res.mae_oracle;
    out_j["mae_predicted"] = res.mae_predicted;
    out_j["mae_abstention"] = res.mae_abstention;
    out_j["macro_mae_oracle"] = res.macro_oracle;
    out_j["macro_mae_predicted"] = res.macro_predicted;
    out_j["macro_mae_abstention"] = res.macro_abstention;
    out_j["sentence_polarity_mae"] = res.sentence_polarity_mae;
    const fs::path out(c.out);
    io::write_file_atomic((out / "pipeline_metrics.json").string(), out_j.dump(2) + "\n");
    echo_config(c);
    std::cout << "pipeline: macro MAE oracle " << res.macro_oracle << ", predicted "
              << res.macro_predicted << ", with abstention " << res.macro_abstention << "\n";
    return 0;
}

int cmd_verify(const RunConfig& c) {
    const auto results = run_verify(c.verify);
    const std::string report = format_verify_report(results);
    std::cout << report;
    io::write_file_atomic((fs::path(c.out) / "verify_report.txt").string(), report);
    echo_config(c);
    return verify_failed(results) ? 5 : 0;
}

} // namespace

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"structured output prediction with abstention on HEX label graphs"};
    app.require_subcommand(1);

    std::string config_path, model_path, input_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_dir;
    bool no_abstention = false, strict = false;

    const auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* copt = sub->add_option("--config", config_path, "run configuration file (json)");
        if (config_required) copt->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--jobs", jobs, "worker cap for per-sample parallel work");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--no-abstention", no_abstention, "force y_r = 1 everywhere");
        sub->add_flag("--strict", strict, "strict hierarchy constraint in the decoder");
    };

    auto* gen = app.add_subcommand("gen", "write synthetic datasets");
    add_common(gen, true);
    auto* train = app.add_subcommand("train", "fit the surrogate regressor");
    add_common(train, true);
    auto* dec = app.add_subcommand("decode", "decode inputs into abstention-aware labelings");
    add_common(dec, true);
    dec->add_option("--model", model_path, "model file (default <out>/model.json)");
    dec->add_option("--input", input_path, "input rows (default: the config test split)");
    bool dump_lp_files = false;
    dec->add_flag("--dump-lp", dump_lp_files, "write an LP-format dump of each instance");
    auto* sweep = app.add_subcommand("sweep", "abstention sweep over the multiplier grids");
    add_common(sweep, true);
    sweep->add_option("--model", model_path, "model file (default <out>/model.json)");
    auto* pipe = app.add_subcommand("pipeline", "review-level star-rating pipeline");
    add_common(pipe, true);
    auto* ver = app.add_subcommand("verify", "run the oracle verification suites");
    add_common(ver, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg = parse_config(config_path);
        if (seed) {
            cfg.seed = *seed;
            cfg.verify.seed = *seed;
        }
        if (jobs) cfg.jobs = *jobs;
        if (out_dir) cfg.out = *out_dir;
        cfg.no_abstention = cfg.no_abstention || no_abstention;
        cfg.strict = cfg.strict || strict;

        if (gen->parsed()) return cmd_gen(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (dec->parsed()) return cmd_decode(cfg, model_path, input_path, dump_lp_files);
        if (sweep->parsed()) return cmd_sweep(cfg, model_path);
        if (pipe->parsed()) return cmd_pipeline(cfg);
        if (ver->parsed()) return cmd_verify(cfg);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 4;
    } catch (const RangeError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace abst
