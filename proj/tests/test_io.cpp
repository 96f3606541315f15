#include "doctest.h"

#include <unistd.h>
#include <cstdio>
#include <filesystem>

#include "abst/decode.hpp"
#include "abst/errors.hpp"
#include "abst/experiments.hpp"
#include "abst/io.hpp"
#include "abst/rng.hpp"
#include "abst/verify.hpp"

using namespace abst;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("abst_io_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_SUITE("io") {

TEST_CASE("graph round trip in both formats") {
    TempDir tmp;
    const HexGraph g = opinion_tree(3, 2);
    for (const char* name : {"g.hexg", "g.json"}) {
        io::save_graph(g, tmp.file(name));
        const HexGraph back = io::load_graph(tmp.file(name));
        CHECK(back.d == g.d);
        CHECK(back.hierarchy_edges == g.hierarchy_edges);
        CHECK(back.exclusion_edges == g.exclusion_edges);
    }
    CHECK_THROWS_AS(io::load_graph(tmp.file("missing.hexg")), DataError);
}

TEST_CASE("dataset round trip preserves every byte of the numbers") {
    TempDir tmp;
    SyntheticConfig cfg;
    cfg.graph = opinion_tree(2, 2);
    cfg.n_train = 12;
    cfg.n_test = 1;
    cfg.feature_dim = 5;
    cfg.seed = 3;
    const auto [train, test] = synth_dataset(cfg);
    io::save_dataset(train, tmp.file("d.txt"));
    const Dataset back = io::load_dataset(tmp.file("d.txt"));
    CHECK(back.x == train.x);
    CHECK(back.y == train.y);

    // features-only rows
    Dataset unlabeled;
    unlabeled.x = train.x;
    io::save_dataset(unlabeled, tmp.file("u.txt"));
    const Dataset back2 = io::load_dataset(tmp.file("u.txt"));
    CHECK(back2.x == train.x);
    CHECK(back2.y.empty());
}

TEST_CASE("model round trip gives identical predictions") {
    TempDir tmp;
    Rng rng(10);
    std::vector<Vec> xs(8, Vec(3));
    for (auto& x : xs)
        for (auto& v : x) v = rng.uniform();
    Matrix psi(8, 4);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 4; ++j) psi(i, j) = rng.uniform();
    const TrainedSurrogate m = fit_ridge(KernelConfig{KernelKind::Gaussian, 0.7}, xs, psi, 0.05);
    io::save_model(m, tmp.file("model.json"));
    const TrainedSurrogate back = io::load_model(tmp.file("model.json"));
    const Vec probe{0.2, 0.4, 0.6};
    CHECK(g_hat(m, probe) == g_hat(back, probe));
}

TEST_CASE("loss spec dump restores the exact matrices") {
    TempDir tmp;
    const HexGraph g = opinion_tree(2, 2);
    const LossSpec s = haloss_spec(g, sibling_weights(g), 0.2, 0.45);
    io::save_loss_spec(s, tmp.file("spec.json"));
    const LossSpec back = io::load_loss_spec(tmp.file("spec.json"));
    CHECK(back.kind == s.kind);
    CHECK(back.q == s.q);
    CHECK(back.p == s.p);
    CHECK(back.C.a == s.C.a);
    Rng rng(4);
    for (const auto& pr : enumerate_prediction_space(g)) {
        const Vec a = psi_a(s, pr.y_h, pr.y_r);
        const Vec b = psi_a(back, pr.y_h, pr.y_r);
        CHECK(a == b);
    }
}

TEST_CASE("sweep csv format") {
    TempDir tmp;
    SweepResult r;
    r.cells.push_back({0.0, 0.25, 1.5, 0.125, 0.0625, -0.5});
    io::save_sweep_csv(r, tmp.file("curves.csv"));
    const std::string got = io::read_file(tmp.file("curves.csv"));
    CHECK(got ==
          "K_A,K_Ac,mean_abstentions,hamming_left,hamming_right,weighted_abstention_coeff\n"
          "0,0.25,1.5,0.125,0.0625,-0.5\n");
}

TEST_CASE("predictions file format") {
    TempDir tmp;
    io::save_predictions({{"01a", 0.25, 3}}, tmp.file("p.txt"));
    CHECK(io::read_file(tmp.file("p.txt")) == "01a 0.25 3\n");
}

TEST_CASE("review files round trip") {
    TempDir tmp;
    SyntheticConfig cfg;
    cfg.graph = opinion_tree(2, 2);
    cfg.feature_dim = 4;
    cfg.seed = 5;
    const ReviewSet rs = synth_reviews(cfg, 6, 2, 1);
    io::save_reviews(rs, tmp.file("reviews.txt"), tmp.file("ratings.txt"));
    const ReviewSet back = io::load_reviews(tmp.file("reviews.txt"), tmp.file("ratings.txt"));
    REQUIRE(back.size() == rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        CHECK(back[i].id == rs[i].id);
        CHECK(back[i].sentence_x == rs[i].sentence_x);
        CHECK(back[i].sentence_y == rs[i].sentence_y);
        CHECK(back[i].ratings == rs[i].ratings);
    }
}

TEST_CASE("atomic writes leave no temp files behind") {
    TempDir tmp;
    io::write_file_atomic(tmp.file("a.txt"), "hello");
    int entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++entries;
    CHECK(entries == 1);
    CHECK(io::read_file(tmp.file("a.txt")) == "hello");
}

TEST_CASE("lp dump names every variable and row") {
    TempDir tmp;
    const HexGraph g = validate_graph(2, {{0, 1}}, {});
    const LossSpec spec = haloss_spec(g, {1.0, 0.5}, 0.2, 0.3);
    Rng rng(6);
    const IlpInstance inst = build_ilp(spec, g, random_psi(spec, rng), {});
    io::dump_lp(inst, tmp.file("inst.lp"));
    const std::string text = io::read_file(tmp.file("inst.lp"));
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
    CHECK(text.find("h0") != std::string::npos);
    CHECK(text.find("r0") != std::string::npos);
}

} // TEST_SUITE
