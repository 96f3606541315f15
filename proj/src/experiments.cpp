#include "abst/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "abst/errors.hpp"
#include "abst/kernels.hpp"
#include "abst/rng.hpp"

namespace abst {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int k = std::min(jobs, n);
    pool.reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

HexGraph opinion_tree(int n_aspects, int n_polarities, bool polarity_exclusions) {
    if (n_aspects < 1 || n_polarities < 1) throw RangeError("opinion_tree: counts must be positive");
    const int d = 1 + n_aspects * (1 + n_polarities);
    std::vector<std::pair<int, int>> hier;
    std::vector<std::pair<int, int>> excl;
    for (int a = 1; a <= n_aspects; ++a) {
        hier.emplace_back(0, a);
        const int base = 1 + n_aspects + (a - 1) * n_polarities;
        for (int p = 0; p < n_polarities; ++p) {
            hier.emplace_back(a, base + p);
            if (polarity_exclusions)
                for (int q = p + 1; q < n_polarities; ++q) excl.emplace_back(base + p, base + q);
        }
    }
    return validate_graph(d, hier, excl);
}

std::vector<int> aspect_nodes(const HexGraph& g) {
    if (!g.is_rooted_tree) throw NotATree("aspect_nodes: hierarchy is not a rooted tree");
    return g.children[0];
}

std::vector<std::uint8_t> abstain_mask(int d, const std::vector<int>& nodes) {
    std::vector<std::uint8_t> m(d, 0);
    for (int i : nodes) {
        if (i < 0 || i >= d) throw IndexError("abstain_mask: node out of range");
        m[i] = 1;
    }
    return m;
}

namespace {

std::vector<int> topo_order(const HexGraph& g) {
    std::vector<int> order;
    order.reserve(g.d);
    for (int i = 0; i < g.d; ++i)
        if (g.parent[i] < 0) order.push_back(i);
    for (std::size_t h = 0; h < order.size(); ++h)
        for (int c : g.children[order[h]]) order.push_back(c);
    return order;
}

struct Prototypes {
    std::vector<Vec> node;  // per node feature prototype
};

Prototypes make_prototypes(const SyntheticConfig& cfg) {
    Rng rng(Rng::substream(cfg.seed, 0));
    Prototypes p;
    p.node.resize(cfg.graph.d, Vec(cfg.feature_dim, 0.0));
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim));
    for (int i = 0; i < cfg.graph.d; ++i)
        for (int j = 0; j < cfg.feature_dim; ++j) p.node[i][j] = scale * rng.normal();
    return p;
}

// Clean labeling drawn top-down; exclusion cliques among siblings pick at
// most one active member.
BitVec draw_clean_labeling(const HexGraph& g, const std::vector<int>& order, double p_root,
                           double p_child, Rng& rng) {
    BitVec y(g.d, 0);
    std::vector<std::uint8_t> excluded_sibling(g.d, 0);
    for (const auto& [i, j] : g.exclusion_edges)
        if (g.parent[i] >= 0 && g.parent[i] == g.parent[j]) excluded_sibling[i] = excluded_sibling[j] = 1;
    for (int v : order) {
        const int p = g.parent[v];
        if (p < 0) {
            y[v] = rng.bernoulli(p_root) ? 1 : 0;
            continue;
        }
        if (!y[p]) continue;
        if (excluded_sibling[v]) continue;  // handled as a group below
        y[v] = rng.bernoulli(p_child) ? 1 : 0;
    }
    // one draw per exclusion group (the mutually exclusive children of an
    // active parent): pick a member or none, uniformly
    for (int p = 0; p < g.d; ++p) {
        std::vector<int> group;
        for (int c : g.children[p])
            if (excluded_sibling[c]) group.push_back(c);
        if (group.empty()) continue;
        if (!y[p]) continue;
        const int pick = rng.uniform_int(static_cast<int>(group.size()) + 1);
        if (pick < static_cast<int>(group.size())) y[group[pick]] = 1;
    }
    return y;
}

void legalize(const HexGraph& g, const std::vector<int>& order, BitVec* y) {
    for (int v : order) {
        const int p = g.parent[v];
        if (p >= 0 && !(*y)[p]) (*y)[v] = 0;
    }
    for (const auto& [i, j] : g.exclusion_edges)
        if ((*y)[i] && (*y)[j]) (*y)[std::max(i, j)] = 0;
    for (int v : order) {
        const int p = g.parent[v];
        if (p >= 0 && !(*y)[p]) (*y)[v] = 0;
    }
}

Dataset gen_samples(const SyntheticConfig& cfg, const Prototypes& proto,
                    const std::vector<int>& order, int n, Rng& rng) {
    Dataset ds;
    ds.x.reserve(n);
    ds.y.reserve(n);
    std::vector<std::uint8_t> hard(cfg.graph.d, 0);
    for (int i : cfg.hard_nodes) {
        if (i < 0 || i >= cfg.graph.d) throw IndexError("synth_dataset: hard node out of range");
        hard[i] = 1;
    }
    for (int s = 0; s < n; ++s) {
        const BitVec clean = draw_clean_labeling(cfg.graph, order, cfg.p_root, cfg.p_child, rng);
        Vec x(cfg.feature_dim, 0.0);
        for (int i = 0; i < cfg.graph.d; ++i)
            if (clean[i]) kernels::axpy(x.data(), 1.0, proto.node[i].data(), x.size());
        for (int j = 0; j < cfg.feature_dim; ++j) x[j] += cfg.feature_noise * rng.normal();
        BitVec y = clean;
        for (int i = 0; i < cfg.graph.d; ++i) {
            const double pf = hard[i] ? cfg.hard_noise : cfg.noise;
            if (pf > 0.0 && rng.bernoulli(pf)) y[i] = static_cast<std::uint8_t>(1 - y[i]);
        }
        legalize(cfg.graph, order, &y);
        ds.x.push_back(std::move(x));
        ds.y.push_back(std::move(y));
    }
    return ds;
}

void check_synth(const SyntheticConfig& cfg) {
    if (!cfg.graph.is_forest || !cfg.graph.is_rooted_tree)
        throw NotATree("synth_dataset: graph must be a rooted tree");
    if (cfg.noise < 0.0 || cfg.noise >= 0.5 || cfg.hard_noise < 0.0 || cfg.hard_noise >= 0.5)
        throw RangeError("synth_dataset: flip probabilities must lie in [0, 0.5)");
    if (cfg.feature_dim < 1) throw RangeError("synth_dataset: feature_dim must be positive");
}

} // namespace

std::pair<Dataset, Dataset> synth_dataset(const SyntheticConfig& cfg) {
    check_synth(cfg);
    const Prototypes proto = make_prototypes(cfg);
    const std::vector<int> order = topo_order(cfg.graph);
    Rng rng_train(Rng::substream(cfg.seed, 1));
    Rng rng_test(Rng::substream(cfg.seed, 2));
    Dataset train = gen_samples(cfg, proto, order, cfg.n_train, rng_train);
    Dataset test = gen_samples(cfg, proto, order, cfg.n_test, rng_test);
    return {std::move(train), std::move(test)};
}

double plain_hamming(const BitVec& a, const BitVec& b) {
    if (a.size() != b.size()) throw DimensionError("plain_hamming: length mismatch");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] != b[i] ? 1.0 : 0.0;
    return s / static_cast<double>(a.size());
}

double hamming_excluding_abstained(const AbstainedPrediction& pred, const BitVec& y,
                                   HammingExclusion mode, const HexGraph& g) {
    if (static_cast<int>(y.size()) != g.d || static_cast<int>(pred.y_h.size()) != g.d)
        throw DimensionError("hamming_excluding_abstained: length mismatch");
    int kept = 0;
    int wrong = 0;
    for (int i = 0; i < g.d; ++i) {
        if (pred.y_r[i] == 0) continue;
        if (mode == HammingExclusion::Right) {
            const int p = g.parent[i];
            if (p >= 0 && pred.y_r[p] == 0) continue;
        }
        ++kept;
        if (pred.y_h[i] != y[i]) ++wrong;
    }
    if (kept == 0) return 0.0;
    return static_cast<double>(wrong) / static_cast<double>(kept);
}

double micro_f1(const std::vector<AbstainedPrediction>& preds, const std::vector<BitVec>& truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw DimensionError("micro_f1: empty or mismatched inputs");
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        const auto& p = preds[s];
        const auto& t = truths[s];
        if (p.y_h.size() != t.size()) throw DimensionError("micro_f1: length mismatch");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (p.y_r[i] == 0) continue;  // abstained nodes excluded from both counts
            if (p.y_h[i] && t[i]) ++tp;
            else if (p.y_h[i] && !t[i]) ++fp;
            else if (!p.y_h[i] && t[i]) ++fn;
        }
    }
    const double den = 2.0 * tp + fp + fn;
    return den == 0.0 ? 1.0 : 2.0 * tp / den;
}

Vec abstention_representation(const AbstainedPrediction& pred) {
    Vec v(pred.y_h.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = static_cast<double>(pred.y_h[i]) - (1.0 - static_cast<double>(pred.y_r[i]));
    return v;
}

SweepResult sweep_abstention(const TrainedSurrogate& model, const HexGraph& g,
                             const std::vector<double>& c, const Dataset& test,
                             const Vec& K_A_grid, const Vec& K_Ac_grid,
                             const DecodeOptions& base_opt, int jobs) {
    if (K_A_grid.empty() || K_Ac_grid.empty()) throw RangeError("sweep_abstention: empty grid");
    const int n = static_cast<int>(test.x.size());
    if (n == 0) throw DataError("sweep_abstention: empty test set");

    std::vector<Vec> psi_hat(n);
    parallel_for(n, jobs, [&](int i) { psi_hat[i] = g_hat(model, test.x[i]); });

    Vec kas = K_A_grid, kacs = K_Ac_grid;
    std::sort(kas.begin(), kas.end());
    std::sort(kacs.begin(), kacs.end());

    SweepResult out;
    for (const double kac : kacs) {
        // the K_A-linear part of the cost matrix, shared along the row
        const LossSpec at0 = haloss_spec(g, c, 0.0, kac);
        const LossSpec at1 = haloss_spec(g, c, 1.0, kac);
        Matrix c_abst = at1.C;
        for (std::size_t i = 0; i < c_abst.a.size(); ++i) c_abst.a[i] -= at0.C.a[i];

        for (const double ka : kas) {
            const LossSpec spec = haloss_spec(g, c, ka, kac);
            SweepCell cell;
            cell.K_A = ka;
            cell.K_Ac = kac;
            Vec abst(n), hl(n), hr(n), coeff(n);
            parallel_for(n, jobs, [&](int i) {
                const BnbReport rep = decode_psi(spec, g, psi_hat[i], base_opt);
                const auto& pred = rep.optimum;
                int cnt = 0;
                for (auto r : pred.y_r)
                    if (r == 0) ++cnt;
                abst[i] = cnt;
                hl[i] = hamming_excluding_abstained(pred, test.y[i], HammingExclusion::Left, g);
                hr[i] = hamming_excluding_abstained(pred, test.y[i], HammingExclusion::Right, g);
                const Vec a = psi_a(spec, pred.y_h, pred.y_r);
                const Vec ca = matvec(c_abst, a);
                coeff[i] = kernels::dot(psi_hat[i].data(), ca.data(), ca.size());
            });
            for (int i = 0; i < n; ++i) {
                cell.mean_abstentions += abst[i];
                cell.hamming_left += hl[i];
                cell.hamming_right += hr[i];
                cell.weighted_abstention_coeff += coeff[i];
            }
            cell.mean_abstentions /= n;
            cell.hamming_left /= n;
            cell.hamming_right /= n;
            cell.weighted_abstention_coeff /= n;
            out.cells.push_back(cell);
        }
    }
    return out;
}

namespace {

Vec mean_representation(const std::vector<Vec>& reps) {
    if (reps.empty()) throw DataError("star_pipeline: empty review group");
    Vec m(reps[0].size(), 0.0);
    for (const auto& r : reps) kernels::axpy(m.data(), 1.0, r.data(), m.size());
    for (auto& v : m) v /= static_cast<double>(reps.size());
    return m;
}

struct StarRegressor {
    Vec w;
    double intercept = 0.0;
    double predict(const Vec& z) const {
        return intercept + kernels::dot(w.data(), z.data(), z.size());
    }
};

StarRegressor fit_star(const std::vector<Vec>& zs, const Vec& t, double lambda) {
    const int n = static_cast<int>(zs.size());
    const int d = static_cast<int>(zs[0].size());
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= n;
    Matrix a(d, d);
    Vec rhs(d, 0.0);
    for (int s = 0; s < n; ++s) {
        for (int i = 0; i < d; ++i) {
            rhs[i] += zs[s][i] * (t[s] - mean);
            for (int j = i; j < d; ++j) a(i, j) += zs[s][i] * zs[s][j];
        }
    }
    for (int i = 0; i < d; ++i) {
        a(i, i) += lambda;
        for (int j = 0; j < i; ++j) a(i, j) = a(j, i);
    }
    StarRegressor r;
    r.w = cholesky_solve(cholesky(a), rhs);
    r.intercept = mean;
    return r;
}

double round_to_scale(double v) {
    if (v > 0.5) return 1.0;
    if (v < -0.5) return -1.0;
    return 0.0;
}

Vec true_representation(const BitVec& y) {
    Vec v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i];
    return v;
}

} // namespace

StarPipelineResult star_pipeline(const ReviewSet& train, const ReviewSet& test,
                                 const SentenceDecoder& plain_decoder,
                                 const SentenceDecoder& abstain_decoder,
                                 const HexGraph& g, double ridge_lambda, int jobs) {
    if (train.empty() || test.empty()) throw DataError("star_pipeline: empty review set");
    const int n_aspects_overall = static_cast<int>(train[0].ratings.size());
    for (const auto& r : train)
        if (static_cast<int>(r.ratings.size()) != n_aspects_overall)
            throw DimensionError("star_pipeline: inconsistent rating widths");

    // star regressors fitted on averaged true sentence representations
    std::vector<Vec> z_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        std::vector<Vec> reps;
        reps.reserve(train[i].sentence_y.size());
        for (const auto& y : train[i].sentence_y) reps.push_back(true_representation(y));
        z_train[i] = mean_representation(reps);
    }
    std::vector<StarRegressor> regs(n_aspects_overall);
    for (int a = 0; a < n_aspects_overall; ++a) {
        Vec t(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) t[i] = train[i].ratings[a];
        regs[a] = fit_star(z_train, t, ridge_lambda);
    }

    // decode all test sentences once per mode
    std::vector<std::vector<AbstainedPrediction>> plain(test.size()), withabst(test.size());
    parallel_for(static_cast<int>(test.size()), jobs, [&](int i) {
        plain[i].reserve(test[i].sentence_x.size());
        withabst[i].reserve(test[i].sentence_x.size());
        for (const auto& x : test[i].sentence_x) {
            plain[i].push_back(plain_decoder(x));
            withabst[i].push_back(abstain_decoder(x));
        }
    });

    StarPipelineResult res;
    res.mae_oracle.assign(n_aspects_overall, 0.0);
    res.mae_predicted.assign(n_aspects_overall, 0.0);
    res.mae_abstention.assign(n_aspects_overall, 0.0);

    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& rv = test[i];
        if (static_cast<int>(rv.ratings.size()) != n_aspects_overall)
            throw DimensionError("star_pipeline: inconsistent rating widths");
        std::vector<Vec> oracle_reps, plain_reps, abst_reps;
        for (std::size_t s = 0; s < rv.sentence_y.size(); ++s) {
            oracle_reps.push_back(true_representation(rv.sentence_y[s]));
            plain_reps.push_back(true_representation(plain[i][s].y_h));
            abst_reps.push_back(abstention_representation(withabst[i][s]));
        }
        const Vec zo = mean_representation(oracle_reps);
        const Vec zp = mean_representation(plain_reps);
        const Vec za = mean_representation(abst_reps);
        for (int a = 0; a < n_aspects_overall; ++a) {
            res.mae_oracle[a] += std::abs(round_to_scale(regs[a].predict(zo)) - rv.ratings[a]);
            res.mae_predicted[a] += std::abs(round_to_scale(regs[a].predict(zp)) - rv.ratings[a]);
            res.mae_abstention[a] += std::abs(round_to_scale(regs[a].predict(za)) - rv.ratings[a]);
        }
    }
    for (int a = 0; a < n_aspects_overall; ++a) {
        res.mae_oracle[a] /= static_cast<double>(test.size());
        res.mae_predicted[a] /= static_cast<double>(test.size());
        res.mae_abstention[a] /= static_cast<double>(test.size());
        res.macro_oracle += res.mae_oracle[a];
        res.macro_predicted += res.mae_predicted[a];
        res.macro_abstention += res.mae_abstention[a];
    }
    res.macro_oracle /= n_aspects_overall;
    res.macro_predicted /= n_aspects_overall;
    res.macro_abstention /= n_aspects_overall;

    // sentence-level polarity error on true-positive aspects (plain path)
    long cnt = 0;
    double acc = 0.0;
    const auto polarity_value = [&](const BitVec& y, int aspect) {
        const auto& ch = g.children[aspect];
        double v = 0.0;
        if (!ch.empty() && y[ch[0]]) v += 1.0;
        if (ch.size() >= 2 && y[ch[1]]) v -= 1.0;
        return v;
    };
    for (std::size_t i = 0; i < test.size(); ++i)
        for (std::size_t s = 0; s < test[i].sentence_y.size(); ++s) {
            const auto& truth = test[i].sentence_y[s];
            const auto& hy = plain[i][s].y_h;
            for (int aspect : aspect_nodes(g)) {
                if (!truth[aspect] || !hy[aspect]) continue;
                acc += std::abs(polarity_value(hy, aspect) - polarity_value(truth, aspect));
                ++cnt;
            }
        }
    res.sentence_polarity_mae = cnt == 0 ? 0.0 : acc / static_cast<double>(cnt);
    return res;
}

ReviewSet synth_reviews(const SyntheticConfig& cfg, int n_reviews, int overall_aspects,
                        std::uint64_t seed) {
    check_synth(cfg);
    const std::vector<int> aspects = aspect_nodes(cfg.graph);
    if (overall_aspects < 1 || overall_aspects > static_cast<int>(aspects.size()))
        throw RangeError("synth_reviews: overall aspect count out of range");
    const Prototypes proto = make_prototypes(cfg);
    const std::vector<int> order = topo_order(cfg.graph);
    Rng rng(Rng::substream(cfg.seed, seed + 100));
    ReviewSet out;
    out.reserve(n_reviews);
    for (int r = 0; r < n_reviews; ++r) {
        Review rv;
        rv.id = r;
        const int n_sent = 3 + rng.uniform_int(6);
        const Dataset sents = gen_samples(cfg, proto, order, n_sent, rng);
        rv.sentence_x = sents.x;
        rv.sentence_y = sents.y;
        rv.ratings.assign(overall_aspects, 0.0);
        for (int a = 0; a < overall_aspects; ++a) {
            const int aspect = aspects[a];
            const auto& ch = cfg.graph.children[aspect];
            double score = 0.0;
            int mentions = 0;
            for (const auto& y : rv.sentence_y) {
                if (y[aspect]) ++mentions;
                if (!ch.empty() && y[ch[0]]) score += 1.0;
                if (ch.size() >= 2 && y[ch[1]]) score -= 1.0;
            }
            score /= std::max(1, mentions);
            rv.ratings[a] = score > 0.15 ? 1.0 : (score < -0.15 ? -1.0 : 0.0);
        }
        out.push_back(std::move(rv));
    }
    return out;
}

RiskBoundResult risk_bound_check(const FiniteWorld& world, const std::vector<Vec>& g_estimate) {
    const int nx = static_cast<int>(world.xs.size());
    if (nx == 0 || static_cast<int>(world.px.size()) != nx ||
        static_cast<int>(world.cond.size()) != nx || g_estimate.size() != world.xs.size())
        throw DimensionError("risk_bound_check: inconsistent world");

    PredSpaceOptions ps;
    ps.cap = std::max(10, world.g.d);
    const auto preds = enumerate_prediction_space(world.g, ps);
    if (preds.empty()) throw CapExceeded("risk_bound_check: empty prediction space");

    std::vector<Vec> psi_a_all(preds.size());
    double max_psi_a = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        psi_a_all[i] = psi_a(world.spec, preds[i].y_h, preds[i].y_r);
        max_psi_a = std::max(max_psi_a, norm2(psi_a_all[i]));
    }
    std::vector<Vec> psi_wa_all(world.states.size());
    for (std::size_t s = 0; s < world.states.size(); ++s)
        psi_wa_all[s] = psi_wa(world.spec, world.states[s].y);

    const double c_l = spectral_norm(world.spec.C) * max_psi_a;

    // exact argmin of <C psi_a, v> over the prediction space; first (lexico-
    // graphically smallest) strict minimizer kept
    const auto best_pred = [&](const Vec& v) {
        const Vec t = matvec_t(world.spec.C, v);
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const double obj = kernels::dot(t.data(), psi_a_all[i].data(), t.size());
            if (i == 0 || obj < best) {
                best = obj;
                arg = i;
            }
        }
        return arg;
    };

    RiskBoundResult out;
    double l_hat = 0.0, l_star = 0.0;
    for (int k = 0; k < nx; ++k) {
        if (static_cast<int>(world.cond[k].size()) != static_cast<int>(world.states.size()))
            throw DimensionError("risk_bound_check: conditional size mismatch");
        Vec gstar(world.spec.q, 0.0);
        for (std::size_t s = 0; s < world.states.size(); ++s)
            kernels::axpy(gstar.data(), world.cond[k][s], psi_wa_all[s].data(), gstar.size());

        const std::size_t sel_hat = best_pred(g_estimate[k]);
        const std::size_t sel_star = best_pred(gstar);
        const Vec t_star = matvec_t(world.spec.C, gstar);
        const double risk_hat = kernels::dot(t_star.data(), psi_a_all[sel_hat].data(), t_star.size());
        const double risk_star = kernels::dot(t_star.data(), psi_a_all[sel_star].data(), t_star.size());
        out.excess += world.px[k] * (risk_hat - risk_star);

        for (std::size_t s = 0; s < world.states.size(); ++s) {
            const double pr = world.px[k] * world.cond[k][s];
            if (pr == 0.0) continue;
            double dh = 0.0, ds = 0.0;
            for (int j = 0; j < world.spec.q; ++j) {
                const double eh = psi_wa_all[s][j] - g_estimate[k][j];
                const double es = psi_wa_all[s][j] - gstar[j];
                dh += eh * eh;
                ds += es * es;
            }
            l_hat += pr * dh;
            l_star += pr * ds;
        }
    }
    out.surrogate_excess = l_hat - l_star;
    out.c_l = c_l;
    out.bound = 2.0 * c_l * std::sqrt(std::max(0.0, out.surrogate_excess));
    out.holds = out.excess <= out.bound + 1e-12 * (1.0 + std::abs(out.bound));
    return out;
}

} // namespace abst
