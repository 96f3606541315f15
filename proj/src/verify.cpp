#include "abst/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abst/decode.hpp"
#include "abst/errors.hpp"

namespace abst {

double loss_equality_gap(const LossSpec& spec, const HexGraph& g) {
    const auto states = enumerate_state_space(g, std::max(20, g.d));
    PredSpaceOptions ps;
    ps.cap = std::max(10, g.d);
    const auto preds = enumerate_prediction_space(g, ps);
    double gap = 0.0;
    for (const auto& st : states)
        for (const auto& pr : preds) {
            const double a = loss_direct(spec, pr.y_h, pr.y_r, st.y);
            const double b = loss_innerproduct(spec, pr.y_h, pr.y_r, st.y);
            gap = std::max(gap, std::abs(a - b));
        }
    return gap;
}

std::vector<std::pair<HexGraph, std::string>> oracle_tree_family(int max_d) {
    std::vector<std::pair<HexGraph, std::string>> fam;
    auto add = [&](HexGraph g, const std::string& name) {
        if (g.d <= max_d) fam.emplace_back(std::move(g), name);
    };
    add(validate_graph(1, {}, {}), "single");
    add(validate_graph(2, {{0, 1}}, {}), "chain2");
    add(validate_graph(3, {{0, 1}, {1, 2}}, {}), "chain3");
    add(validate_graph(3, {{0, 1}, {0, 2}}, {}), "star2");
    add(validate_graph(4, {{0, 1}, {0, 2}, {0, 3}}, {}), "star3");
    add(validate_graph(4, {{0, 1}, {1, 2}, {1, 3}}, {}), "y4");
    add(validate_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, {}), "chain5");
    add(opinion_tree(2, 1, false), "opinion_2_1");
    add(validate_graph(5, {{0, 1}, {0, 2}, {1, 3}, {1, 4}}, {}), "mixed5");
    return fam;
}

std::vector<HexGraph> all_rooted_trees(int max_d) {
    std::vector<HexGraph> out;
    for (int d = 1; d <= max_d; ++d) {
        std::vector<int> parent(d, -1);
        const std::function<void(int)> rec = [&](int i) {
            if (i == d) {
                std::vector<std::pair<int, int>> hier;
                for (int v = 1; v < d; ++v) hier.emplace_back(parent[v], v);
                out.push_back(validate_graph(d, hier, {}));
                return;
            }
            for (int p = 0; p < i; ++p) {
                parent[i] = p;
                rec(i + 1);
            }
        };
        rec(1);
    }
    return out;
}

HexGraph random_tree(int d, Rng& rng) {
    std::vector<std::pair<int, int>> hier;
    for (int i = 1; i < d; ++i) hier.emplace_back(rng.uniform_int(i), i);
    return validate_graph(d, hier, {});
}

LossSpec random_spec_for(LossKind kind, const HexGraph& g, Rng& rng) {
    switch (kind) {
        case LossKind::BinaryAbstention:
            return binary_abstention_spec(0.5 * rng.uniform());
        case LossKind::Hamming:
            return hamming_spec(g.d);
        case LossKind::HLoss:
            return hloss_spec(g, sibling_weights(g));
        case LossKind::HaLoss:
            return haloss_spec(g, sibling_weights(g), 0.6 * rng.uniform(), 0.8 * rng.uniform());
    }
    throw RangeError("random_spec_for: bad kind");
}

Vec random_psi(const LossSpec& spec, Rng& rng) {
    Vec v(spec.q);
    for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
    return v;
}

FiniteWorld random_world(Rng& rng, int max_inputs, int max_d) {
    FiniteWorld w;
    const int d = 1 + rng.uniform_int(max_d);
    w.g = random_tree(d, rng);
    switch (rng.uniform_int(3)) {
        case 0: w.spec = hamming_spec(d); break;
        case 1: w.spec = hloss_spec(w.g, sibling_weights(w.g)); break;
        default:
            w.spec = haloss_spec(w.g, sibling_weights(w.g), 0.5 * rng.uniform(), 0.8 * rng.uniform());
            break;
    }
    w.states = enumerate_state_space(w.g);
    const int nx = 1 + rng.uniform_int(max_inputs);
    double z = 0.0;
    for (int k = 0; k < nx; ++k) {
        w.xs.push_back(Vec{static_cast<double>(k)});
        w.px.push_back(0.05 + rng.uniform());
        z += w.px.back();
        Vec cond(w.states.size());
        double cz = 0.0;
        for (auto& v : cond) {
            v = 0.01 + rng.uniform();
            cz += v;
        }
        for (auto& v : cond) v /= cz;
        w.cond.push_back(std::move(cond));
    }
    for (auto& v : w.px) v /= z;
    return w;
}

namespace {

using Status = SuiteResult::Status;

SuiteResult loss_representation_suite(const VerifyOptions& opt) {
    SuiteResult r{.name = "loss-representation-oracle", .status = Status::Pass, .detail = ""};
    const auto fam = oracle_tree_family(std::min(opt.tree_max_d, opt.pred_cap));
    if (fam.empty()) {
        r.status = Status::Skip;
        r.detail = "enumeration cap below the smallest oracle tree";
        return r;
    }
    double worst = 0.0;
    long cases = 0;
    for (const auto& [g, name] : fam) {
        std::vector<LossSpec> specs;
        specs.push_back(hamming_spec(g.d));
        specs.push_back(hloss_spec(g, sibling_weights(g)));
        specs.push_back(haloss_spec(g, sibling_weights(g), 0.3, 0.45));
        specs.push_back(haloss_spec(g, sibling_weights(g), 0.0, 0.0));
        if (g.d == 1)
            for (double c : {0.0, 0.25, 0.3, 0.5}) specs.push_back(binary_abstention_spec(c));
        for (const auto& spec : specs) {
            const double gap = loss_equality_gap(spec, g);
            worst = std::max(worst, gap);
            ++cases;
            if (gap > 1e-12) {
                r.status = Status::Fail;
                std::ostringstream os;
                os << "gap " << gap << " on tree " << name << " kind " << loss_kind_name(spec.kind);
                r.detail = os.str();
                return r;
            }
        }
    }
    std::ostringstream os;
    os << cases << " spec/tree pairs, max gap " << worst;
    r.detail = os.str();
    return r;
}

SuiteResult decoder_oracle_suite(const VerifyOptions& opt) {
    SuiteResult r{.name = "decoder-vs-brute-force", .status = Status::Pass, .detail = ""};
    const int max_d = std::min(opt.decoder_max_d, opt.pred_cap);
    if (max_d < 1) {
        r.status = Status::Skip;
        r.detail = "enumeration cap below the smallest decodable tree";
        return r;
    }
    Rng rng(Rng::substream(opt.seed, 1));
    double worst = 0.0;
    long total = 0;
    for (const LossKind kind : {LossKind::BinaryAbstention, LossKind::Hamming, LossKind::HLoss,
                                 LossKind::HaLoss}) {
        for (int it = 0; it < opt.decoder_instances; ++it) {
            const int d = kind == LossKind::BinaryAbstention ? 1 : 1 + rng.uniform_int(max_d);
            const HexGraph g = random_tree(d, rng);
            const LossSpec spec = random_spec_for(kind, g, rng);
            const Vec psi = random_psi(spec, rng);
            DecodeOptions dopt;
            dopt.brute_cap = std::max(10, max_d);
            dopt.strict_hierarchy = rng.uniform() < 0.2;
            const auto [bf_pred, bf_obj] = brute_force_decode(spec, g, psi, dopt);
            const BnbReport rep = decode_psi(spec, g, psi, dopt);
            const double gap = std::abs(rep.objective_value - bf_obj);
            worst = std::max(worst, gap);
            ++total;
            const bool feas =
                prediction_feasible(g, rep.optimum.y_h, rep.optimum.y_r, dopt.space_options(g.d));
            if (gap > 1e-9 || !feas) {
                r.status = Status::Fail;
                std::ostringstream os;
                os << "kind " << loss_kind_name(kind) << " d " << d << " gap " << gap
                   << (feas ? "" : " infeasible point");
                r.detail = os.str();
                return r;
            }
        }
    }
    std::ostringstream os;
    os << total << " instances, max objective gap " << worst;
    r.detail = os.str();
    return r;
}

SuiteResult lp_integrality_suite(const VerifyOptions& opt) {
    SuiteResult r{.name = "hloss-root-lp-integrality", .status = Status::Pass, .detail = ""};
    Rng rng(Rng::substream(opt.seed, 2));
    for (int it = 0; it < opt.lp_instances; ++it) {
        const int d = 2 + rng.uniform_int(9);
        const HexGraph g = random_tree(d, rng);
        const LossSpec spec = hloss_spec(g, sibling_weights(g));
        const Vec psi = random_psi(spec, rng);
        DecodeOptions dopt;
        dopt.no_abstention = true;
        const IlpInstance inst = build_ilp(spec, g, psi, dopt);
        const LpRelaxation relax = solve_lp_relaxation(inst);
        const BnbReport rep = branch_and_bound(inst);
        if (!relax.integral || !rep.lp_integral_at_root || rep.nodes_explored != 1) {
            r.status = Status::Fail;
            std::ostringstream os;
            os << "instance " << it << " d " << d << " integral " << relax.integral << " nodes "
               << rep.nodes_explored;
            r.detail = os.str();
            return r;
        }
    }
    std::ostringstream os;
    os << opt.lp_instances << " no-abstention instances, all integral at the root";
    r.detail = os.str();
    return r;
}

SuiteResult theorem_bound_suite(const VerifyOptions& opt) {
    SuiteResult r{.name = "excess-risk-bound", .status = Status::Pass, .detail = ""};
    if (opt.pred_cap < 4) {
        r.status = Status::Skip;
        r.detail = "enumeration cap below the world sizes";
        return r;
    }
    Rng rng(Rng::substream(opt.seed, 3));
    const double eps[] = {0.0, 0.01, 0.1, 1.0};
    for (int it = 0; it < opt.worlds; ++it) {
        const FiniteWorld w = random_world(rng, 5, 4);
        std::vector<Vec> ghat(w.xs.size());
        const double e = eps[it % 4];
        for (std::size_t k = 0; k < w.xs.size(); ++k) {
            Vec gstar(w.spec.q, 0.0);
            for (std::size_t s = 0; s < w.states.size(); ++s) {
                const Vec wa = psi_wa(w.spec, w.states[s].y);
                for (int j = 0; j < w.spec.q; ++j) gstar[j] += w.cond[k][s] * wa[j];
            }
            for (int j = 0; j < w.spec.q; ++j) gstar[j] += e * rng.normal();
            ghat[k] = std::move(gstar);
        }
        const RiskBoundResult res = risk_bound_check(w, ghat);
        if (!res.holds) {
            r.status = Status::Fail;
            std::ostringstream os;
            os << "world " << it << " excess " << res.excess << " bound " << res.bound;
            r.detail = os.str();
            return r;
        }
    }
    std::ostringstream os;
    os << opt.worlds << " finite worlds, inequality held in every case";
    r.detail = os.str();
    return r;
}

} // namespace

std::vector<SuiteResult> run_verify(const VerifyOptions& opt) {
    std::vector<SuiteResult> out;
    out.push_back(loss_representation_suite(opt));
    out.push_back(decoder_oracle_suite(opt));
    out.push_back(lp_integrality_suite(opt));
    out.push_back(theorem_bound_suite(opt));
    return out;
}

std::string format_verify_report(const std::vector<SuiteResult>& results) {
    std::ostringstream os;
    for (const auto& r : results) {
        const char* tag = r.status == SuiteResult::Status::Pass   ? "PASS"
                          : r.status == SuiteResult::Status::Fail ? "FAIL"
                                                                  : "SKIP";
        os << tag << " " << r.name;
        if (!r.detail.empty()) os << " (" << r.detail << ")";
        os << "\n";
    }
    return os.str();
}

bool verify_failed(const std::vector<SuiteResult>& results) {
    for (const auto& r : results)
        if (r.status == SuiteResult::Status::Fail) return true;
    return false;
}

} // namespace abst
