#include "abst/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

#include "abst/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace abst::io {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() /
                         (target.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.good()) {
            out.close();
            fs::remove(tmp);
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("rename failed for " + target.string() + ": " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {

bool has_json_extension(const std::string& path) {
    return path.size() >= 5 && path.substr(path.size() - 5) == ".json";
}

json parse_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError("bad json in " + path + ": " + e.what());
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_num(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw DataError("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("bad number '" + s + "' in " + where);
    }
}

} // namespace

void save_graph(const HexGraph& g, const std::string& path) {
    if (has_json_extension(path)) {
        json j;
        j["d"] = g.d;
        j["hierarchy"] = json::array();
        for (const auto& [p, c] : g.hierarchy_edges) j["hierarchy"].push_back({p, c});
        j["exclusion"] = json::array();
        for (const auto& [a, b] : g.exclusion_edges) j["exclusion"].push_back({a, b});
        write_file_atomic(path, j.dump(2) + "\n");
        return;
    }
    std::ostringstream os;
    os << "d=" << g.d << "\n";
    for (const auto& [p, c] : g.hierarchy_edges) os << "h " << p << " " << c << "\n";
    for (const auto& [a, b] : g.exclusion_edges) os << "e " << a << " " << b << "\n";
    write_file_atomic(path, os.str());
}

HexGraph load_graph(const std::string& path) {
    if (has_json_extension(path)) {
        const json j = parse_json(path);
        std::vector<std::pair<int, int>> hier, excl;
        for (const auto& e : j.value("hierarchy", json::array()))
            hier.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        for (const auto& e : j.value("exclusion", json::array()))
            excl.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        return validate_graph(j.at("d").get<int>(), hier, excl);
    }
    std::istringstream in(read_file(path));
    std::string line;
    int d = -1;
    std::vector<std::pair<int, int>> hier, excl;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("d=", 0) == 0) {
            d = static_cast<int>(parse_num(line.substr(2), path));
            continue;
        }
        std::istringstream ls(line);
        char tag;
        int a, b;
        if (!(ls >> tag >> a >> b) || (tag != 'h' && tag != 'e'))
            throw DataError("bad graph line '" + line + "' in " + path);
        (tag == 'h' ? hier : excl).emplace_back(a, b);
    }
    if (d <= 0) throw DataError("graph file missing d=: " + path);
    return validate_graph(d, hier, excl);
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ostringstream os;
    for (std::size_t i = 0; i < ds.x.size(); ++i) {
        for (std::size_t j = 0; j < ds.x[i].size(); ++j) {
            if (j) os << ",";
            os << format_double(ds.x[i][j]);
        }
        if (i < ds.y.size() && !ds.y[i].empty()) {
            os << "|";
            for (std::size_t j = 0; j < ds.y[i].size(); ++j) {
                if (j) os << ",";
                os << static_cast<int>(ds.y[i][j]);
            }
        }
        os << "\n";
    }
    write_file_atomic(path, os.str());
}

Dataset load_dataset(const std::string& path) {
    std::istringstream in(read_file(path));
    Dataset ds;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto bar = line.find('|');
        const std::string feat = bar == std::string::npos ? line : line.substr(0, bar);
        Vec x;
        for (const auto& tok : split(feat, ',')) x.push_back(parse_num(tok, path));
        ds.x.push_back(std::move(x));
        if (bar != std::string::npos) {
            BitVec y;
            for (const auto& tok : split(line.substr(bar + 1), ',')) {
                const double v = parse_num(tok, path);
                if (v != 0.0 && v != 1.0) throw DataError("label not binary in " + path);
                y.push_back(static_cast<std::uint8_t>(v));
            }
            ds.y.push_back(std::move(y));
        }
    }
    if (!ds.y.empty() && ds.y.size() != ds.x.size())
        throw DataError("mixed labeled/unlabeled rows in " + path);
    return ds;
}

void save_model(const TrainedSurrogate& m, const std::string& path) {
    json j;
    j["kernel"]["kind"] = m.kernel.kind == KernelKind::Linear ? "linear" : "gaussian";
    j["kernel"]["gamma"] = m.kernel.gamma;
    j["lambda"] = m.lambda;
    j["x_train"] = m.x_train;
    j["psi_train"]["rows"] = m.psi_train.rows;
    j["psi_train"]["cols"] = m.psi_train.cols;
    j["psi_train"]["data"] = m.psi_train.a;
    write_file_atomic(path, j.dump() + "\n");
}

TrainedSurrogate load_model(const std::string& path) {
    const json j = parse_json(path);
    try {
        KernelConfig k;
        const std::string kind = j.at("kernel").at("kind").get<std::string>();
        if (kind == "linear") k.kind = KernelKind::Linear;
        else if (kind == "gaussian") k.kind = KernelKind::Gaussian;
        else throw DataError("unknown kernel kind in " + path);
        k.gamma = j.at("kernel").at("gamma").get<double>();
        const double lambda = j.at("lambda").get<double>();
        const auto xs = j.at("x_train").get<std::vector<Vec>>();
        Matrix psi(j.at("psi_train").at("rows").get<int>(), j.at("psi_train").at("cols").get<int>());
        psi.a = j.at("psi_train").at("data").get<Vec>();
        if (psi.a.size() != static_cast<std::size_t>(psi.rows) * psi.cols)
            throw DataError("psi_train size mismatch in " + path);
        return fit_ridge(k, xs, psi, lambda);
    } catch (const json::exception& e) {
        throw DataError("bad model file " + path + ": " + e.what());
    }
}

void save_loss_spec(const LossSpec& s, const std::string& path) {
    json j;
    j["kind"] = loss_kind_name(s.kind);
    j["d"] = s.d;
    j["q"] = s.q;
    j["p"] = s.p;
    j["c"] = s.c;
    j["K_A"] = s.K_A;
    j["K_Ac"] = s.K_Ac;
    j["parent"] = s.parent;
    j["C"] = s.C.a;  // row-major q x p
    // dense M, row-major p x (2d + d^2 + 1)
    const int cols = s.stack_cols();
    std::vector<double> m(static_cast<std::size_t>(s.p) * cols, 0.0);
    for (int r = 0; r < s.p; ++r)
        for (const auto& [col, val] : s.M[r]) m[static_cast<std::size_t>(r) * cols + col] += val;
    j["M"] = m;
    j["M_cols"] = cols;
    write_file_atomic(path, j.dump() + "\n");
}

LossSpec load_loss_spec(const std::string& path) {
    const json j = parse_json(path);
    try {
        LossSpec s;
        s.kind = loss_kind_from_name(j.at("kind").get<std::string>());
        s.d = j.at("d").get<int>();
        s.q = j.at("q").get<int>();
        s.p = j.at("p").get<int>();
        s.c = j.at("c").get<std::vector<double>>();
        s.K_A = j.at("K_A").get<double>();
        s.K_Ac = j.at("K_Ac").get<double>();
        s.parent = j.at("parent").get<std::vector<int>>();
        s.children.assign(s.d, {});
        for (int i = 0; i < s.d; ++i) {
            if (s.parent[i] >= 0) {
                s.children[s.parent[i]].push_back(i);
                s.nonroot.push_back(i);
            }
        }
        s.C = Matrix(s.q, s.p);
        s.C.a = j.at("C").get<Vec>();
        if (s.C.a.size() != static_cast<std::size_t>(s.q) * s.p)
            throw DataError("C size mismatch in " + path);
        const int cols = j.at("M_cols").get<int>();
        if (cols != s.stack_cols()) throw DataError("M column count mismatch in " + path);
        const auto m = j.at("M").get<std::vector<double>>();
        if (m.size() != static_cast<std::size_t>(s.p) * cols)
            throw DataError("M size mismatch in " + path);
        s.M.resize(s.p);
        for (int r = 0; r < s.p; ++r)
            for (int c = 0; c < cols; ++c) {
                const double v = m[static_cast<std::size_t>(r) * cols + c];
                if (v != 0.0) s.M[r].emplace_back(c, v);
            }
        return s;
    } catch (const json::exception& e) {
        throw DataError("bad loss spec file " + path + ": " + e.what());
    }
}

void save_sweep_csv(const SweepResult& r, const std::string& path) {
    std::ostringstream os;
    os << "K_A,K_Ac,mean_abstentions,hamming_left,hamming_right,weighted_abstention_coeff\n";
    for (const auto& c : r.cells) {
        os << format_double(c.K_A) << "," << format_double(c.K_Ac) << ","
           << format_double(c.mean_abstentions) << "," << format_double(c.hamming_left) << ","
           << format_double(c.hamming_right) << "," << format_double(c.weighted_abstention_coeff)
           << "\n";
    }
    write_file_atomic(path, os.str());
}

void save_predictions(const std::vector<PredictionRow>& rows, const std::string& path) {
    std::ostringstream os;
    for (const auto& r : rows)
        os << r.composed << " " << format_double(r.objective) << " " << r.nodes << "\n";
    write_file_atomic(path, os.str());
}

void save_reviews(const ReviewSet& rs, const std::string& sentences_path,
                  const std::string& ratings_path) {
    std::ostringstream sos, ros;
    for (const auto& rv : rs) {
        for (std::size_t s = 0; s < rv.sentence_x.size(); ++s) {
            sos << rv.id << ",";
            for (std::size_t j = 0; j < rv.sentence_x[s].size(); ++j) {
                if (j) sos << ",";
                sos << format_double(rv.sentence_x[s][j]);
            }
            sos << "|";
            for (std::size_t j = 0; j < rv.sentence_y[s].size(); ++j) {
                if (j) sos << ",";
                sos << static_cast<int>(rv.sentence_y[s][j]);
            }
            sos << "\n";
        }
        for (std::size_t a = 0; a < rv.ratings.size(); ++a)
            ros << rv.id << "," << a << "," << format_double(rv.ratings[a]) << "\n";
    }
    write_file_atomic(sentences_path, sos.str());
    write_file_atomic(ratings_path, ros.str());
}

ReviewSet load_reviews(const std::string& sentences_path, const std::string& ratings_path) {
    std::map<int, Review> by_id;
    {
        std::istringstream in(read_file(sentences_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto first = line.find(',');
            const auto bar = line.find('|');
            if (first == std::string::npos || bar == std::string::npos || bar < first)
                throw DataError("bad review row in " + sentences_path);
            const int id = static_cast<int>(parse_num(line.substr(0, first), sentences_path));
            Vec x;
            for (const auto& tok : split(line.substr(first + 1, bar - first - 1), ','))
                x.push_back(parse_num(tok, sentences_path));
            BitVec y;
            for (const auto& tok : split(line.substr(bar + 1), ','))
                y.push_back(static_cast<std::uint8_t>(parse_num(tok, sentences_path)));
            Review& rv = by_id[id];
            rv.id = id;
            rv.sentence_x.push_back(std::move(x));
            rv.sentence_y.push_back(std::move(y));
        }
    }
    {
        std::istringstream in(read_file(ratings_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto parts = split(line, ',');
            if (parts.size() != 3) throw DataError("bad rating row in " + ratings_path);
            const int id = static_cast<int>(parse_num(parts[0], ratings_path));
            const int aspect = static_cast<int>(parse_num(parts[1], ratings_path));
            const double rating = parse_num(parts[2], ratings_path);
            auto it = by_id.find(id);
            if (it == by_id.end()) throw DataError("rating for unknown review in " + ratings_path);
            if (static_cast<int>(it->second.ratings.size()) <= aspect)
                it->second.ratings.resize(aspect + 1, 0.0);
            it->second.ratings[aspect] = rating;
        }
    }
    ReviewSet out;
    out.reserve(by_id.size());
    for (auto& [id, rv] : by_id) out.push_back(std::move(rv));
    return out;
}

void dump_lp(const IlpInstance& inst, const std::string& path) {
    const IlpVarMeta& m = inst.meta;
    const auto var_name = [&](int v) -> std::string {
        if (v < m.d) return "h" + std::to_string(v);
        for (int k = 0; k < m.d; ++k)
            if (m.r_var[k] == v) return "r" + std::to_string(k);
        for (std::size_t s = 0; s < m.kron_pairs.size(); ++s)
            if (m.kron_var[s] == v)
                return "c" + std::to_string(m.kron_pairs[s].first) + "_" +
                       std::to_string(m.kron_pairs[s].second);
        return "v" + std::to_string(v);
    };
    std::ostringstream os;
    os << "\\ constant objective offset: " << format_double(inst.objective_offset) << "\n";
    os << "Minimize\n obj:";
    bool first = true;
    for (int v = 0; v < m.nvars; ++v) {
        const double cv = inst.objective[v];
        if (cv == 0.0) continue;
        os << (first ? " " : (cv >= 0 ? " + " : " ")) << format_double(cv) << " " << var_name(v);
        first = false;
    }
    if (first) os << " 0 h0";
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < inst.rows.size(); ++i) {
        os << " c" << i << ":";
        if (inst.rows[i].coef.empty()) os << " 0 h0";
        for (const auto& [v, coef] : inst.rows[i].coef)
            os << " " << (coef >= 0 ? "+" : "") << format_double(coef) << " " << var_name(v);
        os << " <= " << format_double(inst.rows[i].rhs) << "\n";
    }
    os << "Bounds\n";
    for (int v = 0; v < m.nvars; ++v)
        os << " " << format_double(inst.lower[v]) << " <= " << var_name(v)
           << " <= " << format_double(inst.upper[v]) << "\n";
    os << "Binary\n";
    for (int v = 0; v < m.nvars; ++v) os << " " << var_name(v);
    os << "\nEnd\n";
    write_file_atomic(path, os.str());
}

} // namespace abst::io
