#include "coadopt/io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace coadopt {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex_digest(std::uint64_t h) { return fmt::format("{:016x}", h); }

namespace {

constexpr const char* kFields[] = {"beta", "gamma", "delta", "lambda", "xi", "x0"};

template <typename Params>
auto& field(Params& p, std::string_view name) {
    if (name == "beta") return p.beta;
    if (name == "gamma") return p.gamma;
    if (name == "delta") return p.delta;
    if (name == "lambda") return p.lambda;
    if (name == "xi") return p.xi;
    return p.x0;
}

WeightedDigraph parse_graph(const json& j, const char* name, std::size_t n,
                            const std::filesystem::path& base_dir, bool normalize_edges) {
    if (j.is_array()) {
        auto rows = j.get<std::vector<Vec>>();
        if (rows.size() != n) {
            throw InvalidArgument(fmt::format("{}: matrix has {} rows, expected n = {}", name,
                                              rows.size(), n));
        }
        return WeightedDigraph(Matrix::from_rows(rows));
    }
    std::string path;
    bool normalize = normalize_edges;
    if (j.is_string()) {
        path = j.get<std::string>();
    } else if (j.is_object() && j.contains("edges")) {
        path = j.at("edges").get<std::string>();
        normalize = normalize || j.value("normalize", false);
    } else {
        throw InvalidArgument(fmt::format("{}: expected a matrix, an edge-list path or an object with 'edges'", name));
    }
    std::filesystem::path p(path);
    if (p.is_relative()) p = base_dir / p;
    return load_edge_csv(p, n, normalize);
}

}  // namespace

json config_to_json(const ModelConfig& cfg) {
    json doc;
    doc["n"] = cfg.n();
    doc["physical"] = cfg.physical.weights().to_rows();
    doc["social"] = cfg.social.weights().to_rows();
    for (std::size_t k = 0; k < 2; ++k) {
        json t;
        for (const char* f : kFields) t[f] = field(cfg.tech[k], f);
        doc[fmt::format("tech{}", k + 1)] = std::move(t);
    }
    if (cfg.seed) {
        doc["meta"]["seed"] = *cfg.seed;
        doc["meta"]["prng"] = kPrngId;
    }
    return doc;
}

ModelConfig parse_config(const json& doc, const std::filesystem::path& base_dir,
                         bool normalize_edges) {
    try {
        if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");
        const auto n = doc.at("n").get<std::size_t>();
        if (n == 0) throw InvalidArgument("config: n must be positive");
        ModelConfig cfg;
        cfg.physical = parse_graph(doc.at("physical"), "physical", n, base_dir, normalize_edges);
        cfg.social = parse_graph(doc.at("social"), "social", n, base_dir, normalize_edges);
        for (std::size_t k = 0; k < 2; ++k) {
            const json& t = doc.at(fmt::format("tech{}", k + 1));
            for (const char* f : kFields) field(cfg.tech[k], f) = t.at(f).get<Vec>();
        }
        if (doc.contains("meta") && doc["meta"].contains("seed")) {
            cfg.seed = doc["meta"]["seed"].get<std::uint64_t>();
        }
        check_dimensions(cfg);
        return cfg;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument(fmt::format("cannot open '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", path.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InvalidArgument(fmt::format("write to '{}' failed", path.string()));
}

ModelConfig load_config(const std::filesystem::path& path, bool normalize_edges) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidArgument(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_config(doc, path.parent_path(), normalize_edges);
}

void save_config(const ModelConfig& cfg, const std::filesystem::path& path) {
    write_file(path, config_to_json(cfg).dump(2) + "\n");
}

std::string config_digest(const ModelConfig& cfg) {
    return hex_digest(fnv1a64(config_to_json(cfg).dump()));
}

std::string state_to_csv(const SystemState& st) {
    std::string out = "node,s,a1,a2,d1,d2,x1,x2\n";
    for (std::size_t i = 0; i < st.n(); ++i) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", i, st.s[i], st.a[0][i], st.a[1][i],
                           st.d[0][i], st.d[1][i], st.x[0][i], st.x[1][i]);
    }
    return out;
}

SystemState parse_state_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("state csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "node,s,a1,a2,d1,d2,x1,x2") {
        throw InvalidArgument("state csv: expected header 'node,s,a1,a2,d1,d2,x1,x2'");
    }
    std::vector<std::array<double, 7>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::istringstream fields(line);
        std::string cell;
        std::getline(fields, cell, ',');
        std::size_t node = 0;
        try {
            node = std::stoul(cell);
        } catch (const std::exception&) {
            throw InvalidArgument(fmt::format("state csv line {}: bad node index", lineno));
        }
        if (node != rows.size()) {
            throw InvalidArgument(fmt::format("state csv line {}: nodes must be listed 0..n-1 in order", lineno));
        }
        std::array<double, 7> r{};
        for (double& v : r) {
            if (!std::getline(fields, cell, ',')) {
                throw InvalidArgument(fmt::format("state csv line {}: expected 8 fields", lineno));
            }
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw InvalidArgument(fmt::format("state csv line {}: unparsable value", lineno));
            }
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw InvalidArgument("state csv: no nodes");
    SystemState st = SystemState::zeros(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        st.s[i] = r[0];
        st.a[0][i] = r[1];
        st.a[1][i] = r[2];
        st.d[0][i] = r[3];
        st.d[1][i] = r[4];
        st.x[0][i] = r[5];
        st.x[1][i] = r[6];
    }
    return st;
}

SystemState load_state_csv(const std::filesystem::path& path) {
    return parse_state_csv(read_file(path));
}

json state_to_json(const SystemState& st) {
    return json{{"s", st.s},       {"a1", st.a[0]}, {"a2", st.a[1]}, {"d1", st.d[0]},
                {"d2", st.d[1]},   {"x1", st.x[0]}, {"x2", st.x[1]}};
}

}  // namespace coadopt
