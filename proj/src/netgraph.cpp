#include "coadopt/netgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>
#include <type_traits>

#include <fmt/format.h>

namespace coadopt {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
    data_.reserve(n_ * n_);
    for (const auto& r : rows) {
        if (r.size() != n_) {
            throw InvalidArgument("Matrix: rows must all have length n");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
    Matrix m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw InvalidArgument(fmt::format("matrix row {} has length {}, expected {}", i,
                                              rows[i].size(), rows.size()));
        }
        std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * m.n_);
    }
    return m;
}

void Matrix::multiply_into(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const double* r = data_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) acc += r[j] * x[j];
        y[i] = acc;
    }
}

Vec Matrix::multiply(std::span<const double> x) const {
    Vec y(n_);
    multiply_into(x, y);
    return y;
}

Matrix Matrix::scale_rows(std::span<const double> scale) const {
    Matrix out(*this);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) out(i, j) *= scale[i];
    return out;
}

Matrix Matrix::transposed() const {
    Matrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) out(j, i) = (*this)(i, j);
    return out;
}

std::vector<Vec> Matrix::to_rows() const {
    std::vector<Vec> rows(n_);
    for (std::size_t i = 0; i < n_; ++i) rows[i].assign(row(i).begin(), row(i).end());
    return rows;
}

WeightedDigraph::WeightedDigraph(Matrix weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw InvalidArgument("graph must have at least one node");
    for (std::size_t i = 0; i < n(); ++i) {
        for (std::size_t j = 0; j < n(); ++j) {
            const double w = weights_(i, j);
            if (!std::isfinite(w) || w < 0.0) {
                throw InvalidArgument(
                    fmt::format("graph weight ({},{}) = {} must be finite and nonnegative", i, j, w));
            }
        }
    }
}

std::vector<std::size_t> WeightedDigraph::listens_to(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n(); ++j)
        if (weights_(i, j) > 0.0) out.push_back(j);
    return out;
}

RowStochasticReport check_row_stochastic(const WeightedDigraph& g, double tol) {
    RowStochasticReport rep;
    for (std::size_t i = 0; i < g.n(); ++i) {
        double sum = 0.0;
        for (double w : g.weights().row(i)) sum += w;
        const double dev = std::abs(sum - 1.0);
        if (dev > rep.worst_deviation) {
            rep.worst_deviation = dev;
            rep.worst_row = i;
        }
        if (!(dev <= tol)) rep.offending_rows.push_back(i);
    }
    rep.passed = rep.offending_rows.empty();
    return rep;
}

WeightedDigraph row_normalized(const WeightedDigraph& g) {
    Matrix m = g.weights();
    for (std::size_t i = 0; i < g.n(); ++i) {
        double sum = 0.0;
        for (double w : m.row(i)) sum += w;
        if (sum <= 0.0) {
            throw InvalidArgument(fmt::format("cannot row-normalize: row {} has no positive weight", i));
        }
        for (std::size_t j = 0; j < g.n(); ++j) m(i, j) /= sum;
    }
    return WeightedDigraph(std::move(m));
}

std::vector<std::size_t> strongly_connected_components(const WeightedDigraph& g) {
    // Iterative Tarjan over edges i -> j with weights(i, j) > 0.
    constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
    const std::size_t n = g.n();
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next_index = 0, next_comp = 0;

    struct Frame {
        std::size_t node;
        std::size_t next_child;
    };
    std::vector<Frame> call;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;

        while (!call.empty()) {
            Frame& f = call.back();
            const std::size_t v = f.node;
            bool descended = false;
            while (f.next_child < n) {
                const std::size_t w = f.next_child++;
                if (!(g.weight(v, w) > 0.0)) continue;
                if (index[w] == unvisited) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;

            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = next_comp;
                } while (w != v);
                ++next_comp;
            }
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().node;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return comp;
}

bool is_irreducible(const WeightedDigraph& g) {
    if (g.n() == 1) return true;
    const auto comp = strongly_connected_components(g);
    return std::all_of(comp.begin(), comp.end(), [&](std::size_t c) { return c == comp[0]; });
}

std::vector<bool> check_reachability_to_anchored(const WeightedDigraph& g,
                                                 const std::vector<bool>& anchored) {
    const std::size_t n = g.n();
    if (anchored.size() != n) {
        throw InvalidArgument("anchored mask length must equal the node count");
    }
    // Node i reaches an anchor iff i is reached from an anchor backwards, i.e.
    // along edges j -> i where weights(i, j) > 0 read in reverse.
    std::vector<bool> reaches(anchored);
    std::vector<std::size_t> frontier;
    for (std::size_t j = 0; j < n; ++j)
        if (anchored[j]) frontier.push_back(j);
    while (!frontier.empty()) {
        const std::size_t j = frontier.back();
        frontier.pop_back();
        for (std::size_t i = 0; i < n; ++i) {
            if (!reaches[i] && g.weight(i, j) > 0.0) {
                reaches[i] = true;
                frontier.push_back(i);
            }
        }
    }
    return reaches;
}

double spectral_radius(const Matrix& m, SpectralRadiusOptions opts) {
    const std::size_t n = m.size();
    if (n == 0) throw InvalidArgument("spectral_radius: empty matrix");
    if (!(opts.tol > 0.0)) throw InvalidArgument("spectral_radius: tol must be positive");
    for (std::size_t i = 0; i < n; ++i)
        for (double v : m.row(i))
            if (!(v >= 0.0) || !std::isfinite(v))
                throw InvalidArgument("spectral_radius: matrix must be finite and nonnegative");

    // Iterate on (M + I) / 2: same Perron vector, primitive whenever M is
    // irreducible, and the iterate stays strictly positive even for rows of
    // zeros. rho(M) = 2 rho((M + I) / 2) - 1.
    const bool irreducible = is_irreducible(WeightedDigraph(m));
    Vec v(n, 1.0), w(n);
    double prev_ratio = std::numeric_limits<double>::quiet_NaN();
    double estimate = 0.0, gap = std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        m.multiply_into(v, w);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0, vmax = 0.0, wmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.5 * (w[i] + v[i]);
            const double r = w[i] / v[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            vmax = std::max(vmax, v[i]);
            wmax = std::max(wmax, w[i]);
        }
        const double ratio = wmax / vmax;
        gap = 2.0 * (hi - lo);
        estimate = irreducible ? (lo + hi) - 1.0 : 2.0 * ratio - 1.0;
        if (irreducible && gap <= opts.tol) return std::max(0.0, estimate);
        if (!irreducible && std::abs(ratio - prev_ratio) * 2.0 <= 0.1 * opts.tol)
            return std::max(0.0, estimate);
        prev_ratio = ratio;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wmax;
    }
    throw ConvergenceError(
        fmt::format("spectral_radius: no convergence in {} iterations (estimate {}, gap {})",
                    opts.max_iter, estimate, gap),
        estimate, gap);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_full(const std::string& s, T& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        if constexpr (std::is_floating_point_v<T>) {
            out = std::stod(s, &pos);
        } else {
            out = std::stoll(s, &pos);
        }
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

WeightedDigraph parse_edge_csv(std::string_view text, std::size_t n, bool normalize) {
    if (n == 0) throw InvalidArgument("edge list: node count must be positive");
    Matrix m(n);
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            if (t != "src,dst,weight") {
                throw InvalidArgument(
                    fmt::format("edge list: expected header 'src,dst,weight', got '{}'", t));
            }
            header_seen = true;
            continue;
        }
        std::istringstream fields(t);
        std::string a, b, c;
        if (!std::getline(fields, a, ',') || !std::getline(fields, b, ',') ||
            !std::getline(fields, c)) {
            throw InvalidArgument(fmt::format("edge list line {}: expected 3 fields", lineno));
        }
        long long src = 0, dst = 0;
        double w = 0.0;
        if (!parse_full(trim(a), src) || !parse_full(trim(b), dst) || !parse_full(trim(c), w)) {
            throw InvalidArgument(fmt::format("edge list line {}: unparsable field", lineno));
        }
        if (src < 0 || dst < 0 || static_cast<std::size_t>(src) >= n ||
            static_cast<std::size_t>(dst) >= n) {
            throw InvalidArgument(
                fmt::format("edge list line {}: node index out of range [0, {})", lineno, n));
        }
        if (!std::isfinite(w) || w < 0.0) {
            throw InvalidArgument(fmt::format("edge list line {}: negative weight {}", lineno, w));
        }
        m(static_cast<std::size_t>(dst), static_cast<std::size_t>(src)) += w;
    }
    if (!header_seen) throw InvalidArgument("edge list: missing header");
    WeightedDigraph g(std::move(m));
    return normalize ? row_normalized(g) : g;
}

WeightedDigraph load_edge_csv(const std::filesystem::path& path, std::size_t n, bool normalize) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument(fmt::format("cannot open edge list '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_edge_csv(ss.str(), n, normalize);
}

std::string to_edge_csv(const WeightedDigraph& g) {
    std::string out = "src,dst,weight\n";
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j)
            if (g.weight(i, j) > 0.0) out += fmt::format("{},{},{}\n", j, i, g.weight(i, j));
    return out;
}

}  // namespace coadopt
