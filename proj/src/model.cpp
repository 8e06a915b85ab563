#include "coadopt/model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace coadopt {

SystemState SystemState::zeros(std::size_t n) {
    SystemState st;
    st.s.assign(n, 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
        st.a[k].assign(n, 0.0);
        st.d[k].assign(n, 0.0);
        st.x[k].assign(n, 0.0);
    }
    return st;
}

SystemState SystemState::adoption_free(Vec x1, Vec x2) {
    if (x1.size() != x2.size()) throw InvalidArgument("adoption_free: opinion lengths differ");
    SystemState st = zeros(x1.size());
    std::fill(st.s.begin(), st.s.end(), 1.0);
    st.x[0] = std::move(x1);
    st.x[1] = std::move(x2);
    return st;
}

namespace {

const Vec* blocks(const SystemState& st, std::size_t b) {
    switch (b) {
        case 0: return &st.s;
        case 1: return &st.a[0];
        case 2: return &st.a[1];
        case 3: return &st.d[0];
        case 4: return &st.d[1];
        case 5: return &st.x[0];
        default: return &st.x[1];
    }
}

constexpr const char* kBlockNames[7] = {"s", "a1", "a2", "d1", "d2", "x1", "x2"};

}  // namespace

double max_abs_diff(const SystemState& lhs, const SystemState& rhs) {
    double worst = 0.0;
    for (std::size_t b = 0; b < 7; ++b) {
        const Vec& u = *blocks(lhs, b);
        const Vec& v = *blocks(rhs, b);
        if (u.size() != v.size()) throw InvalidArgument("max_abs_diff: state sizes differ");
        for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] - v[i]));
    }
    return worst;
}

std::string ValidationReport::summary() const {
    if (passed) return "ok";
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v;
    }
    return out;
}

void check_dimensions(const ModelConfig& cfg) {
    const std::size_t n = cfg.physical.n();
    if (n == 0) throw InvalidArgument("config has no nodes");
    if (cfg.social.n() != n) {
        throw InvalidArgument(
            fmt::format("social graph has {} nodes, physical graph has {}", cfg.social.n(), n));
    }
    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = cfg.tech[k];
        const std::pair<const char*, const Vec*> fields[] = {
            {"beta", &p.beta},     {"gamma", &p.gamma}, {"delta", &p.delta},
            {"lambda", &p.lambda}, {"xi", &p.xi},       {"x0", &p.x0}};
        for (const auto& [name, v] : fields) {
            if (v->size() != n) {
                throw InvalidArgument(fmt::format("tech{} {} has length {}, expected {}", k + 1,
                                                  name, v->size(), n));
            }
            for (double e : *v)
                if (!std::isfinite(e))
                    throw InvalidArgument(fmt::format("tech{} {} has a non-finite entry", k + 1, name));
        }
    }
}

ValidationReport validate_assumption1(const ModelConfig& cfg, double tol) {
    check_dimensions(cfg);
    ValidationReport rep;
    const std::size_t n = cfg.n();

    const auto phys = check_row_stochastic(cfg.physical, tol);
    if (!phys.passed) {
        rep.fail(fmt::format("physical graph not row-stochastic: row {} deviates by {}",
                             phys.worst_row, phys.worst_deviation));
    }
    const auto soc = check_row_stochastic(cfg.social, tol);
    if (!soc.passed) {
        rep.fail(fmt::format("social graph not row-stochastic: row {} deviates by {}",
                             soc.worst_row, soc.worst_deviation));
    }
    if (!is_irreducible(cfg.physical)) rep.fail("physical graph is not irreducible");

    for (std::size_t i = 0; i < n; ++i) {
        const double bsum = cfg.tech[0].beta[i] + cfg.tech[1].beta[i];
        if (!(bsum > 0.0 && bsum < 1.0)) {
            rep.fail(fmt::format("beta sum = {} not in (0,1) at node {}", bsum, i));
        }
    }

    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = cfg.tech[k];
        const int label = static_cast<int>(k) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(p.beta[i] >= 0.0 && p.beta[i] <= 1.0))
                rep.fail(fmt::format("beta{} = {} not in [0,1] at node {}", label, p.beta[i], i));
            if (!(p.xi[i] > 0.0))
                rep.fail(fmt::format("xi must be strictly positive: xi{} = {} at node {}", label,
                                     p.xi[i], i));
            if (!(p.lambda[i] >= 0.0))
                rep.fail(fmt::format("lambda{} = {} negative at node {}", label, p.lambda[i], i));
            if (!(p.lambda[i] + p.xi[i] < 1.0))
                rep.fail(fmt::format("lambda{0} + xi{0} = {1} not below 1 at node {2}", label,
                                     p.lambda[i] + p.xi[i], i));
            if (!(p.gamma[i] > 0.0 && p.gamma[i] < 1.0))
                rep.fail(fmt::format("gamma{} = {} not in (0,1) at node {}", label, p.gamma[i], i));
            if (!(p.delta[i] >= 0.0 && p.delta[i] <= 1.0))
                rep.fail(fmt::format("delta{} = {} not in [0,1] at node {}", label, p.delta[i], i));
            if (!(p.x0[i] >= 0.0 && p.x0[i] <= 1.0))
                rep.fail(fmt::format("x0 for tech{} = {} not in [0,1] at node {}", label, p.x0[i], i));
        }

        std::vector<bool> anchored(n);
        for (std::size_t j = 0; j < n; ++j) anchored[j] = p.lambda[j] < 1.0 && p.x0[j] > 0.0;
        const auto reach = check_reachability_to_anchored(cfg.social, anchored);
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i]) {
                rep.fail(fmt::format(
                    "node {} reaches no anchored node (lambda < 1, x0 > 0) for tech{} in the social graph",
                    i, label));
            }
        }
    }
    return rep;
}

ValidationReport validate_initial_state(const SystemState& st, double tol) {
    ValidationReport rep;
    const std::size_t n = st.n();
    for (std::size_t b = 0; b < 7; ++b) {
        if (blocks(st, b)->size() != n) {
            rep.fail(fmt::format("block {} has length {}, expected {}", kBlockNames[b],
                                 blocks(st, b)->size(), n));
            return rep;
        }
    }
    for (std::size_t b = 0; b < 7; ++b) {
        const Vec& v = *blocks(st, b);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(v[i]) || v[i] < -tol || v[i] > 1.0 + tol) {
                rep.fail(fmt::format("{}[{}] = {} outside [0,1]", kBlockNames[b], i, v[i]));
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double sum = st.s[i] + st.a[0][i] + st.a[1][i] + st.d[0][i] + st.d[1][i];
        if (!(std::abs(sum - 1.0) <= tol)) {
            rep.fail(fmt::format("compartments at node {} sum to {}", i, sum));
        }
    }
    return rep;
}

Model Model::validated(ModelConfig cfg, double tol) {
    const auto rep = validate_assumption1(cfg, tol);
    if (!rep.passed) throw ValidationError("invalid model configuration: " + rep.summary());
    return Model(std::move(cfg));
}

Model Model::unchecked(ModelConfig cfg) {
    check_dimensions(cfg);
    return Model(std::move(cfg));
}

ParamRanges ParamRanges::crossover() {
    ParamRanges r;
    r.beta1 = {0.60, 0.75};
    r.beta2 = {0.10, 0.20};
    r.delta1 = {0.08, 0.12};
    r.delta2 = {0.03, 0.06};
    return r;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

WeightedDigraph random_graph(std::size_t n, double density, Rng& rng) {
    if (n == 0) throw InvalidArgument("random_graph: n must be positive");
    if (!(density > 0.0 && density <= 1.0)) {
        throw InvalidArgument(fmt::format("density {} not in (0,1]", density));
    }
    if (n == 1) return WeightedDigraph(Matrix{{1.0}});
    Matrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double coin = rng.uniform();
            const double w = rng.uniform(0.1, 1.0);
            if (coin < density) m(i, j) = w;
        }
        // ring: node i listens to node i+1
        m(i, (i + 1) % n) += rng.uniform(0.1, 1.0);
    }
    return row_normalized(WeightedDigraph(std::move(m)));
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidArgument("infeasible parameter ranges: " + msg);
}

void check_interval(const Interval& r, const char* name) {
    require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi,
            fmt::format("{} range [{}, {}] is empty or non-finite", name, r.lo, r.hi));
}

void check_ranges(const ParamRanges& r) {
    check_interval(r.beta1, "beta1");
    check_interval(r.beta2, "beta2");
    check_interval(r.gamma, "gamma");
    check_interval(r.delta1, "delta1");
    check_interval(r.delta2, "delta2");
    check_interval(r.lambda, "lambda");
    check_interval(r.xi, "xi");
    check_interval(r.x0, "x0");
    require(r.beta1.lo >= 0.0 && r.beta2.lo >= 0.0, "beta ranges must be nonnegative");
    require(r.beta1.hi + r.beta2.hi < 1.0,
            fmt::format("beta1 range [{}, {}] and beta2 range [{}, {}]: beta sum can exceed 1",
                        r.beta1.lo, r.beta1.hi, r.beta2.lo, r.beta2.hi));
    require(r.beta1.lo + r.beta2.lo > 0.0, "beta sum can be 0");
    require(r.beta_sum_max > r.beta1.lo + r.beta2.lo && r.beta_sum_max <= 1.0,
            fmt::format("beta_sum_max {} leaves no feasible beta pair", r.beta_sum_max));
    require(r.gamma.lo > 0.0 && r.gamma.hi < 1.0,
            fmt::format("gamma range [{}, {}] not inside (0,1)", r.gamma.lo, r.gamma.hi));
    require(r.delta1.lo >= 0.0 && r.delta1.hi <= 1.0, "delta1 range not inside [0,1]");
    require(r.delta2.lo >= 0.0 && r.delta2.hi <= 1.0, "delta2 range not inside [0,1]");
    require(r.lambda.lo >= 0.0, "lambda range must be nonnegative");
    require(r.xi.lo > 0.0, fmt::format("xi range [{}, {}] must be strictly positive", r.xi.lo, r.xi.hi));
    require(r.lambda.hi + r.xi.hi < 1.0,
            fmt::format("lambda range [{}, {}] and xi range [{}, {}]: lambda + xi can reach 1",
                        r.lambda.lo, r.lambda.hi, r.xi.lo, r.xi.hi));
    require(r.lambda_xi_max >= r.lambda.lo + r.xi.lo,
            fmt::format("lambda_xi_max {} leaves no feasible (lambda, xi) pair", r.lambda_xi_max));
    require(r.x0.lo > 0.0 && r.x0.hi <= 1.0,
            fmt::format("x0 range [{}, {}] not inside (0,1]", r.x0.lo, r.x0.hi));
}

}  // namespace

ModelConfig random_instance(std::size_t n, std::uint64_t seed, const ParamRanges& ranges,
                            double density) {
    if (n == 0) throw InvalidArgument("random_instance: n must be positive");
    check_ranges(ranges);
    Rng rng(seed);

    ModelConfig cfg;
    cfg.physical = random_graph(n, density, rng);
    cfg.social = random_graph(n, density, rng);
    cfg.seed = seed;
    for (auto& p : cfg.tech) {
        for (Vec* v : {&p.beta, &p.gamma, &p.delta, &p.lambda, &p.xi, &p.x0}) v->resize(n);
    }

    const Interval delta_range[2] = {ranges.delta1, ranges.delta2};
    for (std::size_t i = 0; i < n; ++i) {
        double b1 = 0.0, b2 = 0.0;
        do {
            b1 = rng.uniform(ranges.beta1);
            b2 = rng.uniform(ranges.beta2);
        } while (!(b1 + b2 < ranges.beta_sum_max) || !(b1 + b2 > 0.0));
        cfg.tech[0].beta[i] = b1;
        cfg.tech[1].beta[i] = b2;

        for (std::size_t k = 0; k < 2; ++k) {
            TechParams& p = cfg.tech[k];
            p.gamma[i] = rng.uniform(ranges.gamma);
            p.delta[i] = rng.uniform(delta_range[k]);
            double lam = 0.0, xi = 0.0;
            do {
                lam = rng.uniform(ranges.lambda);
                xi = rng.uniform(ranges.xi);
            } while (lam + xi > ranges.lambda_xi_max || !(xi > 0.0));
            p.lambda[i] = lam;
            p.xi[i] = xi;
            p.x0[i] = rng.uniform(ranges.x0);
            if (!(p.x0[i] > 0.0)) p.x0[i] = ranges.x0.hi;
        }
    }
    return cfg;
}

SystemState early_stage_state(const ModelConfig& cfg, double seed_fraction,
                              const std::vector<Tech>& which) {
    bool seeded[2] = {false, false};
    for (Tech k : which) seeded[index(k)] = true;
    const int count = int(seeded[0]) + int(seeded[1]);
    if (!(seed_fraction > 0.0 && seed_fraction < 1.0) || !(seed_fraction * count < 1.0)) {
        throw InvalidArgument(
            fmt::format("seed fraction {} times {} technologies must lie in (0,1)", seed_fraction, count));
    }
    const std::size_t n = cfg.n();
    SystemState st = SystemState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (std::size_t k = 0; k < 2; ++k) {
            if (seeded[k]) {
                st.a[k][i] = seed_fraction;
                s -= seed_fraction;
            }
        }
        st.s[i] = s;
    }
    st.x[0] = cfg.tech[0].x0;
    st.x[1] = cfg.tech[1].x0;
    return st;
}

}  // namespace coadopt
