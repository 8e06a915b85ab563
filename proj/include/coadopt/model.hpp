#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coadopt/netgraph.hpp"

namespace coadopt {

/// Technology label. Storage is indexed 0/1 through index().
enum class Tech : int { one = 1, two = 2 };

constexpr std::size_t index(Tech k) noexcept { return static_cast<std::size_t>(k) - 1; }
constexpr std::size_t other(std::size_t k) noexcept { return 1 - k; }

/// Per-node rates for one technology.
struct TechParams {
    Vec beta;    ///< adoption susceptibility, in [0,1]
    Vec gamma;   ///< switching rate out of the competitor's dissatisfied pool, in (0,1)
    Vec delta;   ///< dissatisfaction rate, in [0,1]
    Vec lambda;  ///< social-influence weight, >= 0
    Vec xi;      ///< adoption-feedback weight, > 0, lambda + xi < 1
    Vec x0;      ///< opinion predisposition (Friedkin-Johnsen anchor), in [0,1]

    bool operator==(const TechParams&) const = default;
};

struct ModelConfig {
    WeightedDigraph physical;  ///< adoption exposure W
    WeightedDigraph social;    ///< opinion exchange W~
    std::array<TechParams, 2> tech;
    std::optional<std::uint64_t> seed;  ///< generator seed, when the config was sampled

    std::size_t n() const noexcept { return physical.n(); }
    const TechParams& operator[](std::size_t k) const { return tech[k]; }

    bool operator==(const ModelConfig&) const = default;
};

/// y = (s, a1, a2, d1, d2, x1, x2); a/d/x are indexed by technology 0/1.
struct SystemState {
    Vec s;
    std::array<Vec, 2> a;
    std::array<Vec, 2> d;
    std::array<Vec, 2> x;

    std::size_t n() const noexcept { return s.size(); }

    static SystemState zeros(std::size_t n);
    /// s = 1, no adopters or dissatisfied, the given opinions.
    static SystemState adoption_free(Vec x1, Vec x2);

    bool operator==(const SystemState&) const = default;
};

/// Max-norm distance over all 7n entries. Throws on dimension mismatch.
double max_abs_diff(const SystemState& lhs, const SystemState& rhs);

struct ValidationReport {
    bool passed = true;
    std::vector<std::string> violations;

    void fail(std::string msg) {
        passed = false;
        violations.push_back(std::move(msg));
    }
    std::string summary() const;
};

/// Throws InvalidArgument when vector lengths disagree with the graphs.
void check_dimensions(const ModelConfig& cfg);

/// Every clause of the model's standing assumption: both layers row-stochastic,
/// physical layer irreducible, xi > 0, every node reaches a socially anchored
/// node (lambda < 1 and x0 > 0) in the social layer, beta1 + beta2 in (0,1),
/// lambda + xi < 1, gamma in (0,1), delta in [0,1].
ValidationReport validate_assumption1(const ModelConfig& cfg, double tol = 1e-12);

/// Box constraint on all entries and per-node compartment sum equal to one.
ValidationReport validate_initial_state(const SystemState& st, double tol = 1e-9);

/// A configuration known to satisfy validate_assumption1. The dynamics and
/// equilibrium routines only accept this type.
class Model {
public:
    /// Throws ValidationError listing every violation.
    static Model validated(ModelConfig cfg, double tol = 1e-12);
    /// Skips the assumption checks (dimensions are still enforced). Used by
    /// tests that need degenerate parameters such as lambda = xi = 0.
    static Model unchecked(ModelConfig cfg);

    const ModelConfig& config() const noexcept { return cfg_; }
    std::size_t n() const noexcept { return cfg_.n(); }
    const TechParams& tech(std::size_t k) const { return cfg_.tech[k]; }
    const Matrix& physical() const noexcept { return cfg_.physical.weights(); }
    const Matrix& social() const noexcept { return cfg_.social.weights(); }

private:
    explicit Model(ModelConfig cfg) : cfg_(std::move(cfg)) {}
    ModelConfig cfg_;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Sampling ranges for random_instance. Defaults realize the regime where
/// technology 1 is adopted faster but dissatisfies more often.
struct ParamRanges {
    Interval beta1{0.25, 0.45};
    Interval beta2{0.15, 0.35};
    double beta_sum_max = 0.95;  ///< (beta1, beta2) pairs are redrawn until the sum is below
    Interval gamma{0.3, 0.7};
    Interval delta1{0.15, 0.3};
    Interval delta2{0.05, 0.15};
    Interval lambda{0.1, 0.4};
    Interval xi{0.1, 0.4};
    double lambda_xi_max = 0.9;  ///< (lambda, xi) pairs are redrawn until the sum is at most
    Interval x0{0.3, 0.7};

    /// Disjoint ranges with beta1 > beta2 and delta1 > delta2 at every node.
    static ParamRanges crossover();
};

inline constexpr const char* kPrngId = "mt19937_64/u53";

/// Uniform doubles from std::mt19937_64 using the top 53 bits of each draw,
/// so streams are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                      ///< [0, 1)
    double uniform(double lo, double hi);  ///< [lo, hi)
    double uniform(Interval r) { return uniform(r.lo, r.hi); }

private:
    std::mt19937_64 engine_;
};

/// Directed Erdos-Renyi graph (each ordered pair i != j present with
/// probability `density`, weight uniform in [0.1, 1]) plus a directed ring
/// i -> i+1, row-normalized. n = 1 yields the single self-loop [[1]].
WeightedDigraph random_graph(std::size_t n, double density, Rng& rng);

/// Draw order: physical graph, social graph, then per node i in turn the
/// (beta1, beta2) pair, and for each technology gamma, delta, the (lambda, xi)
/// pair and x0. Throws InvalidArgument naming the first range that cannot
/// guarantee a valid configuration.
ModelConfig random_instance(std::size_t n, std::uint64_t seed, const ParamRanges& ranges = {},
                            double density = 0.2);

/// Early-diffusion initial state: every node has `seed_fraction` adopters of
/// each technology in `which`, no dissatisfied, and opinions at x0.
SystemState early_stage_state(const ModelConfig& cfg, double seed_fraction,
                              const std::vector<Tech>& which = {Tech::one, Tech::two});

}  // namespace coadopt
