#pragma once

// Equilibria of the coupled adoption-opinion dynamics.
//
// The adoption-free equilibrium has s = 1, no adopters and opinions solving
//     (I - Lambda W~) x = (I - Lambda - Xi) x0.
// The adoption-diffused equilibrium has s = 0; its technology-1 adopter
// vector a is the fixed point of the node-wise map
//     T_i(a) = 1 - (d1_i/d2_i) a_i - d1_i a_i (1/(g1_i x1_i(a)) + 1/(g2_i x2_i(a)))
// where x^k(a) is the opinion response to a1 = a, a2 = (d1/d2) a. Everything
// else (a2, dissatisfied, opinions) is reconstructed from a.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coadopt/model.hpp"

namespace coadopt {

enum class LinearMethod {
    neumann,   ///< x <- Lambda W~ x + b; contracts at rate max(lambda) < 1
    dense_lu,  ///< Gaussian elimination with partial pivoting
};

struct LinearSolveResult {
    Vec x;
    double residual = 0.0;  ///< ||(I - Lambda W~) x - b||_inf
    std::size_t iterations = 0;
};

/// Solves (I - diag(lambda) W~) x = rhs. Throws ConvergenceError if the
/// residual cannot be brought below tol.
LinearSolveResult solve_opinion_system(const Matrix& social, const Vec& lambda, const Vec& rhs,
                                       double tol, LinearMethod method = LinearMethod::neumann,
                                       std::size_t max_iter = 1000000);

/// x_e for both technologies, each with linear residual <= tol.
std::array<Vec, 2> adoption_free_opinions(const Model& model, double tol = 1e-12,
                                          LinearMethod method = LinearMethod::neumann);

/// Opinion equilibrium given technology-1 adopters a1 (a2 = (d1/d2) a1).
/// Throws InvalidArgument when some delta2_i is zero.
std::array<Vec, 2> opinion_response(const Model& model, const Vec& a1, double tol = 1e-11);

inline constexpr double kOpinionFloor = 1e-12;

/// Throws NumericalError("opinion degenerate") when an opinion response falls
/// to kOpinionFloor or below.
Vec t_map(const Model& model, const Vec& a1, double tol = 1e-11);

/// u_i = max{0, 1 - d1_i/d2_i - phi_i}, phi_i = d1_i (1/(g1_i xe1_i) + 1/(g2_i xe2_i)).
Vec lower_bound_u(const Model& model, double tol = 1e-12);

enum class EquilibriumKind { adoption_free, adoption_diffused };

/// Summary of the damping schedule of one solve.
struct DampingTrace {
    double eta_initial = 0.0;
    double eta_final = 0.0;
    double eta_min = 0.0;
    double eta_max = 0.0;
    std::size_t halvings = 0;
    std::size_t raises = 0;
};

struct Equilibrium {
    SystemState state;
    EquilibriumKind kind = EquilibriumKind::adoption_diffused;
    double residual = 0.0;  ///< ||a - T(a)||_inf (diffused) or linear residual (free)
    std::size_t iterations = 0;
    bool converged = false;
    Vec lower_bound;
    bool on_safeguard_boundary = false;
    double ratio_check_max_err = 0.0;  ///< max_i |a2_i d2_i - a1_i d1_i|
    double simplex_max_err = 0.0;      ///< max_i |s + a1 + a2 + d1 + d2 - 1|
    DampingTrace damping;
};

Equilibrium adoption_free_equilibrium(const Model& model, double tol = 1e-12);

struct SolverOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    std::optional<Vec> start;  ///< default: midpoint of [u, 1]
    double eta = 0.2;
};

/// Damped iteration a <- clamp_[u,1]((1 - eta) a + eta T(a)). eta is halved
/// when the residual grows and raised by 1.25 (capped at 1) after five
/// consecutive decreases. On convergence the full state is reconstructed and
/// its per-node simplex checked within 10 tol (NumericalError otherwise).
/// Non-convergence returns converged = false with the best iterate found.
Equilibrium solve_adoption_diffused(const Model& model, const SolverOptions& opts = {});

struct UniquenessReport {
    std::size_t runs = 0;
    std::vector<Vec> fixed_points;            ///< a1 of each converged run
    std::vector<std::size_t> non_converged;   ///< indices of failed runs
    double max_pairwise_distance = 0.0;
    double threshold = 0.0;
    bool corroborated = false;  ///< some run converged and all agree within threshold
};

/// Solves from `starts` uniform points in [u, 1]^n plus the corners u and 1.
/// Agreement threshold defaults to 10 tol.
UniquenessReport multi_start_uniqueness_check(const Model& model, double tol, std::size_t starts,
                                              std::uint64_t seed, std::size_t max_iter = 100000,
                                              std::optional<double> threshold = std::nullopt);

std::string to_string(EquilibriumKind kind);
nlohmann::json equilibrium_to_json(const Equilibrium& eq);
nlohmann::json uniqueness_to_json(const UniquenessReport& rep);

}  // namespace coadopt
