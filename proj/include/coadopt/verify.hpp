#pragma once

// Numerical certification of the model's structural properties on concrete
// trajectories and equilibria. Checkers are pure functions of their inputs.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coadopt/dynamics.hpp"
#include "coadopt/equilibrium.hpp"

namespace coadopt {

struct Location {
    std::size_t t = 0;
    std::size_t node = 0;
};

struct PropertyReport {
    std::string property;
    bool passed = true;
    double worst = 0.0;      ///< worst violation magnitude (0 when nothing is violated)
    double tolerance = 0.0;  ///< fail implies worst > tolerance
    std::optional<Location> location;
    std::string narrative;
};

/// Box [-tol, 1 + tol] on all 7n entries and per-node simplex within tol at
/// every stored step.
PropertyReport check_invariance(const Trajectory& tr, double tol = 1e-9);

/// s_i(t+1) <= s_i(t) + slack between consecutive steps; steps that receive
/// an injection are exempt.
PropertyReport check_monotone_s(const Trajectory& tr, double slack = 1e-15);

/// x^k(t) >= (1 - lambda - xi) x0 entrywise at every step.
PropertyReport check_opinion_lower_bound(const Model& model, const Trajectory& tr,
                                         double slack = 1e-14);

/// Starts from s = (1 - eps) 1, a1 = eps 1, d = a2 = 0, x = x_e and checks
/// ||s(t) - 1||_inf >= eps for every t <= horizon. The narrative carries the
/// smallest margin and the final distance to the adoption-free equilibrium.
PropertyReport demo_instability(const Model& model, double eps, std::size_t horizon,
                                double slack = 1e-15);

/// Passes iff s* is entrywise <= tol or entrywise >= 1 - tol.
PropertyReport check_no_partial_adoption(const Equilibrium& eq, double tol = 1e-9);

/// Passes iff both technologies keep adopters above tol at every node and
/// max_i |a2_i d2_i - a1_i d1_i| <= tol.
PropertyReport check_coexistence(const Model& model, const Equilibrium& eq, double tol = 1e-9);

inline constexpr std::array<const char*, 7> kBlockNames = {"s", "a1", "a2", "d1", "d2", "x1", "x2"};

struct CrossValidation {
    std::array<double, 7> distance{};  ///< max-norm per block, in kBlockNames order
    double max_distance = 0.0;
    std::size_t horizon = 0;
    Equilibrium equilibrium;
};

/// Simulates from the early-stage state and compares the endpoint with the
/// independently solved equilibrium. Reports only; never fails on distance.
CrossValidation cross_validate(const Model& model, std::size_t horizon = 10000,
                               double tol = 1e-10, double seed_fraction = 0.01);

struct SuiteOptions {
    std::size_t horizon = 1000;
    double seed_fraction = 0.01;
    double invariance_tol = 1e-9;
    double monotone_slack = 1e-15;
    double opinion_slack = 1e-14;
    double instability_eps = 0.01;
    double equilibrium_tol = 1e-10;
    double property_tol = 1e-9;
};

/// The six properties in fixed order: invariance, monotone_s,
/// opinion_lower_bound, instability, no_partial_adoption, coexistence.
std::vector<PropertyReport> run_property_suite(const Model& model, const SuiteOptions& opts = {});

/// `instance_digest property pass|fail worst=<float> at=(t,node)`
std::string format_report_line(const std::string& instance, const PropertyReport& rep);
nlohmann::json report_to_json(const std::string& instance, const PropertyReport& rep);

}  // namespace coadopt
