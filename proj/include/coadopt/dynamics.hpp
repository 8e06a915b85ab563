#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "coadopt/model.hpp"

namespace coadopt {

/// One-time transfer of `fraction` (clamped at s_i) from susceptible to
/// adopters of `technology` at every node, applied at step `time` before the
/// update out of that step.
struct InjectionEvent {
    std::size_t time = 0;
    Tech technology = Tech::two;
    double fraction = 0.01;
};

/// Node means of every block of one state.
struct Aggregate {
    double s = 0.0;
    std::array<double, 2> a{};
    std::array<double, 2> d{};
    std::array<double, 2> x{};
};

Aggregate aggregate(const SystemState& st);

struct StepDiagnostics {
    /// Rounding negatives in (-1e-14, 0) reset to zero.
    std::size_t clamped = 0;
};

inline constexpr double kClampThreshold = 1e-14;

/// Synchronous update: every right-hand side reads the state at t. The opinion
/// update is anchored to the config's x0, not to the state's opinions.
/// Throws InvalidArgument for non-finite or invalid input states and
/// NumericalError if the update produces a negative below -1e-14.
SystemState step(const Model& model, const SystemState& st, StepDiagnostics* diag = nullptr);

enum class Storage {
    automatic,  ///< full up to kStreamingHorizon steps, streaming beyond
    full,
    streaming,  ///< keeps only the latest state and per-step aggregates
};

inline constexpr std::size_t kStreamingHorizon = 100000;

struct Trajectory {
    std::vector<SystemState> states;  ///< index t = 0..horizon (full), or only the final state
    std::vector<Aggregate> aggregates;  ///< per-step node means (streaming only)
    std::vector<InjectionEvent> events;
    std::string config_digest;
    std::size_t horizon = 0;
    bool streaming = false;
    std::size_t clamped = 0;

    const SystemState& final_state() const { return states.back(); }
    /// True iff some event fires at step t.
    bool is_injection_step(std::size_t t) const;
};

/// Events must be sorted by time; events at t <= horizon are applied.
Trajectory simulate(const Model& model, const SystemState& st0, std::size_t horizon,
                    const std::vector<InjectionEvent>& events = {},
                    Storage storage = Storage::automatic);

/// Node means per step, in step order (horizon + 1 entries).
std::vector<Aggregate> trajectory_metrics(const Trajectory& tr);

/// Rows `t,node,s,a1,a2,d1,d2,x1,x2`; every `stride`-th step plus the last.
std::string trajectory_to_csv(const Trajectory& tr, std::size_t stride = 1);
/// Rows `t,mean_s,mean_a1,mean_a2,mean_d1,mean_d2,mean_x1,mean_x2`.
std::string metrics_to_csv(const std::vector<Aggregate>& metrics);

/// Parses `tech1@T` / `tech2@T` (optionally `tech2@T:fraction`).
InjectionEvent parse_entry_spec(std::string_view spec, double default_fraction);

}  // namespace coadopt
