#include "coadopt/verify.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace coadopt {

namespace {

const Vec& block(const SystemState& st, std::size_t b) {
    switch (b) {
        case 0: return st.s;
        case 1: return st.a[0];
        case 2: return st.a[1];
        case 3: return st.d[0];
        case 4: return st.d[1];
        case 5: return st.x[0];
        default: return st.x[1];
    }
}

void require_full(const Trajectory& tr) {
    if (tr.streaming) throw InvalidArgument("property checks need a fully stored trajectory");
    if (tr.states.empty()) throw InvalidArgument("empty trajectory");
}

void record(PropertyReport& rep, double violation, std::size_t t, std::size_t node) {
    if (violation > rep.worst) {
        rep.worst = violation;
        rep.location = Location{t, node};
    }
}

void finish(PropertyReport& rep) { rep.passed = !(rep.worst > rep.tolerance); }

}  // namespace

PropertyReport check_invariance(const Trajectory& tr, double tol) {
    require_full(tr);
    PropertyReport rep{"invariance", true, 0.0, tol, std::nullopt, {}};
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        const SystemState& st = tr.states[t];
        for (std::size_t b = 0; b < 7; ++b) {
            const Vec& v = block(st, b);
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double excess = std::isfinite(v[i])
                                          ? std::max({0.0, -v[i], v[i] - 1.0})
                                          : std::numeric_limits<double>::infinity();
                record(rep, excess, t, i);
            }
        }
        for (std::size_t i = 0; i < st.n(); ++i) {
            const double sum = st.s[i] + st.a[0][i] + st.a[1][i] + st.d[0][i] + st.d[1][i];
            record(rep, std::abs(sum - 1.0), t, i);
        }
    }
    finish(rep);
    rep.narrative = fmt::format("box and simplex over {} steps, worst deviation {:.3e}",
                                tr.states.size(), rep.worst);
    return rep;
}

PropertyReport check_monotone_s(const Trajectory& tr, double slack) {
    require_full(tr);
    PropertyReport rep{"monotone_s", true, 0.0, slack, std::nullopt, {}};
    std::size_t exempt = 0;
    for (std::size_t t = 1; t < tr.states.size(); ++t) {
        if (tr.is_injection_step(t)) {
            ++exempt;
            continue;
        }
        const Vec& prev = tr.states[t - 1].s;
        const Vec& cur = tr.states[t].s;
        for (std::size_t i = 0; i < cur.size(); ++i) record(rep, cur[i] - prev[i], t, i);
    }
    finish(rep);
    rep.narrative = fmt::format("largest increase of s {:.3e}, {} injection steps exempt",
                                rep.worst, exempt);
    return rep;
}

PropertyReport check_opinion_lower_bound(const Model& model, const Trajectory& tr, double slack) {
    require_full(tr);
    PropertyReport rep{"opinion_lower_bound", true, 0.0, slack, std::nullopt, {}};
    std::array<Vec, 2> bound;
    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = model.tech(k);
        bound[k].resize(model.n());
        for (std::size_t i = 0; i < model.n(); ++i)
            bound[k][i] = (1.0 - p.lambda[i] - p.xi[i]) * p.x0[i];
    }
    // x(0) is the given initial opinion; the bound applies from t = 1 on.
    for (std::size_t t = 1; t < tr.states.size(); ++t) {
        for (std::size_t k = 0; k < 2; ++k) {
            const Vec& x = tr.states[t].x[k];
            for (std::size_t i = 0; i < x.size(); ++i) record(rep, bound[k][i] - x[i], t, i);
        }
    }
    finish(rep);
    rep.narrative = fmt::format("largest shortfall below (1 - lambda - xi) x0: {:.3e}", rep.worst);
    return rep;
}

PropertyReport demo_instability(const Model& model, double eps, std::size_t horizon, double slack) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("instability eps must lie in (0,1)");
    const Equilibrium free_eq = adoption_free_equilibrium(model);
    const std::size_t n = model.n();
    SystemState y0 = SystemState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        y0.s[i] = 1.0 - eps;
        y0.a[0][i] = eps;
    }
    y0.x = free_eq.state.x;

    PropertyReport rep{"instability", true, 0.0, slack, std::nullopt, {}};
    double min_margin = std::numeric_limits<double>::infinity();
    SystemState y = y0;
    for (std::size_t t = 0;; ++t) {
        double dist = 0.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(y.s[i] - 1.0);
            if (d > dist) {
                dist = d;
                arg = i;
            }
        }
        min_margin = std::min(min_margin, dist);
        record(rep, eps - dist, t, arg);
        if (t == horizon) break;
        y = step(model, y);
    }
    finish(rep);
    rep.narrative = fmt::format(
        "eps={} min ||s(t)-1||={:.6e} final ||y(T)-y_e||={:.6e}", eps, min_margin,
        max_abs_diff(y, free_eq.state));
    return rep;
}

PropertyReport check_no_partial_adoption(const Equilibrium& eq, double tol) {
    PropertyReport rep{"no_partial_adoption", true, 0.0, tol, std::nullopt, {}};
    const Vec& s = eq.state.s;
    double worst_low = 0.0, worst_high = 0.0;
    std::size_t at_low = 0, at_high = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] > worst_low) {
            worst_low = s[i];
            at_low = i;
        }
        if (1.0 - s[i] > worst_high) {
            worst_high = 1.0 - s[i];
            at_high = i;
        }
    }
    // Distance to the nearer of the two admissible patterns.
    if (worst_low <= worst_high) {
        rep.worst = worst_low;
        rep.location = Location{0, at_low};
    } else {
        rep.worst = worst_high;
        rep.location = Location{0, at_high};
    }
    finish(rep);
    std::vector<std::size_t> zero, positive;
    for (std::size_t i = 0; i < s.size(); ++i) (s[i] <= tol ? zero : positive).push_back(i);
    rep.narrative = rep.passed ? fmt::format("s* uniformly {}", worst_low <= tol ? "0" : "1")
                               : fmt::format("mixed pattern: {} nodes with s*=0, {} with s*>0",
                                             zero.size(), positive.size());
    return rep;
}

PropertyReport check_coexistence(const Model& model, const Equilibrium& eq, double tol) {
    PropertyReport rep{"coexistence", true, 0.0, tol, std::nullopt, {}};
    bool monopoly = false;
    for (std::size_t i = 0; i < eq.state.n(); ++i) {
        for (std::size_t k = 0; k < 2; ++k) {
            const double a = eq.state.a[k][i];
            if (!(a > tol)) {
                monopoly = true;
                // Shortfall below the threshold, floored just above tol so that a
                // missing technology always reads as a violation.
                record(rep, std::max(tol - a, std::nextafter(tol, 1.0)), 0, i);
            }
        }
        const double ratio_err = std::abs(eq.state.a[1][i] * model.tech(1).delta[i] -
                                          eq.state.a[0][i] * model.tech(0).delta[i]);
        record(rep, ratio_err, 0, i);
    }
    finish(rep);
    if (monopoly) {
        rep.narrative = "monopoly pattern: a technology has no adopters at some node";
    } else {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 0; i < eq.state.n(); ++i) {
            const double r = eq.state.a[1][i] / eq.state.a[0][i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        rep.narrative = fmt::format("share ratio a2*/a1* in [{:.6f}, {:.6f}]", lo, hi);
    }
    return rep;
}

CrossValidation cross_validate(const Model& model, std::size_t horizon, double tol,
                               double seed_fraction) {
    CrossValidation cv;
    cv.horizon = horizon;
    SolverOptions opts;
    opts.tol = tol;
    cv.equilibrium = solve_adoption_diffused(model, opts);
    if (!cv.equilibrium.converged) {
        throw ConvergenceError("cross_validate: equilibrium solver did not converge",
                               std::numeric_limits<double>::quiet_NaN(), cv.equilibrium.residual);
    }
    const Trajectory tr = simulate(model, early_stage_state(model.config(), seed_fraction), horizon,
                                   {}, Storage::streaming);
    const SystemState& end = tr.final_state();
    for (std::size_t b = 0; b < 7; ++b) {
        const Vec& u = block(end, b);
        const Vec& v = block(cv.equilibrium.state, b);
        for (std::size_t i = 0; i < u.size(); ++i)
            cv.distance[b] = std::max(cv.distance[b], std::abs(u[i] - v[i]));
        cv.max_distance = std::max(cv.max_distance, cv.distance[b]);
    }
    return cv;
}

std::vector<PropertyReport> run_property_suite(const Model& model, const SuiteOptions& opts) {
    std::vector<PropertyReport> out;
    const Trajectory tr = simulate(model, early_stage_state(model.config(), opts.seed_fraction),
                                   opts.horizon, {}, Storage::full);
    out.push_back(check_invariance(tr, opts.invariance_tol));
    out.push_back(check_monotone_s(tr, opts.monotone_slack));
    out.push_back(check_opinion_lower_bound(model, tr, opts.opinion_slack));
    out.push_back(demo_instability(model, opts.instability_eps, opts.horizon));

    SolverOptions sopts;
    sopts.tol = opts.equilibrium_tol;
    const Equilibrium eq = solve_adoption_diffused(model, sopts);
    if (!eq.converged) {
        const auto not_run = [&](const char* name) {
            return PropertyReport{name, false, eq.residual, opts.property_tol, std::nullopt,
                                  fmt::format("equilibrium solver stopped at residual {:.3e}",
                                              eq.residual)};
        };
        out.push_back(not_run("no_partial_adoption"));
        out.push_back(not_run("coexistence"));
        return out;
    }
    out.push_back(check_no_partial_adoption(eq, opts.property_tol));
    out.push_back(check_coexistence(model, eq, opts.property_tol));
    return out;
}

std::string format_report_line(const std::string& instance, const PropertyReport& rep) {
    const Location at = rep.location.value_or(Location{});
    return fmt::format("{} {} {} worst={:.6e} at=({},{})", instance, rep.property,
                       rep.passed ? "pass" : "fail", rep.worst, at.t, at.node);
}

nlohmann::json report_to_json(const std::string& instance, const PropertyReport& rep) {
    nlohmann::json j{{"instance", instance},   {"property", rep.property},
                     {"passed", rep.passed},   {"worst", rep.worst},
                     {"tolerance", rep.tolerance}, {"narrative", rep.narrative}};
    if (rep.location) j["at"] = {rep.location->t, rep.location->node};
    return j;
}

}  // namespace coadopt
