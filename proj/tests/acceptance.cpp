// Acceptance run: one line per criterion, `--criterion N` selects one.
// Exit status is 0 iff every selected criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "coadopt/dynamics.hpp"
#include "coadopt/equilibrium.hpp"
#include "coadopt/verify.hpp"
#include "oracles.hpp"

using namespace coadopt;

namespace {

// Pinned tolerances.
constexpr double kSimplexTol = 1e-9;
constexpr double kBoxTol = 1e-14;
constexpr double kMonotoneSlack = 1e-15;
constexpr double kOpinionSlack = 1e-14;
constexpr double kFreeFixedTol = 1e-12;
constexpr double kFreeLinearTol = 1e-12;
constexpr double kInstabilitySlack = 1e-15;
constexpr double kSolverTol = 1e-10;
constexpr double kStepFixedTol = 1e-9;
constexpr double kOracleTol = 1e-6;
constexpr double kRatioTol = 1e-9;
constexpr double kUniqueTol = 1e-8;
constexpr double kAdoptionTol = 1e-9;
constexpr double kShareTol = 1e-6;
constexpr double kDelayedEqTol = 1e-9;
constexpr double kSweepTol = 1e-8;

constexpr std::size_t kSuiteHorizon = 10000;
constexpr std::size_t kInstabilityHorizon = 1000;
constexpr std::size_t kEntryTime = 100;
constexpr double kSeedFraction = 0.01;
constexpr std::uint64_t kScenarioSeed = 7;

const std::size_t kSizes[] = {1, 2, 10, 50};

struct Verdict {
    bool passed;
    std::string detail;
};

// Random validated instances, n cycling through {1, 2, 10, 50}.
std::vector<Model> instances(std::size_t count) {
    std::vector<Model> out;
    for (std::uint64_t seed = 0; seed < count; ++seed) {
        out.push_back(Model::validated(random_instance(kSizes[seed % 4], seed)));
    }
    return out;
}

// 100 instances: every size with seeds 0..24. Every fifth seed delays the
// entry of technology 2 to t = 100 so injection steps are exercised.
template <typename Visit>
void for_each_suite_trajectory(Visit&& visit) {
    for (std::size_t n : kSizes) {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const Model model = Model::validated(random_instance(n, seed));
            std::vector<InjectionEvent> events;
            std::vector<Tech> seeded = {Tech::one, Tech::two};
            if (seed % 5 == 4) {
                events.push_back({kEntryTime, Tech::two, kSeedFraction});
                seeded = {Tech::one};
            }
            const Trajectory tr = simulate(model, early_stage_state(model.config(), kSeedFraction, seeded),
                                           kSuiteHorizon, events, Storage::full);
            visit(model, tr, fmt::format("n={} seed={}", n, seed));
        }
    }
}

double box_excess(const Trajectory& tr) {
    double worst = 0.0;
    for (const auto& st : tr.states) {
        const auto scan = [&](const Vec& v) {
            for (double x : v) worst = std::max({worst, -x, x - 1.0});
        };
        scan(st.s);
        for (std::size_t k = 0; k < 2; ++k) {
            scan(st.a[k]);
            scan(st.d[k]);
            scan(st.x[k]);
        }
    }
    return worst;
}

double simplex_excess(const Trajectory& tr) {
    double worst = 0.0;
    for (const auto& st : tr.states)
        for (std::size_t i = 0; i < st.n(); ++i)
            worst = std::max(worst, std::abs(st.s[i] + st.a[0][i] + st.a[1][i] + st.d[0][i] + st.d[1][i] - 1.0));
    return worst;
}

Verdict c1_conservation() {
    double sum = 0.0, box = 0.0;
    std::size_t runs = 0;
    std::string worst_at;
    for_each_suite_trajectory([&](const Model&, const Trajectory& tr, const std::string& label) {
        ++runs;
        const double s = simplex_excess(tr), b = box_excess(tr);
        if (s > sum) worst_at = label;
        sum = std::max(sum, s);
        box = std::max(box, b);
        // The library checker must agree with the direct scan.
        if (!check_invariance(tr, kSimplexTol).passed) sum = std::max(sum, 2 * kSimplexTol);
    });
    return {sum <= kSimplexTol && box <= kBoxTol,
            fmt::format("{} runs, horizon {}: max |sum-1| = {:.3e} (tol {:.0e}, worst {}), max box excess = {:.3e} (tol {:.0e})",
                        runs, kSuiteHorizon, sum, kSimplexTol, worst_at, box, kBoxTol)};
}

Verdict c2_monotone() {
    double worst = 0.0;
    std::size_t runs = 0, failed = 0, injections = 0;
    for_each_suite_trajectory([&](const Model&, const Trajectory& tr, const std::string&) {
        ++runs;
        injections += tr.events.size();
        const auto rep = check_monotone_s(tr, kMonotoneSlack);
        worst = std::max(worst, rep.worst);
        failed += !rep.passed;
    });
    return {failed == 0, fmt::format("{} runs ({} injection steps exempt): largest increase of s = {:.3e} (slack {:.0e}), {} failing",
                                     runs, injections, worst, kMonotoneSlack, failed)};
}

Verdict c3_opinion_bound() {
    double worst = 0.0;
    std::size_t runs = 0, failed = 0;
    for_each_suite_trajectory([&](const Model& model, const Trajectory& tr, const std::string&) {
        ++runs;
        const auto rep = check_opinion_lower_bound(model, tr, kOpinionSlack);
        worst = std::max(worst, rep.worst);
        failed += !rep.passed;
    });
    return {failed == 0, fmt::format("{} runs: largest shortfall below (1-lambda-xi) x0 = {:.3e} (slack {:.0e}), {} failing",
                                     runs, worst, kOpinionSlack, failed)};
}

Verdict c4_adoption_free() {
    double fixed = 0.0, linear = 0.0;
    for (const Model& model : instances(25)) {
        const Equilibrium eq = adoption_free_equilibrium(model, kFreeLinearTol);
        linear = std::max(linear, eq.residual);
        fixed = std::max(fixed, max_abs_diff(step(model, eq.state), eq.state));
    }
    return {fixed <= kFreeFixedTol && linear <= kFreeLinearTol,
            fmt::format("25 instances: max ||step(y_e)-y_e|| = {:.3e} (tol {:.0e}), max linear residual = {:.3e} (tol {:.0e})",
                        fixed, kFreeFixedTol, linear, kFreeLinearTol)};
}

Verdict c5_instability() {
    std::vector<Model> models = instances(25);
    models.push_back(Model::validated(testing::scalar_e1()));
    std::size_t runs = 0, failed = 0;
    double worst = 0.0;
    for (double eps : {0.01, 0.1, 0.5}) {
        for (const Model& model : models) {
            ++runs;
            const auto rep = demo_instability(model, eps, kInstabilityHorizon, kInstabilitySlack);
            failed += !rep.passed;
            worst = std::max(worst, rep.worst);
        }
    }
    return {failed == 0, fmt::format("{} runs (eps in {{0.01,0.1,0.5}}, T={}): {} failing, "
                                     "largest eps - ||s(t)-1|| = {:.3e} (slack {:.0e})",
                                     runs, kInstabilityHorizon, failed, worst, kInstabilitySlack)};
}

struct Solved {
    std::string label;
    Model model;
    Equilibrium eq;
};

std::vector<Solved> diffused_solves() {
    std::vector<Solved> out;
    SolverOptions opts;
    opts.tol = kSolverTol;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Model model = Model::validated(random_instance(kSizes[seed % 4], seed));
        Equilibrium eq = solve_adoption_diffused(model, opts);
        out.push_back({fmt::format("n={} seed={}", kSizes[seed % 4], seed), std::move(model), std::move(eq)});
    }
    Model e1 = Model::validated(testing::scalar_e1());
    Equilibrium eq = solve_adoption_diffused(e1, opts);
    out.push_back({"scalar", std::move(e1), std::move(eq)});
    return out;
}

Verdict c6_diffused() {
    const auto solves = diffused_solves();
    std::size_t not_converged = 0;
    double residual = 0.0, fixed = 0.0;
    for (const auto& s : solves) {
        not_converged += !s.eq.converged;
        residual = std::max(residual, s.eq.residual);
        fixed = std::max(fixed, max_abs_diff(step(s.model, s.eq.state), s.eq.state));
    }
    const double oracle = static_cast<double>(testing::ScalarOracle(testing::scalar_e1()).fixed_point());
    const double e1_err = std::abs(solves.back().eq.state.a[0][0] - oracle);
    return {not_converged == 0 && residual <= kSolverTol && fixed <= kStepFixedTol && e1_err <= kOracleTol,
            fmt::format("26 solves, {} not converged: max residual = {:.3e} (tol {:.0e}), max ||step(y*)-y*|| = {:.3e} (tol {:.0e}), "
                        "scalar a1* = {:.12f} vs bisection {:.12f}, |diff| = {:.3e} (tol {:.0e})",
                        not_converged, residual, kSolverTol, fixed, kStepFixedTol,
                        solves.back().eq.state.a[0][0], oracle, e1_err, kOracleTol)};
}

Verdict c7_ratio() {
    double worst = 0.0;
    std::size_t count = 0;
    for (const auto& s : diffused_solves()) {
        if (!s.eq.converged) continue;
        ++count;
        const auto& st = s.eq.state;
        for (std::size_t i = 0; i < st.n(); ++i) {
            worst = std::max(worst, std::abs(st.a[1][i] * s.model.tech(1).delta[i] -
                                             st.a[0][i] * s.model.tech(0).delta[i]));
        }
        worst = std::max(worst, s.eq.ratio_check_max_err);
    }
    return {count > 0 && worst <= kRatioTol,
            fmt::format("{} converged solves: max |a2 d2 - a1 d1| = {:.3e} (tol {:.0e})", count, worst, kRatioTol)};
}

Verdict c8_uniqueness() {
    double worst = 0.0;
    std::size_t failed_runs = 0, instances_ok = 0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Model model = Model::validated(random_instance(kSizes[seed % 4], seed));
        const auto rep = multi_start_uniqueness_check(model, kSolverTol, 8, seed, 100000, kUniqueTol);
        worst = std::max(worst, rep.max_pairwise_distance);
        failed_runs += rep.non_converged.size();
        instances_ok += rep.corroborated && rep.non_converged.empty();
    }
    return {instances_ok == 25,
            fmt::format("25 instances x 10 starts: {} corroborated, {} runs not converged, max pairwise distance = {:.3e} (tol {:.0e})",
                        instances_ok, failed_runs, worst, kUniqueTol)};
}

Verdict c9_no_partial() {
    double s_max = 0.0, a_min = std::numeric_limits<double>::infinity();
    std::size_t count = 0, checker_fail = 0;
    for (const auto& s : diffused_solves()) {
        if (!s.eq.converged) continue;
        ++count;
        const auto& st = s.eq.state;
        s_max = std::max(s_max, *std::max_element(st.s.begin(), st.s.end()));
        for (std::size_t k = 0; k < 2; ++k) a_min = std::min(a_min, *std::min_element(st.a[k].begin(), st.a[k].end()));
        checker_fail += !check_no_partial_adoption(s.eq, kAdoptionTol).passed;
        checker_fail += !check_coexistence(s.model, s.eq, kAdoptionTol).passed;
    }
    return {count > 0 && s_max <= kAdoptionTol && a_min >= kAdoptionTol && checker_fail == 0,
            fmt::format("{} equilibria: max s* = {:.3e} (<= {:.0e}), min a* = {:.3e} (>= {:.0e}), {} checker failures",
                        count, s_max, kAdoptionTol, a_min, kAdoptionTol, checker_fail)};
}

Verdict c10_crossover() {
    const ModelConfig cfg = random_instance(50, kScenarioSeed, ParamRanges::crossover());
    const Model model = Model::validated(cfg);
    const Trajectory tr = simulate(model, early_stage_state(cfg, kSeedFraction), kSuiteHorizon, {}, Storage::streaming);
    const auto metrics = trajectory_metrics(tr);
    std::optional<std::size_t> lead;
    for (std::size_t t = 0; t <= 50 && t < metrics.size(); ++t) {
        if (metrics[t].a[0] > metrics[t].a[1]) {
            lead = t;
            break;
        }
    }
    const Aggregate& last = metrics.back();
    const SystemState& end = tr.final_state();
    double share = 0.0;
    for (std::size_t i = 0; i < cfg.n(); ++i) {
        share = std::max(share, std::abs(end.a[1][i] / end.a[0][i] - cfg.tech[0].delta[i] / cfg.tech[1].delta[i]));
    }
    SolverOptions opts;
    opts.tol = kSolverTol;
    const Equilibrium eq = solve_adoption_diffused(model, opts);
    const bool ok = lead && last.a[1] > last.a[0] && share <= kShareTol;
    return {ok, fmt::format("n=50 seed={}: mean a1 > mean a2 first at t={}, at t={} mean a1 = {:.6f} < mean a2 = {:.6f}; "
                            "max_i |a2/a1 - d1/d2| = {:.3e} (tol {:.0e}); distance to solver equilibrium = {:.3e}",
                            kScenarioSeed, lead ? fmt::format("{}", *lead) : std::string("none"), kSuiteHorizon,
                            last.a[0], last.a[1], share, kShareTol, max_abs_diff(end, eq.state))};
}

Verdict c11_delayed_entry() {
    const ModelConfig cfg = random_instance(50, kScenarioSeed, ParamRanges::crossover());
    const Model model = Model::validated(cfg);
    SolverOptions opts;
    opts.tol = kSolverTol;

    // Delayed-entry run: technology 2 unseeded at t = 0, injected at T = 100.
    const Trajectory delayed = simulate(model, early_stage_state(cfg, kSeedFraction, {Tech::one}), kSuiteHorizon,
                                        {{kEntryTime, Tech::two, kSeedFraction}}, Storage::full);
    double pre_entry_a2 = 0.0;
    std::size_t first_positive = kEntryTime;
    for (std::size_t t = 0; t < kEntryTime; ++t) {
        const Vec& a2 = delayed.states[t].a[1];
        const double m = *std::max_element(a2.begin(), a2.end());
        if (m > 0.0 && first_positive == kEntryTime) first_positive = t;
        pre_entry_a2 = std::max(pre_entry_a2, m);
    }
    const Equilibrium eq_delayed = solve_adoption_diffused(model, opts);
    const Equilibrium eq_simultaneous =
        solve_adoption_diffused(Model::validated(random_instance(50, kScenarioSeed, ParamRanges::crossover())), opts);
    const double eq_gap = max_abs_diff(eq_delayed.state, eq_simultaneous.state);
    const double endpoint = max_abs_diff(delayed.final_state(), eq_delayed.state);

    const bool eq_ok = eq_delayed.converged && eq_simultaneous.converged && eq_gap <= kDelayedEqTol;
    const bool zero_ok = pre_entry_a2 == 0.0;
    return {eq_ok && zero_ok,
            fmt::format("equilibrium gap = {:.3e} (tol {:.0e}) {}; a2 == 0 for t < {}: {} (max pre-entry a2 = {:.6f}, "
                        "first positive at t={}, fed by switching from d1); delayed run endpoint vs equilibrium = {:.3e}",
                        eq_gap, kDelayedEqTol, eq_ok ? "ok" : "FAILED", kEntryTime, zero_ok ? "ok" : "FAILED",
                        pre_entry_a2, first_positive, endpoint)};
}

double adoption_change(const Equilibrium& base, const Equilibrium& other) {
    double d = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < base.state.n(); ++i)
            d = std::max(d, std::abs(base.state.a[k][i] - other.state.a[k][i]));
    return d;
}

Verdict c12_sweep() {
    const ModelConfig base_cfg = random_instance(50, kScenarioSeed);
    SolverOptions opts;
    opts.tol = kSolverTol;
    const Equilibrium base = solve_adoption_diffused(Model::validated(base_cfg), opts);

    double beta_change = 0.0;
    std::size_t beta_points = 0, beta_skipped = 0, not_converged = !base.converged;
    for (double f : {0.8, 0.9, 1.1, 1.2}) {
        // Joint scaling of both technologies' beta; points whose beta sums
        // leave (0,1) are outside the model and skipped.
        ModelConfig cfg = base_cfg;
        for (auto& p : cfg.tech)
            for (double& b : p.beta) b *= f;
        if (!validate_assumption1(cfg).passed) {
            ++beta_skipped;
            continue;
        }
        const Equilibrium eq = solve_adoption_diffused(Model::validated(cfg), opts);
        not_converged += !eq.converged;
        ++beta_points;
        beta_change = std::max(beta_change, adoption_change(base, eq));
    }

    double x0_change = 0.0;
    for (double shift : {-0.1, 0.1}) {
        ModelConfig cfg = base_cfg;
        for (auto& p : cfg.tech)
            for (double& x : p.x0) x = std::clamp(x + shift, 0.01, 1.0);
        const Equilibrium eq = solve_adoption_diffused(Model::validated(cfg), opts);
        not_converged += !eq.converged;
        x0_change = std::max(x0_change, adoption_change(base, eq));
    }
    const bool beta_ok = beta_change <= kSweepTol;
    const bool x0_ok = x0_change <= kSweepTol;
    return {beta_ok && x0_ok && not_converged == 0,
            fmt::format("seed-{} n=50: beta x{{0.8..1.2}} ({} points, {} skipped) max |da*| = {:.3e} {}; "
                        "x0 +-0.1 max |da*| = {:.3e} {} (tol {:.0e}); {} solves not converged",
                        kScenarioSeed, beta_points, beta_skipped, beta_change, beta_ok ? "ok" : "FAILED", x0_change,
                        x0_ok ? "ok" : "FAILED", kSweepTol, not_converged)};
}

struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "conservation and box", c1_conservation},
        {2, "monotone susceptibles", c2_monotone},
        {3, "opinion lower bound", c3_opinion_bound},
        {4, "adoption-free fixed point", c4_adoption_free},
        {5, "instability bound", c5_instability},
        {6, "adoption-diffused equilibrium", c6_diffused},
        {7, "ratio law", c7_ratio},
        {8, "uniqueness corroboration", c8_uniqueness},
        {9, "no partial adoption, no monopoly", c9_no_partial},
        {10, "crossover scenario", c10_crossover},
        {11, "delayed entry scenario", c11_delayed_entry},
        {12, "beta and opinion invariance sweep", c12_sweep},
    };

    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }
    if (only < 0 || only > static_cast<int>(all.size())) {
        std::cerr << "criterion must be 1.." << all.size() << '\n';
        return 2;
    }

    bool ok = true;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        ok = ok && v.passed;
        std::cout << fmt::format("criterion {:2d} {} {}: {}", c.id, v.passed ? "PASS" : "FAIL", c.name, v.detail)
                  << std::endl;
    }
    return ok ? 0 : 1;
}
