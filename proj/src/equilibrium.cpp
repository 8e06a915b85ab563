#include "coadopt/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "coadopt/io.hpp"

namespace coadopt {

namespace {

double max_norm_diff(const Vec& u, const Vec& v) {
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] - v[i]));
    return worst;
}

/// ||(I - diag(lambda) W~) x - b||_inf
double linear_residual(const Matrix& social, const Vec& lambda, const Vec& x, const Vec& b) {
    const Vec wx = social.multiply(x);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(x[i] - lambda[i] * wx[i] - b[i]));
    }
    return worst;
}

Vec dense_solve(const Matrix& social, const Vec& lambda, const Vec& rhs) {
    const std::size_t n = rhs.size();
    Matrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - lambda[i] * social(i, j);
    Vec b = rhs;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (a(piv, col) == 0.0) throw NumericalError("dense solve: singular opinion system");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double acc = b[ii];
        for (std::size_t j = ii + 1; j < n; ++j) acc -= a(ii, j) * x[j];
        x[ii] = acc / a(ii, ii);
    }
    return x;
}

void require_positive_delta(const Model& model) {
    std::vector<std::string> bad;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < model.n(); ++i)
            if (!(model.tech(k).delta[i] > 0.0)) bad.push_back(fmt::format("delta{}[{}]", k + 1, i));
    if (!bad.empty()) {
        std::string list;
        for (const auto& b : bad) list += (list.empty() ? "" : ", ") + b;
        throw InvalidArgument("delta must be strictly positive for the diffused solve: " + list);
    }
}

Vec anchor_term(const TechParams& p) {
    Vec b(p.x0.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = (1.0 - p.lambda[i] - p.xi[i]) * p.x0[i];
    return b;
}

}  // namespace

LinearSolveResult solve_opinion_system(const Matrix& social, const Vec& lambda, const Vec& rhs,
                                       double tol, LinearMethod method, std::size_t max_iter) {
    const std::size_t n = rhs.size();
    if (social.size() != n || lambda.size() != n) {
        throw InvalidArgument("solve_opinion_system: dimension mismatch");
    }
    if (!(tol > 0.0)) throw InvalidArgument("solve_opinion_system: tol must be positive");

    LinearSolveResult res;
    if (method == LinearMethod::dense_lu) {
        res.x = dense_solve(social, lambda, rhs);
        res.residual = linear_residual(social, lambda, res.x, rhs);
        res.iterations = 1;
    } else {
        // The residual of x equals the Neumann update x - (Lambda W~ x + b).
        Vec x = rhs, wx(n), next(n);
        res.residual = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < max_iter; ++it) {
            social.multiply_into(x, wx);
            double r = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                next[i] = lambda[i] * wx[i] + rhs[i];
                r = std::max(r, std::abs(next[i] - x[i]));
            }
            x.swap(next);
            res.iterations = it + 1;
            if (r <= tol) break;
        }
        res.x = std::move(x);
        res.residual = linear_residual(social, lambda, res.x, rhs);
    }
    if (!(res.residual <= tol)) {
        throw ConvergenceError(
            fmt::format("opinion linear solve reached residual {} > tol {}", res.residual, tol),
            std::numeric_limits<double>::quiet_NaN(), res.residual);
    }
    return res;
}

std::array<Vec, 2> adoption_free_opinions(const Model& model, double tol, LinearMethod method) {
    std::array<Vec, 2> xe;
    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = model.tech(k);
        xe[k] = solve_opinion_system(model.social(), p.lambda, anchor_term(p), tol, method).x;
    }
    return xe;
}

std::array<Vec, 2> opinion_response(const Model& model, const Vec& a1, double tol) {
    const std::size_t n = model.n();
    if (a1.size() != n) throw InvalidArgument("opinion_response: a1 has wrong length");
    require_positive_delta(model);
    std::array<Vec, 2> adopters{a1, Vec(n)};
    for (std::size_t i = 0; i < n; ++i) {
        adopters[1][i] = model.tech(0).delta[i] / model.tech(1).delta[i] * a1[i];
    }
    std::array<Vec, 2> xs;
    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = model.tech(k);
        Vec b = anchor_term(p);
        const Vec exposure = model.physical().multiply(adopters[k]);
        for (std::size_t i = 0; i < n; ++i) b[i] += p.xi[i] * exposure[i];
        xs[k] = solve_opinion_system(model.social(), p.lambda, b, tol).x;
    }
    return xs;
}

Vec t_map(const Model& model, const Vec& a1, double tol) {
    const auto xs = opinion_response(model, a1, tol);
    const TechParams& p1 = model.tech(0);
    const TechParams& p2 = model.tech(1);
    Vec out(a1.size());
    for (std::size_t i = 0; i < a1.size(); ++i) {
        if (!(xs[0][i] > kOpinionFloor) || !(xs[1][i] > kOpinionFloor)) {
            throw NumericalError(fmt::format("opinion degenerate at node {}", i));
        }
        const double ratio = p1.delta[i] / p2.delta[i];
        const double phi = p1.delta[i] * (1.0 / (p1.gamma[i] * xs[0][i]) + 1.0 / (p2.gamma[i] * xs[1][i]));
        out[i] = 1.0 - ratio * a1[i] - phi * a1[i];
    }
    return out;
}

Vec lower_bound_u(const Model& model, double tol) {
    require_positive_delta(model);
    const auto xe = adoption_free_opinions(model, tol);
    const TechParams& p1 = model.tech(0);
    const TechParams& p2 = model.tech(1);
    Vec u(model.n());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!(xe[0][i] > kOpinionFloor) || !(xe[1][i] > kOpinionFloor)) {
            throw NumericalError(fmt::format("opinion degenerate at node {}", i));
        }
        const double phi_bar =
            p1.delta[i] * (1.0 / (p1.gamma[i] * xe[0][i]) + 1.0 / (p2.gamma[i] * xe[1][i]));
        u[i] = std::max(0.0, 1.0 - p1.delta[i] / p2.delta[i] - phi_bar);
    }
    return u;
}

Equilibrium adoption_free_equilibrium(const Model& model, double tol) {
    Equilibrium eq;
    eq.kind = EquilibriumKind::adoption_free;
    auto xe = adoption_free_opinions(model, tol);
    for (std::size_t k = 0; k < 2; ++k) {
        const TechParams& p = model.tech(k);
        eq.residual = std::max(eq.residual, linear_residual(model.social(), p.lambda, xe[k], anchor_term(p)));
    }
    eq.state = SystemState::adoption_free(std::move(xe[0]), std::move(xe[1]));
    eq.converged = true;
    eq.iterations = 1;
    return eq;
}

namespace {

// Opinion solves run ten times tighter than the outer tolerance, but never
// below what double precision can certify for a residual of order one.
double inner_tolerance(double tol) { return std::max(tol / 10.0, 1e-14); }

}  // namespace

Equilibrium solve_adoption_diffused(const Model& model, const SolverOptions& opts) {
    if (!(opts.tol > 0.0)) throw InvalidArgument("solver tol must be positive");
    if (!(opts.eta > 0.0 && opts.eta <= 1.0)) throw InvalidArgument("initial eta must lie in (0,1]");
    const std::size_t n = model.n();
    const double inner_tol = inner_tolerance(opts.tol);

    Equilibrium eq;
    eq.kind = EquilibriumKind::adoption_diffused;
    eq.lower_bound = lower_bound_u(model, inner_tol);
    const Vec& u = eq.lower_bound;

    auto clamp_box = [&u](Vec& a) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i], u[i], 1.0);
    };

    Vec a(n);
    if (opts.start) {
        if (opts.start->size() != n) throw InvalidArgument("solver start has wrong length");
        a = *opts.start;
    } else {
        for (std::size_t i = 0; i < n; ++i) a[i] = 0.5 * (u[i] + 1.0);
    }
    clamp_box(a);

    DampingTrace& tr = eq.damping;
    double eta = opts.eta;
    tr.eta_initial = tr.eta_min = tr.eta_max = eta;
    double prev = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Vec best_a = a;
    std::size_t decreases = 0;

    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const Vec ta = t_map(model, a, inner_tol);
        const double res = max_norm_diff(a, ta);
        eq.iterations = it + 1;
        if (res < best) {
            best = res;
            best_a = a;
        }
        if (res <= opts.tol) {
            eq.converged = true;
            break;
        }
        if (res > prev) {
            eta *= 0.5;
            decreases = 0;
            ++tr.halvings;
        } else if (++decreases >= 5) {
            const double raised = std::min(1.0, eta * 1.25);
            if (raised > eta) ++tr.raises;
            eta = raised;
            decreases = 0;
        }
        tr.eta_min = std::min(tr.eta_min, eta);
        tr.eta_max = std::max(tr.eta_max, eta);
        prev = res;
        for (std::size_t i = 0; i < n; ++i) a[i] = (1.0 - eta) * a[i] + eta * ta[i];
        clamp_box(a);
    }
    tr.eta_final = eta;
    eq.residual = best;

    // Reconstruction from the technology-1 adopters.
    const Vec& a1 = best_a;
    const TechParams& p1 = model.tech(0);
    const TechParams& p2 = model.tech(1);
    auto xs = opinion_response(model, a1, inner_tol);
    SystemState& y = eq.state;
    y = SystemState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        y.a[0][i] = a1[i];
        y.a[1][i] = p1.delta[i] / p2.delta[i] * a1[i];
        y.d[0][i] = p1.delta[i] * a1[i] / (p2.gamma[i] * xs[1][i]);
        y.d[1][i] = p1.delta[i] * a1[i] / (p1.gamma[i] * xs[0][i]);
        eq.on_safeguard_boundary = eq.on_safeguard_boundary || a1[i] == 1.0 || (u[i] > 0.0 && a1[i] == u[i]);
    }
    y.x = std::move(xs);
    for (std::size_t i = 0; i < n; ++i) {
        eq.ratio_check_max_err = std::max(
            eq.ratio_check_max_err, std::abs(y.a[1][i] * p2.delta[i] - y.a[0][i] * p1.delta[i]));
        const double sum = y.s[i] + y.a[0][i] + y.a[1][i] + y.d[0][i] + y.d[1][i];
        eq.simplex_max_err = std::max(eq.simplex_max_err, std::abs(sum - 1.0));
    }
    if (eq.converged && !(eq.simplex_max_err <= 10.0 * opts.tol)) {
        throw NumericalError(fmt::format(
            "reconstructed equilibrium violates the simplex by {} (> 10 tol)", eq.simplex_max_err));
    }
    return eq;
}

UniquenessReport multi_start_uniqueness_check(const Model& model, double tol, std::size_t starts,
                                              std::uint64_t seed, std::size_t max_iter,
                                              std::optional<double> threshold) {
    const Vec u = lower_bound_u(model, inner_tolerance(tol));
    const std::size_t n = model.n();
    std::vector<Vec> origins;
    origins.push_back(u);
    origins.emplace_back(n, 1.0);
    Rng rng(seed);
    for (std::size_t s = 0; s < starts; ++s) {
        Vec p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(u[i], 1.0);
        origins.push_back(std::move(p));
    }

    UniquenessReport rep;
    rep.runs = origins.size();
    rep.threshold = threshold.value_or(10.0 * tol);
    for (std::size_t r = 0; r < origins.size(); ++r) {
        SolverOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter;
        opts.start = origins[r];
        const Equilibrium eq = solve_adoption_diffused(model, opts);
        if (eq.converged) {
            rep.fixed_points.push_back(eq.state.a[0]);
        } else {
            rep.non_converged.push_back(r);
        }
    }
    for (std::size_t i = 0; i < rep.fixed_points.size(); ++i)
        for (std::size_t j = i + 1; j < rep.fixed_points.size(); ++j)
            rep.max_pairwise_distance = std::max(
                rep.max_pairwise_distance, max_norm_diff(rep.fixed_points[i], rep.fixed_points[j]));
    rep.corroborated = !rep.fixed_points.empty() && rep.max_pairwise_distance <= rep.threshold;
    return rep;
}

std::string to_string(EquilibriumKind kind) {
    return kind == EquilibriumKind::adoption_free ? "adoption-free" : "adoption-diffused";
}

nlohmann::json equilibrium_to_json(const Equilibrium& eq) {
    return {
        {"kind", to_string(eq.kind)},
        {"converged", eq.converged},
        {"iterations", eq.iterations},
        {"residual", eq.residual},
        {"state", state_to_json(eq.state)},
        {"ratio_check_max_err", eq.ratio_check_max_err},
        {"simplex_max_err", eq.simplex_max_err},
        {"lower_bound", eq.lower_bound},
        {"on_safeguard_boundary", eq.on_safeguard_boundary},
        {"solver",
         {{"method", "damped-fixed-point"},
          {"eta_initial", eq.damping.eta_initial},
          {"eta_final", eq.damping.eta_final},
          {"eta_min", eq.damping.eta_min},
          {"eta_max", eq.damping.eta_max},
          {"halvings", eq.damping.halvings},
          {"raises", eq.damping.raises}}},
    };
}

nlohmann::json uniqueness_to_json(const UniquenessReport& rep) {
    return {
        {"runs", rep.runs},
        {"converged_runs", rep.fixed_points.size()},
        {"non_converged", rep.non_converged},
        {"max_pairwise_distance", rep.max_pairwise_distance},
        {"threshold", rep.threshold},
        {"corroborated", rep.corroborated},
    };
}

}  // namespace coadopt
