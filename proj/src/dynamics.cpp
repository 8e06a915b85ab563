#include "coadopt/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>

#include <fmt/format.h>

#include "coadopt/io.hpp"

namespace coadopt {

Aggregate aggregate(const SystemState& st) {
    Aggregate g;
    const std::size_t n = st.n();
    auto mean = [n](const Vec& v) {
        double acc = 0.0;
        for (double e : v) acc += e;
        return acc / static_cast<double>(n);
    };
    g.s = mean(st.s);
    for (std::size_t k = 0; k < 2; ++k) {
        g.a[k] = mean(st.a[k]);
        g.d[k] = mean(st.d[k]);
        g.x[k] = mean(st.x[k]);
    }
    return g;
}

namespace {

void require_usable(const Model& model, const SystemState& st) {
    if (st.n() != model.n()) {
        throw InvalidArgument(fmt::format("state has {} nodes, model has {}", st.n(), model.n()));
    }
    const auto rep = validate_initial_state(st, 1e-9);
    if (!rep.passed) throw InvalidArgument("invalid state: " + rep.summary());
}

double guard(double v, StepDiagnostics& diag) {
    if (v >= 0.0) return v;
    if (v > -kClampThreshold) {
        ++diag.clamped;
        return 0.0;
    }
    throw NumericalError(fmt::format("update produced negative fraction {}", v));
}

}  // namespace

SystemState step(const Model& model, const SystemState& st, StepDiagnostics* diag) {
    require_usable(model, st);
    StepDiagnostics local;
    StepDiagnostics& dg = diag ? *diag : local;

    const std::size_t n = model.n();
    const Matrix& W = model.physical();
    const Matrix& Ws = model.social();
    std::array<Vec, 2> exposure, social_opinion;
    for (std::size_t k = 0; k < 2; ++k) {
        exposure[k] = W.multiply(st.a[k]);
        social_opinion[k] = Ws.multiply(st.x[k]);
    }

    SystemState next = SystemState::zeros(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 2> inflow{};
        for (std::size_t k = 0; k < 2; ++k) {
            inflow[k] = model.tech(k).beta[i] * st.x[k][i] * st.s[i] * exposure[k][i];
        }
        next.s[i] = guard(st.s[i] - inflow[0] - inflow[1], dg);

        for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t l = other(k);
            const TechParams& p = model.tech(k);
            const TechParams& q = model.tech(l);
            next.a[k][i] = guard(st.a[k][i] + inflow[k] - p.delta[i] * st.a[k][i] +
                                     p.gamma[i] * st.x[k][i] * st.d[l][i],
                                 dg);
            next.d[k][i] = guard(
                st.d[k][i] - q.gamma[i] * st.x[l][i] * st.d[k][i] + p.delta[i] * st.a[k][i], dg);
            next.x[k][i] = guard((1.0 - p.lambda[i] - p.xi[i]) * p.x0[i] +
                                     p.lambda[i] * social_opinion[k][i] + p.xi[i] * exposure[k][i],
                                 dg);
        }
    }
    return next;
}

bool Trajectory::is_injection_step(std::size_t t) const {
    return std::any_of(events.begin(), events.end(),
                       [t](const InjectionEvent& e) { return e.time == t; });
}

namespace {

void apply_injection(SystemState& st, const InjectionEvent& e) {
    const std::size_t k = index(e.technology);
    for (std::size_t i = 0; i < st.n(); ++i) {
        const double moved = std::min(e.fraction, st.s[i]);
        st.s[i] -= moved;
        st.a[k][i] += moved;
    }
}

void check_events(const std::vector<InjectionEvent>& events) {
    for (std::size_t e = 0; e < events.size(); ++e) {
        const int tech = static_cast<int>(events[e].technology);
        if (tech != 1 && tech != 2) {
            throw InvalidArgument(fmt::format("event {}: technology {} must be 1 or 2", e, tech));
        }
        if (!(events[e].fraction > 0.0 && events[e].fraction < 1.0)) {
            throw InvalidArgument(
                fmt::format("event {}: fraction {} must lie in (0,1)", e, events[e].fraction));
        }
        if (e > 0 && events[e].time < events[e - 1].time) {
            throw InvalidArgument("events must be sorted by time");
        }
    }
}

}  // namespace

Trajectory simulate(const Model& model, const SystemState& st0, std::size_t horizon,
                    const std::vector<InjectionEvent>& events, Storage storage) {
    check_events(events);
    require_usable(model, st0);

    Trajectory tr;
    tr.horizon = horizon;
    tr.config_digest = config_digest(model.config());
    tr.streaming = storage == Storage::streaming ||
                   (storage == Storage::automatic && horizon > kStreamingHorizon);
    if (!tr.streaming) tr.states.reserve(horizon + 1);

    StepDiagnostics diag;
    std::size_t next_event = 0;
    SystemState current = st0;
    for (std::size_t t = 0;; ++t) {
        while (next_event < events.size() && events[next_event].time == t) {
            apply_injection(current, events[next_event]);
            tr.events.push_back(events[next_event]);
            ++next_event;
        }
        if (tr.streaming) {
            tr.aggregates.push_back(aggregate(current));
        } else {
            tr.states.push_back(current);
        }
        if (t == horizon) break;
        current = step(model, current, &diag);
    }
    if (tr.streaming) tr.states.push_back(std::move(current));
    tr.clamped = diag.clamped;
    return tr;
}

std::vector<Aggregate> trajectory_metrics(const Trajectory& tr) {
    if (tr.states.empty()) throw InvalidArgument("trajectory_metrics: empty trajectory");
    if (tr.streaming) return tr.aggregates;
    std::vector<Aggregate> out;
    out.reserve(tr.states.size());
    for (const auto& st : tr.states) out.push_back(aggregate(st));
    return out;
}

std::string trajectory_to_csv(const Trajectory& tr, std::size_t stride) {
    if (tr.streaming) throw InvalidArgument("per-node output needs a fully stored trajectory");
    stride = std::max<std::size_t>(stride, 1);
    std::string out = "t,node,s,a1,a2,d1,d2,x1,x2\n";
    for (std::size_t t = 0; t < tr.states.size(); ++t) {
        if (t % stride != 0 && t + 1 != tr.states.size()) continue;
        const SystemState& st = tr.states[t];
        for (std::size_t i = 0; i < st.n(); ++i) {
            out += fmt::format("{},{},{},{},{},{},{},{},{}\n", t, i, st.s[i], st.a[0][i],
                               st.a[1][i], st.d[0][i], st.d[1][i], st.x[0][i], st.x[1][i]);
        }
    }
    return out;
}

std::string metrics_to_csv(const std::vector<Aggregate>& metrics) {
    std::string out = "t,mean_s,mean_a1,mean_a2,mean_d1,mean_d2,mean_x1,mean_x2\n";
    for (std::size_t t = 0; t < metrics.size(); ++t) {
        const Aggregate& g = metrics[t];
        out += fmt::format("{},{},{},{},{},{},{},{}\n", t, g.s, g.a[0], g.a[1], g.d[0], g.d[1],
                           g.x[0], g.x[1]);
    }
    return out;
}

InjectionEvent parse_entry_spec(std::string_view spec, double default_fraction) {
    const auto fail = [&] {
        return InvalidArgument(fmt::format("bad entry spec '{}', expected techK@T[:fraction]", spec));
    };
    if (spec.size() < 7 || spec.substr(0, 4) != "tech") throw fail();
    InjectionEvent e;
    if (spec[4] == '1') {
        e.technology = Tech::one;
    } else if (spec[4] == '2') {
        e.technology = Tech::two;
    } else {
        throw fail();
    }
    if (spec[5] != '@') throw fail();
    std::string rest(spec.substr(6));
    std::optional<std::string> frac;
    if (const auto colon = rest.find(':'); colon != std::string::npos) {
        frac = rest.substr(colon + 1);
        rest = rest.substr(0, colon);
    }
    try {
        std::size_t pos = 0;
        const long long t = std::stoll(rest, &pos);
        if (pos != rest.size() || t < 0) throw fail();
        e.time = static_cast<std::size_t>(t);
        e.fraction = default_fraction;
        if (frac) {
            e.fraction = std::stod(*frac, &pos);
            if (pos != frac->size()) throw fail();
        }
    } catch (const std::logic_error&) {
        throw fail();
    }
    if (!(e.fraction > 0.0 && e.fraction < 1.0)) throw fail();
    return e;
}

}  // namespace coadopt
