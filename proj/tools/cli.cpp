#include "cli.hpp"

#include <algorithm>
#include <ctime>
#include <filesystem>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "coadopt/dynamics.hpp"
#include "coadopt/equilibrium.hpp"
#include "coadopt/io.hpp"
#include "coadopt/verify.hpp"

namespace coadopt::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

/// Shifted x0 entries are kept inside (0, 1].
constexpr double kX0Floor = 0.01;

/// Bad flags, unreadable inputs, unwritable outputs: exit 2.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string config;
    bool normalize = false;
    std::optional<std::size_t> random_n;
    std::uint64_t seed = 0;
    std::string seeds;
    bool crossover = false;
    double density = 0.2;

    std::size_t horizon = 1000;
    double tol = 1e-10;
    std::size_t max_iter = 100000;
    double seed_fraction = 0.01;
    std::vector<std::string> enter;
    std::string out = "out";
    std::string report_dir;  ///< verify writes files only when given
    std::string format = "csv";
    bool deterministic_sum = false;
    std::size_t stride = 1;
    std::size_t starts = 8;
    std::string param;
    std::string grid;
};

struct Instance {
    ModelConfig cfg;
    std::string digest;
    std::string label;
    std::optional<std::uint64_t> seed;
};

std::string now_utc() { return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr))); }

void emit(const fs::path& path, std::string_view contents) {
    try {
        write_file(path, contents);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw UsageError(fmt::format("cannot create output directory '{}'", dir));
    }
    return fs::path(dir);
}

class Manifest {
public:
    Manifest(std::string command, std::string subcommand, const Options& o) {
        doc_["command"] = std::move(command);
        doc_["subcommand"] = std::move(subcommand);
        doc_["version"] = COADOPT_VERSION;
        doc_["prng"] = kPrngId;
        doc_["deterministic_sum"] = o.deterministic_sum;
        doc_["started_at"] = now_utc();
        doc_["config_digests"] = json::array();
        doc_["seeds"] = json::array();
        doc_["outputs"] = json::array();
        doc_["parameters"] = json::object();
    }

    void add_instance(const Instance& in) {
        doc_["config_digests"].push_back(in.digest);
        if (in.seed) doc_["seeds"].push_back(*in.seed);
    }
    json& parameters() { return doc_["parameters"]; }

    void write_output(const fs::path& path, std::string_view contents) {
        emit(path, contents);
        doc_["outputs"].push_back(path.string());
    }

    void finish(const fs::path& path) {
        doc_["finished_at"] = now_utc();
        emit(path, doc_.dump(2));
    }

private:
    json doc_;
};

std::vector<std::uint64_t> parse_seeds(const Options& o) {
    if (o.seeds.empty()) return {o.seed};
    const auto dots = o.seeds.find("..");
    try {
        if (dots == std::string::npos) return {std::stoull(o.seeds)};
        const auto lo = std::stoull(o.seeds.substr(0, dots));
        const auto hi = std::stoull(o.seeds.substr(dots + 2));
        if (hi < lo) throw UsageError(fmt::format("empty seed range '{}'", o.seeds));
        std::vector<std::uint64_t> out;
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    } catch (const std::logic_error&) {
        throw UsageError(fmt::format("bad seed range '{}', expected a..b", o.seeds));
    }
}

std::vector<Instance> load_instances(const Options& o) {
    if (o.config.empty() == !o.random_n) {
        throw UsageError("give exactly one of --config or --random");
    }
    std::vector<Instance> out;
    try {
        if (!o.config.empty()) {
            const std::string bytes = read_file(o.config);
            json doc;
            try {
                doc = json::parse(bytes);
            } catch (const json::exception& e) {
                throw InvalidArgument(fmt::format("'{}' is not valid JSON: {}", o.config, e.what()));
            }
            Instance in;
            in.cfg = parse_config(doc, fs::path(o.config).parent_path(), o.normalize);
            in.digest = hex_digest(fnv1a64(bytes));
            in.label = o.config;
            in.seed = in.cfg.seed;
            out.push_back(std::move(in));
            return out;
        }
        const ParamRanges ranges = o.crossover ? ParamRanges::crossover() : ParamRanges{};
        for (const auto seed : parse_seeds(o)) {
            Instance in;
            in.cfg = random_instance(*o.random_n, seed, ranges, o.density);
            in.digest = config_digest(in.cfg);
            in.label = fmt::format("random:{}:{}", *o.random_n, seed);
            in.seed = seed;
            out.push_back(std::move(in));
        }
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return out;
}

Instance load_single(const Options& o) {
    auto all = load_instances(o);
    if (all.size() != 1) throw UsageError("this command takes a single instance");
    return std::move(all.front());
}

/// Prints every violation to err and returns nullopt when the config fails
/// the standing assumptions.
std::optional<Model> validated_or_report(const Instance& in, std::ostream& err) {
    const auto rep = validate_assumption1(in.cfg);
    if (!rep.passed) {
        for (const auto& v : rep.violations) err << in.label << ": " << v << '\n';
        return std::nullopt;
    }
    return Model::validated(in.cfg);
}

int cmd_validate(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
    bool all = true;
    for (const auto& in : load_instances(o)) {
        m.add_instance(in);
        const auto rep = validate_assumption1(in.cfg);
        if (rep.passed) {
            out << in.label << " valid digest=" << in.digest << '\n';
        } else {
            all = false;
            for (const auto& v : rep.violations) err << in.label << ": " << v << '\n';
        }
    }
    return all ? kOk : kDomainFailure;
}

int cmd_simulate(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
    const Instance in = load_single(o);
    m.add_instance(in);
    const auto model = validated_or_report(in, err);
    if (!model) return kDomainFailure;

    std::vector<InjectionEvent> events;
    try {
        for (const auto& spec : o.enter) events.push_back(parse_entry_spec(spec, o.seed_fraction));
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const InjectionEvent& a, const InjectionEvent& b) { return a.time < b.time; });

    // Technologies with a scheduled entry start without adopters.
    std::vector<Tech> seeded;
    for (Tech k : {Tech::one, Tech::two}) {
        if (std::none_of(events.begin(), events.end(),
                         [k](const InjectionEvent& e) { return e.technology == k; })) {
            seeded.push_back(k);
        }
    }
    const SystemState st0 = seeded.empty()
                                ? SystemState::adoption_free(in.cfg.tech[0].x0, in.cfg.tech[1].x0)
                                : early_stage_state(in.cfg, o.seed_fraction, seeded);

    const fs::path dir = prepare_dir(o.out);
    const Trajectory tr = simulate(*model, st0, o.horizon, events);

    json& p = m.parameters();
    p["horizon"] = o.horizon;
    p["seed_fraction"] = o.seed_fraction;
    p["seeded"] = json::array();
    for (Tech k : seeded) p["seeded"].push_back(static_cast<int>(k));
    p["events"] = o.enter;
    p["streaming"] = tr.streaming;
    p["clamped"] = tr.clamped;

    const auto metrics = trajectory_metrics(tr);
    if (o.format == "json") {
        json doc;
        doc["config_digest"] = in.digest;
        doc["horizon"] = o.horizon;
        doc["aggregates"] = json::array();
        for (std::size_t t = 0; t < metrics.size(); ++t) {
            const Aggregate& g = metrics[t];
            doc["aggregates"].push_back({{"t", t},       {"mean_s", g.s},     {"mean_a1", g.a[0]},
                                         {"mean_a2", g.a[1]}, {"mean_d1", g.d[0]}, {"mean_d2", g.d[1]},
                                         {"mean_x1", g.x[0]}, {"mean_x2", g.x[1]}});
        }
        doc["final_state"] = state_to_json(tr.final_state());
        m.write_output(dir / "trajectory.json", doc.dump(2));
    } else {
        if (!tr.streaming) m.write_output(dir / "trajectory.csv", trajectory_to_csv(tr, o.stride));
        m.write_output(dir / "aggregate.csv", metrics_to_csv(metrics));
        m.write_output(dir / "final_state.csv", state_to_csv(tr.final_state()));
    }
    m.finish(dir / "manifest.json");

    const Aggregate& last = metrics.back();
    out << fmt::format("t={} mean_s={:.6f} mean_a1={:.6f} mean_a2={:.6f} mean_d1={:.6f} mean_d2={:.6f}\n",
                       o.horizon, last.s, last.a[0], last.a[1], last.d[0], last.d[1]);
    return kOk;
}

int cmd_equilibrium(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
    const Instance in = load_single(o);
    m.add_instance(in);
    const auto model = validated_or_report(in, err);
    if (!model) return kDomainFailure;
    const fs::path dir = prepare_dir(o.out);

    SolverOptions so;
    so.tol = o.tol;
    so.max_iter = o.max_iter;
    const Equilibrium eq = solve_adoption_diffused(*model, so);
    const UniquenessReport uq = multi_start_uniqueness_check(*model, o.tol, o.starts, o.seed, o.max_iter);

    json& p = m.parameters();
    p["tol"] = o.tol;
    p["max_iter"] = o.max_iter;
    p["starts"] = o.starts;
    p["start_seed"] = o.seed;

    json eq_doc = equilibrium_to_json(eq);
    eq_doc["config_digest"] = in.digest;
    m.write_output(dir / "equilibrium.json", eq_doc.dump(2));
    m.write_output(dir / "uniqueness.json", uniqueness_to_json(uq).dump(2));
    m.finish(dir / "manifest.json");

    if (!eq.converged) {
        err << fmt::format("equilibrium solver did not converge: best residual {:.3e} after {} iterations\n",
                           eq.residual, eq.iterations);
        return kDomainFailure;
    }
    const Aggregate g = aggregate(eq.state);
    out << fmt::format("converged residual={:.3e} iterations={} mean_a1={:.10f} mean_a2={:.10f} "
                       "ratio_err={:.3e}\n",
                       eq.residual, eq.iterations, g.a[0], g.a[1], eq.ratio_check_max_err);
    if (!uq.corroborated) {
        err << fmt::format("uniqueness not corroborated: {} of {} runs failed, max pairwise distance {:.3e}\n",
                           uq.non_converged.size(), uq.runs, uq.max_pairwise_distance);
        return kDomainFailure;
    }
    return kOk;
}

struct VerifyOutcome {
    bool valid = true;
    std::vector<std::string> violations;
    std::vector<PropertyReport> reports;
};

int cmd_verify(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
    const auto instances = load_instances(o);
    SuiteOptions so;
    so.horizon = o.horizon;
    so.seed_fraction = o.seed_fraction;
    so.equilibrium_tol = o.tol;

    std::vector<std::future<VerifyOutcome>> jobs;
    for (const auto& in : instances) {
        m.add_instance(in);
        jobs.push_back(std::async(std::launch::async, [&in, so] {
            VerifyOutcome r;
            const auto rep = validate_assumption1(in.cfg);
            if (!rep.passed) {
                r.valid = false;
                r.violations = rep.violations;
                return r;
            }
            r.reports = run_property_suite(Model::validated(in.cfg), so);
            return r;
        }));
    }

    bool all = true;
    std::string text;
    json doc = json::array();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Instance& in = instances[i];
        const VerifyOutcome r = jobs[i].get();
        if (!r.valid) {
            all = false;
            for (const auto& v : r.violations) err << in.label << ": " << v << '\n';
            text += fmt::format("{} validation fail\n", in.digest);
            doc.push_back({{"instance", in.digest}, {"label", in.label}, {"validation", r.violations}});
            continue;
        }
        for (const auto& rep : r.reports) {
            const std::string line = format_report_line(in.digest, rep);
            text += line + '\n';
            json j = report_to_json(in.digest, rep);
            j["label"] = in.label;
            doc.push_back(std::move(j));
            if (!rep.passed) {
                all = false;
                err << line << " (" << in.label << ": " << rep.narrative << ")\n";
            }
        }
    }
    const std::string report = o.format == "json" ? doc.dump(2) + '\n' : text;
    out << report;

    json& p = m.parameters();
    p["horizon"] = o.horizon;
    p["seed_fraction"] = o.seed_fraction;
    p["tol"] = o.tol;
    if (!o.report_dir.empty()) {
        const fs::path dir = prepare_dir(o.report_dir);
        m.write_output(dir / (o.format == "json" ? "verify_report.json" : "verify_report.txt"), report);
        m.finish(dir / "manifest.json");
    }
    return all ? kOk : kDomainFailure;
}

struct SweepRow {
    double factor = 0.0;
    std::string status;
    Aggregate eq;
    double residual = 0.0;
};

ModelConfig apply_sweep(ModelConfig cfg, const std::string& param, double f) {
    const auto scale = [f](Vec& v) {
        for (double& x : v) x *= f;
    };
    const auto shift = [f](Vec& v) {
        for (double& x : v) x = std::clamp(x + f, kX0Floor, 1.0);
    };
    if (param == "beta") {
        scale(cfg.tech[0].beta);
        scale(cfg.tech[1].beta);
    } else if (param == "beta1") {
        scale(cfg.tech[0].beta);
    } else if (param == "beta2") {
        scale(cfg.tech[1].beta);
    } else if (param == "delta1") {
        scale(cfg.tech[0].delta);
    } else if (param == "delta2") {
        scale(cfg.tech[1].delta);
    } else if (param == "x0") {
        shift(cfg.tech[0].x0);
        shift(cfg.tech[1].x0);
    } else if (param == "x0_1") {
        shift(cfg.tech[0].x0);
    } else if (param == "x0_2") {
        shift(cfg.tech[1].x0);
    }
    return cfg;
}

std::vector<double> parse_grid(const std::string& grid) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= grid.size()) {
        const auto comma = grid.find(',', start);
        const std::string item = grid.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(item, &pos));
                if (pos != item.size()) throw std::invalid_argument(item);
            } catch (const std::logic_error&) {
                throw UsageError(fmt::format("bad grid value '{}'", item));
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw UsageError("empty sweep grid");
    return out;
}

int cmd_sweep(const Options& o, Manifest& m, std::ostream& out, std::ostream& err) {
    const std::vector<double> grid = parse_grid(o.grid);
    const Instance in = load_single(o);
    m.add_instance(in);
    const fs::path dir = prepare_dir(o.out);

    SolverOptions so;
    so.tol = o.tol;
    so.max_iter = o.max_iter;
    std::vector<std::future<SweepRow>> jobs;
    for (double f : grid) {
        jobs.push_back(std::async(std::launch::async, [&, f] {
            SweepRow row;
            row.factor = f;
            const ModelConfig cfg = apply_sweep(in.cfg, o.param, f);
            if (!validate_assumption1(cfg).passed) {
                row.status = "skipped";
                return row;
            }
            try {
                const Equilibrium eq = solve_adoption_diffused(Model::validated(cfg), so);
                row.eq = aggregate(eq.state);
                row.residual = eq.residual;
                row.status = eq.converged ? "ok" : "not_converged";
            } catch (const Error& e) {
                row.status = "error";
            }
            return row;
        }));
    }

    bool all = true;
    std::string csv = "factor,mean_a1,mean_a2,share_ratio,residual,mean_x1,mean_x2,status\n";
    for (auto& job : jobs) {
        const SweepRow r = job.get();
        if (r.status == "skipped") {
            csv += fmt::format("{},,,,,,,skipped\n", r.factor);
            err << fmt::format("{}={} fails validation, skipped\n", o.param, r.factor);
            continue;
        }
        if (r.status != "ok") all = false;
        csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.3e},{:.17g},{:.17g},{}\n", r.factor, r.eq.a[0],
                           r.eq.a[1], r.eq.a[1] / r.eq.a[0], r.residual, r.eq.x[0], r.eq.x[1], r.status);
    }
    json& p = m.parameters();
    p["param"] = o.param;
    p["grid"] = grid;
    p["tol"] = o.tol;
    p["max_iter"] = o.max_iter;
    m.write_output(dir / "sweep.csv", csv);
    m.finish(dir / "manifest.json");
    out << csv;
    return all ? kOk : kDomainFailure;
}

int cmd_generate(const Options& o, Manifest& m, std::ostream& out) {
    if (!o.random_n) throw UsageError("generate needs --random n");
    if (!o.config.empty()) throw UsageError("generate does not read --config");
    Instance in = load_single(o);
    // Record the digest of the file bytes, as every reader of the file will.
    const std::string bytes = config_to_json(in.cfg).dump(2);
    in.digest = hex_digest(fnv1a64(bytes));
    m.add_instance(in);
    m.parameters()["n"] = *o.random_n;
    m.parameters()["crossover"] = o.crossover;
    m.parameters()["density"] = o.density;
    const fs::path dir = prepare_dir(o.out);
    m.write_output(dir / "config.json", bytes);
    m.finish(dir / "manifest.json");
    out << (dir / "config.json").string() << " digest=" << in.digest << '\n';
    return kOk;
}

void add_source(CLI::App* sc, Options& o) {
    sc->add_option("--config", o.config, "Model config JSON");
    sc->add_flag("--normalize", o.normalize, "Row-normalize edge-list graphs on load");
    sc->add_option("--random", o.random_n, "Use a random instance with n nodes instead of --config");
    sc->add_option("--seed", o.seed, "Seed for --random (and for solver start points)")->capture_default_str();
    sc->add_option("--seeds", o.seeds, "Seed range a..b for --random");
    sc->add_flag("--crossover", o.crossover, "Sample with beta1 > beta2 and delta1 > delta2 at every node");
    sc->add_option("--density", o.density, "Edge density of random graphs")->capture_default_str();
}

void add_common(CLI::App* sc, Options& o) {
    sc->add_option("--out", o.out, "Output directory")->capture_default_str();
    sc->add_flag("--deterministic-sum", o.deterministic_sum,
                 "Fixed left-to-right summation (always on; recorded in the manifest)");
}

std::string join_args(int argc, const char* const* argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Coupled two-technology adoption and opinion dynamics on networks"};
    app.set_version_flag("--version", COADOPT_VERSION);
    app.require_subcommand(1);

    auto* validate = app.add_subcommand("validate", "Check a config against the model assumptions");
    add_source(validate, o);
    add_common(validate, o);

    auto* sim = app.add_subcommand("simulate", "Simulate a trajectory and write CSV output");
    add_source(sim, o);
    add_common(sim, o);
    sim->add_option("--horizon", o.horizon, "Number of steps")->capture_default_str();
    sim->add_option("--seed-fraction", o.seed_fraction, "Initial adopters per node and technology")
        ->capture_default_str();
    sim->add_option("--enter", o.enter, "Delayed entry techK@T[:fraction]; repeatable");
    sim->add_option("--stride", o.stride, "Write every stride-th step to trajectory.csv")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sim->add_option("--format", o.format, "csv or json")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));

    auto* eqc = app.add_subcommand("equilibrium", "Solve the adoption-diffused equilibrium");
    add_source(eqc, o);
    add_common(eqc, o);
    eqc->add_option("--tol", o.tol, "Fixed-point residual tolerance")->capture_default_str();
    eqc->add_option("--max-iter", o.max_iter, "Iteration cap per solve")->capture_default_str();
    eqc->add_option("--starts", o.starts, "Random starts for the uniqueness check")->capture_default_str();

    auto* ver = app.add_subcommand("verify", "Run the property suite");
    add_source(ver, o);
    ver->add_option("--out", o.report_dir, "Directory for the report and manifest (none by default)");
    ver->add_flag("--deterministic-sum", o.deterministic_sum, "Recorded in the manifest");
    ver->add_option("--horizon", o.horizon, "Trajectory length")->capture_default_str();
    ver->add_option("--seed-fraction", o.seed_fraction, "Initial adopters per node and technology")
        ->capture_default_str();
    ver->add_option("--tol", o.tol, "Equilibrium tolerance")->capture_default_str();
    ver->add_option("--format", o.format, "csv (text lines) or json")
        ->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));

    auto* sweep = app.add_subcommand("sweep", "Solve equilibria across a parameter grid");
    add_source(sweep, o);
    add_common(sweep, o);
    sweep->add_option("--param", o.param, "beta, beta1, beta2, delta1, delta2 (scaled) or x0, x0_1, x0_2 (shifted)")
        ->required()
        ->check(CLI::IsMember({"beta", "beta1", "beta2", "delta1", "delta2", "x0", "x0_1", "x0_2"}));
    sweep->add_option("--grid", o.grid, "Comma-separated factors or shifts")->required();
    sweep->add_option("--tol", o.tol, "Fixed-point residual tolerance")->capture_default_str();
    sweep->add_option("--max-iter", o.max_iter, "Iteration cap per solve")->capture_default_str();

    auto* gen = app.add_subcommand("generate", "Write a random instance as a config file");
    add_source(gen, o);
    add_common(gen, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    const std::string command = join_args(argc, argv);
    try {
        if (*validate) {
            Manifest m(command, "validate", o);
            const int rc = cmd_validate(o, m, out, err);
            if (validate->count("--out")) m.finish(prepare_dir(o.out) / "manifest.json");
            return rc;
        }
        if (*sim) {
            Manifest m(command, "simulate", o);
            return cmd_simulate(o, m, out, err);
        }
        if (*eqc) {
            Manifest m(command, "equilibrium", o);
            return cmd_equilibrium(o, m, out, err);
        }
        if (*ver) {
            Manifest m(command, "verify", o);
            return cmd_verify(o, m, out, err);
        }
        if (*sweep) {
            Manifest m(command, "sweep", o);
            return cmd_sweep(o, m, out, err);
        }
        Manifest m(command, "generate", o);
        return cmd_generate(o, m, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDomainFailure;
    }
}

}  // namespace coadopt::cli
