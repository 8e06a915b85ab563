#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "coadopt/io.hpp"
#include "oracles.hpp"

using namespace coadopt;
namespace fs = std::filesystem;

namespace {

struct Result {
    int rc;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "coadopt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {rc, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "coadopt_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const ModelConfig& cfg, const std::string& name = "cfg.json") {
    const auto path = dir / name;
    save_config(cfg, path);
    return path.string();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate exit codes") {
    const auto dir = scratch("validate");
    CHECK(run_cli({"validate", "--config", write_config(dir, testing::scalar_e1())}).rc == 0);

    auto bad = testing::scalar_e1();
    bad.tech[0].beta = {0.6};
    bad.tech[1].beta = {0.5};
    const auto r = run_cli({"validate", "--config", write_config(dir, bad, "bad.json")});
    CHECK(r.rc == 1);
    CHECK(r.err.find("beta sum") != std::string::npos);

    write_file(dir / "broken.json", "{\"n\": 1, ");
    CHECK(run_cli({"validate", "--config", (dir / "broken.json").string()}).rc == 2);
    CHECK(run_cli({"validate", "--config", (dir / "missing.json").string()}).rc == 2);
    CHECK(run_cli({"validate"}).rc == 2);
    CHECK(run_cli({"nonsense"}).rc == 2);
    CHECK(run_cli({"--help"}).rc == 0);
}

TEST_CASE("simulate writes csv and a manifest") {
    const auto dir = scratch("simulate");
    const auto cfg_path = write_config(dir, random_instance(10, 3));
    const auto out_dir = (dir / "run").string();
    const auto r = run_cli({"simulate", "--config", cfg_path, "--horizon", "0", "--out", out_dir});
    REQUIRE(r.rc == 0);
    CHECK(lines(read_file(fs::path(out_dir) / "aggregate.csv")).size() == 2);
    CHECK(lines(read_file(fs::path(out_dir) / "trajectory.csv")).size() == 11);

    const auto manifest = json::parse(read_file(fs::path(out_dir) / "manifest.json"));
    CHECK(manifest["config_digests"][0] == hex_digest(fnv1a64(read_file(cfg_path))));
    CHECK(manifest["outputs"].size() == 3);
    CHECK(manifest["prng"] == kPrngId);
    CHECK(manifest.contains("started_at"));
    CHECK(manifest.contains("finished_at"));

    CHECK(run_cli({"simulate", "--config", cfg_path, "--out", "/proc/coadopt-unwritable"}).rc == 2);
    CHECK(run_cli({"simulate", "--config", cfg_path, "--enter", "tech3@5", "--out", out_dir}).rc == 2);
}

TEST_CASE("simulate is deterministic") {
    const auto dir = scratch("determinism");
    const auto cfg_path = write_config(dir, random_instance(10, 4));
    for (const char* sub : {"a", "b"}) {
        REQUIRE(run_cli({"simulate", "--config", cfg_path, "--horizon", "200", "--deterministic-sum",
                         "--out", (dir / sub).string()})
                    .rc == 0);
    }
    CHECK(read_file(dir / "a" / "trajectory.csv") == read_file(dir / "b" / "trajectory.csv"));
}

TEST_CASE("delayed entry leaves technology two unseeded") {
    const auto dir = scratch("enter");
    const auto cfg_path = write_config(dir, random_instance(5, 2));
    const auto out_dir = dir / "run";
    REQUIRE(run_cli({"simulate", "--config", cfg_path, "--horizon", "150", "--enter", "tech2@100", "--out",
                     out_dir.string()})
                .rc == 0);
    const auto rows = lines(read_file(out_dir / "aggregate.csv"));
    REQUIRE(rows.size() == 152);
    // Column 3 is mean_a2; nobody has adopted technology 2 at t = 0.
    CHECK(rows[1].rfind("0,0.99", 0) == 0);
    CHECK(rows[1].find(",0.01,0,0,0,") != std::string::npos);
    const auto manifest = json::parse(read_file(out_dir / "manifest.json"));
    CHECK(manifest["parameters"]["seeded"] == json::array({1}));
}

TEST_CASE("equilibrium on the scalar instance") {
    const auto dir = scratch("equilibrium");
    const auto cfg_path = write_config(dir, testing::scalar_e1());
    const auto out_dir = dir / "eq";
    const auto r = run_cli({"equilibrium", "--config", cfg_path, "--tol", "1e-12", "--out", out_dir.string()});
    REQUIRE(r.rc == 0);
    const auto eq = json::parse(read_file(out_dir / "equilibrium.json"));
    CHECK(std::abs(eq["state"]["a1"][0].get<double>() - 0.204667000321249623) <= 1e-9);
    CHECK(eq["ratio_check_max_err"].get<double>() <= 1e-9);
    for (const char* key : {"kind", "converged", "iterations", "residual", "state", "lower_bound",
                            "simplex_max_err", "on_safeguard_boundary", "solver", "config_digest"}) {
        CHECK_MESSAGE(eq.contains(key), key);
    }
    const auto uq = json::parse(read_file(out_dir / "uniqueness.json"));
    CHECK(uq["corroborated"] == true);
    CHECK(uq["runs"] == 10);

    auto zero = testing::scalar_e1();
    zero.tech[1].delta = {0.0};
    const auto z = run_cli({"equilibrium", "--config", write_config(dir, zero, "zero.json"), "--out",
                            (dir / "zero").string()});
    CHECK(z.rc == 1);
    CHECK(z.err.find("delta must be strictly positive for the diffused solve") != std::string::npos);

    const auto capped = run_cli({"equilibrium", "--config", cfg_path, "--tol", "1e-15", "--max-iter", "2",
                                 "--out", (dir / "capped").string()});
    CHECK(capped.rc == 1);
    CHECK(capped.err.find("best residual") != std::string::npos);
}

TEST_CASE("verify suite on random instances") {
    const auto r = run_cli({"verify", "--random", "50", "--seeds", "0..9"});
    CHECK(r.rc == 0);
    CHECK(lines(r.out).size() == 60);

    const auto dir = scratch("verify");
    auto bad = testing::scalar_e1();
    bad.tech[0].gamma = {1.0};
    const auto v = run_cli({"verify", "--config", write_config(dir, bad)});
    CHECK(v.rc == 1);
    CHECK(v.err.find("gamma1") != std::string::npos);

    const auto j = run_cli({"verify", "--random", "2", "--seed", "3", "--format", "json", "--out",
                            (dir / "report").string()});
    CHECK(j.rc == 0);
    CHECK(json::parse(j.out).size() == 6);
    CHECK(fs::exists(dir / "report" / "verify_report.json"));
    CHECK(run_cli({"verify", "--random", "2", "--seeds", "5..1"}).rc == 2);
}

TEST_CASE("sweeps") {
    const auto dir = scratch("sweep");
    const auto cfg_path = write_config(dir, random_instance(50, 7));
    const auto r = run_cli({"sweep", "--config", cfg_path, "--param", "beta1", "--grid", "0.8,1.0,1.2",
                            "--out", (dir / "b").string()});
    REQUIRE(r.rc == 0);
    const auto rows = lines(read_file(dir / "b" / "sweep.csv"));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "factor,mean_a1,mean_a2,share_ratio,residual,mean_x1,mean_x2,status");
    const auto field = [](const std::string& row, std::size_t k) {
        std::istringstream in(row);
        std::string f;
        for (std::size_t i = 0; i <= k; ++i) std::getline(in, f, ',');
        return f;
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(field(rows[i], 7) == "ok");
        CHECK(std::abs(std::stod(field(rows[i], 1)) - std::stod(field(rows[1], 1))) <= 1e-8);
        CHECK(std::abs(std::stod(field(rows[i], 2)) - std::stod(field(rows[1], 2))) <= 1e-8);
    }

    const auto e1 = write_config(dir, testing::scalar_e1(), "e1.json");
    REQUIRE(run_cli({"sweep", "--config", e1, "--param", "delta2", "--grid", "0.5,1.0", "--out",
                     (dir / "d").string()})
                .rc == 0);
    const auto drows = lines(read_file(dir / "d" / "sweep.csv"));
    CHECK(std::abs(std::stod(field(drows[1], 3)) - 0.2 / 0.05) <= 1e-8);
    CHECK(std::abs(std::stod(field(drows[2], 3)) - 0.2 / 0.1) <= 1e-8);

    // Scaling beta until the pair sum leaves (0,1) skips the grid point.
    const auto s = run_cli({"sweep", "--config", e1, "--param", "beta", "--grid", "1.0,2.5", "--out",
                            (dir / "s").string()});
    CHECK(s.rc == 0);
    CHECK(lines(read_file(dir / "s" / "sweep.csv"))[2] == "2.5,,,,,,,skipped");

    CHECK(run_cli({"sweep", "--config", e1, "--param", "beta", "--grid", ",", "--out", (dir / "e").string()}).rc == 2);
    CHECK(run_cli({"sweep", "--config", e1, "--param", "gamma", "--grid", "1", "--out", (dir / "e").string()}).rc == 2);
}

TEST_CASE("generate round trips through validate") {
    const auto dir = scratch("generate");
    const auto g = run_cli({"generate", "--random", "20", "--seed", "11", "--crossover", "--out", dir.string()});
    REQUIRE(g.rc == 0);
    const auto cfg_path = (dir / "config.json").string();
    const auto v = run_cli({"validate", "--config", cfg_path});
    CHECK(v.rc == 0);
    const auto digest = g.out.substr(g.out.find("digest=") + 7, 16);
    CHECK(v.out.find("digest=" + digest) != std::string::npos);
    CHECK(load_config(cfg_path) == random_instance(20, 11, ParamRanges::crossover()));
    CHECK(run_cli({"generate", "--out", dir.string()}).rc == 2);
}

}  // TEST_SUITE
