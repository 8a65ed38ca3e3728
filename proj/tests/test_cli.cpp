#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcrelab/experiments.hpp"

namespace fs = std::filesystem;
using namespace mcrelab;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mcrelab-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string write_config(const fs::path& dir, const std::string& name,
                         const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << body;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("felsmann experiment writes the expected CSV and is idempotent") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "felsmann.json", R"({
      "kind": "felsmann",
      "seed": 31337,
      "params": {"epsilon": 0.0, "n_max": 40, "replicas": 20000}
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    ov.label = "a";
    std::string dir;
    REQUIRE(experiments::run_experiment(cfg, ov, &dir) == 0);
    REQUIRE(fs::exists(fs::path(dir) / "felsmann.csv"));
    REQUIRE(fs::exists(fs::path(dir) / "config_echo.json"));

    // a_40 from the CSV matches (1/2)(3/2)^40.
    std::ifstream csv(fs::path(dir) / "felsmann.csv");
    std::string line, last;
    std::getline(csv, line);  // header
    while (std::getline(csv, line))
        if (!line.empty()) last = line;
    std::stringstream ss(last);
    std::string cell;
    std::getline(ss, cell, ',');
    CHECK(cell == "40");
    std::getline(ss, cell, ',');
    const double a40 = std::stod(cell);
    CHECK(std::abs(a40 - 0.5 * std::pow(1.5, 40)) <= 1e-12 * a40);

    // Re-run under a different label: byte-identical numeric artifact.
    experiments::RunOverrides ov2 = ov;
    ov2.label = "b";
    std::string dir2;
    REQUIRE(experiments::run_experiment(cfg, ov2, &dir2) == 0);
    CHECK(slurp(fs::path(dir) / "felsmann.csv") == slurp(fs::path(dir2) / "felsmann.csv"));
}

TEST_CASE("unknown config fields are rejected with exit code 2") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "bad.json", R"({
      "kind": "felsmann",
      "params": {"epsilon": 0.0, "n_max": 5, "replicas": 100, "bogus": 1}
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    CHECK(experiments::run_experiment(cfg, ov, nullptr) == 2);

    const std::string cfg2 = write_config(tmp.path, "bad2.json", R"({
      "kind": "no-such-kind", "params": {}
    })");
    CHECK(experiments::run_experiment(cfg2, ov, nullptr) == 2);

    const std::string cfg3 = write_config(tmp.path, "bad3.json", "{ not json");
    CHECK(experiments::run_experiment(cfg3, ov, nullptr) == 2);

    const std::string cfg4 = write_config(tmp.path, "bad4.json", R"({
      "kind": "mixing-table",
      "params": {"env": {"variant": "finite-markov", "alphabet": [0, 1],
                 "transition": [[0.5, 0.6], [0.5, 0.5]], "initial": [1.0, 0.0]}}
    })");
    CHECK(experiments::run_experiment(cfg4, ov, nullptr) == 2);
}

TEST_CASE("supercritical queue-suite exits with the assumption code naming the failure") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "super.json", R"({
      "kind": "queue-suite",
      "seed": 5,
      "params": {
        "model": {
          "service": {"variant": "iid", "values": [2.0], "probs": [1.0]},
          "M": 2.0,
          "arrivals": {"kind": "exponential", "rate": 1.0}
        },
        "replicas": 2000
      }
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    ov.label = "x";
    std::string dir;
    CHECK(experiments::run_experiment(cfg, ov, &dir) == 3);
    // The report is still written, naming the failing assumption.
    const fs::path report = fs::path(ov.out_root.value()) / "queue-suite" / "x" / "report.json";
    REQUIRE(fs::exists(report));
    CHECK(slurp(report).find("subcritical") != std::string::npos);
}

TEST_CASE("mixing-table experiment emits the dependence table") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "mix.json", R"({
      "kind": "mixing-table",
      "seed": 1,
      "params": {
        "env": {"variant": "moving-sum", "order": 1, "values": [0.0, 1.0], "probs": [0.5, 0.5]},
        "max_gap": 4, "block_len": 2, "j_min": 1, "j_max": 3
      }
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    ov.label = "t";
    std::string dir;
    REQUIRE(experiments::run_experiment(cfg, ov, &dir) == 0);
    const std::string table = slurp(fs::path(dir) / "alpha_table.csv");
    CHECK(table.find("lower-bound-finite-blocks") != std::string::npos);
    CHECK(table.find("exact") != std::string::npos);
}

TEST_CASE("plots: emits svg for recognized layouts and reports empty directories") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "felsmann.json", R"({
      "kind": "felsmann",
      "seed": 2,
      "params": {"epsilon": 0.0, "n_max": 10, "replicas": 5000}
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    ov.label = "p";
    std::string dir;
    REQUIRE(experiments::run_experiment(cfg, ov, &dir) == 0);
    REQUIRE(experiments::emit_plots(dir) == 0);
    CHECK(fs::exists(fs::path(dir) / "felsmann.svg"));
    CHECK(fs::exists(fs::path(dir) / "felsmann.dat"));

    const fs::path empty = tmp.path / "empty";
    fs::create_directories(empty);
    CHECK(experiments::emit_plots(empty.string()) == 0);
    CHECK(experiments::emit_plots((tmp.path / "missing").string()) == 1);
}

TEST_CASE("transfer-bound experiment reports zero violations") {
    TempDir tmp;
    const std::string cfg = write_config(tmp.path, "tb.json", R"({
      "kind": "transfer-bound",
      "seed": 9,
      "params": {"horizon": 4}
    })");
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    ov.label = "t";
    std::string dir;
    REQUIRE(experiments::run_experiment(cfg, ov, &dir) == 0);
    const std::string report = slurp(fs::path(dir) / "report.json");
    CHECK(report.find("\"violations\": 0") != std::string::npos);
}

namespace {
const char* kSmallQueueModel = R"({
  "service": {"variant": "iid", "values": [0.5, 0.7, 0.9], "probs": [0.34, 0.33, 0.33]},
  "M": 0.9,
  "arrivals": {"kind": "exponential", "rate": 1.0},
  "t_grid": [0.25, 0.5]
})";

std::string with_model(const std::string& templ) {
    std::string out = templ;
    const std::string key = "@MODEL@";
    const auto pos = out.find(key);
    REQUIRE(pos != std::string::npos);
    out.replace(pos, key.size(), kSmallQueueModel);
    return out;
}
}  // namespace

TEST_CASE("every experiment kind runs end to end on small configs") {
    TempDir tmp;
    experiments::RunOverrides ov;
    ov.out_root = (tmp.path / "out").string();
    const std::vector<std::pair<std::string, std::string>> configs{
        {"drift", with_model(R"({"kind":"drift","seed":3,"params":{"model":@MODEL@,
          "t":0.5,"y_grid":[0.5,0.9],"x_grid":[0.0,1.0,3.0],"replicas":4000}})")},
        {"contractivity", with_model(R"({"kind":"contractivity","seed":3,"params":{
          "model":@MODEL@,"t":0.25,"n_max":8,"j_max":2,"replicas":4000}})")},
        {"coupling", with_model(R"({"kind":"coupling","seed":3,"params":{"model":@MODEL@,
          "horizon":50,"replicas":2000,"checkpoints":[10,25],"loynes_depth":200}})")},
        {"lln", with_model(R"({"kind":"lln","seed":3,"params":{"model":@MODEL@,
          "n_grid":[50,200,800],"replicas":300}})")},
        {"clt", with_model(R"({"kind":"clt","seed":3,"params":{"model":@MODEL@,
          "n":800,"replicas":600}})")},
        {"fclt", with_model(R"({"kind":"fclt","seed":3,"params":{"model":@MODEL@,
          "n":800,"replicas":400,"t_points":10,"paths_kept":10}})")},
        {"queue-suite", with_model(R"({"kind":"queue-suite","seed":3,"params":{
          "model":@MODEL@,"replicas":4000}})")},
        {"borovkov", with_model(R"({"kind":"borovkov","seed":3,"params":{"model":@MODEL@,
          "n_grid":[2,10,25],"replicas":4000,"depth":200,"coupling_replicas":1000}})")},
    };
    for (const auto& [kind, body] : configs) {
        CAPTURE(kind);
        const std::string cfg = write_config(tmp.path, kind + ".json", body);
        experiments::RunOverrides run = ov;
        run.label = kind;
        std::string dir;
        const int code = experiments::run_experiment(cfg, run, &dir);
        CHECK(code == 0);
        if (code == 0) {
            CHECK(fs::exists(fs::path(dir) / "config_echo.json"));
            CHECK(experiments::emit_plots(dir) == 0);
        }
    }
}

TEST_CASE("MCRE_LAB_OUT provides the default output root") {
    TempDir tmp;
    const std::string root = (tmp.path / "envroot").string();
    setenv("MCRE_LAB_OUT", root.c_str(), 1);
    const std::string cfg = write_config(tmp.path, "f.json", R"({
      "kind": "felsmann", "seed": 4,
      "params": {"epsilon": 0.0, "n_max": 6, "replicas": 2000}
    })");
    experiments::RunOverrides ov;  // no out override: env var must win
    ov.label = "envtest";
    std::string dir;
    REQUIRE(experiments::run_experiment(cfg, ov, &dir) == 0);
    unsetenv("MCRE_LAB_OUT");
    CHECK(dir.find(root) == 0);
    CHECK(fs::exists(fs::path(root) / "felsmann" / "envtest" / "felsmann.csv"));
}
