#include "mcrelab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "mcrelab/csv.hpp"
#include "mcrelab/errors.hpp"
#include "mcrelab/felsmann.hpp"
#include "mcrelab/limits.hpp"
#include "mcrelab/mcre.hpp"
#include "mcrelab/mixing.hpp"
#include "mcrelab/parallel.hpp"
#include "mcrelab/queue.hpp"
#include "mcrelab/toy_chain.hpp"

namespace mcrelab::experiments {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Strict object reader: every key must be consumed, unknown keys are
// rejected with the offending path in the message.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const json& req(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(path_ + ": missing required field '" + key + "'");
        return *it;
    }
    const json* opt(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    template <typename T>
    T get(const std::string& key) {
        const json& v = req(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }
    template <typename T>
    T get_or(const std::string& key, T fallback) {
        const json* v = opt(key);
        if (!v) return fallback;
        try {
            return v->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }
    void done() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
    }
    const std::string& path() const { return path_; }
    const json& raw() const { return j_; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

FiniteLaw parse_law(const json& j, const std::string& path) {
    Obj o(j, path);
    FiniteLaw law{o.get<std::vector<double>>("values"), o.get<std::vector<double>>("probs")};
    o.done();
    try {
        validate_law(law);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return law;
}

EnvironmentSpec parse_env(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string variant = o.get<std::string>("variant");
    EnvironmentSpec spec;
    if (variant == "iid") {
        FiniteLaw law{o.get<std::vector<double>>("values"), o.get<std::vector<double>>("probs")};
        o.done();
        try {
            validate_law(law);
        } catch (const std::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        spec.variant = IidSpec{law, nullptr};
        return spec;
    }
    if (variant == "iid-uniform") {
        const double lo = o.get<double>("lo"), hi = o.get<double>("hi");
        o.done();
        if (!(hi > lo)) throw ConfigError(path + ": need hi > lo");
        IidSpec iid;
        iid.quantile = [lo, hi](double u) { return lo + (hi - lo) * u; };
        spec.variant = std::move(iid);
        return spec;
    }
    if (variant == "iid-exponential") {
        const double rate = o.get<double>("rate");
        o.done();
        if (rate <= 0.0) throw ConfigError(path + ": rate must be > 0");
        IidSpec iid;
        iid.quantile = [rate](double u) { return -std::log1p(-u) / rate; };
        spec.variant = std::move(iid);
        return spec;
    }
    if (variant == "finite-markov") {
        FiniteMarkovSpec mk;
        mk.alphabet = o.get<std::vector<double>>("alphabet");
        mk.transition = o.get<std::vector<std::vector<double>>>("transition");
        mk.initial = o.get<std::vector<double>>("initial");
        o.done();
        spec.variant = std::move(mk);
    } else if (variant == "moving-sum") {
        MovingSumSpec ms;
        ms.order = o.get<int>("order");
        ms.base = FiniteLaw{o.get<std::vector<double>>("values"),
                            o.get<std::vector<double>>("probs")};
        o.done();
        spec.variant = std::move(ms);
    } else if (variant == "scripted") {
        ScriptedSpec sc;
        sc.first_index = o.get_or<long long>("first_index", 0);
        const json& laws = o.req("laws");
        if (!laws.is_array()) throw ConfigError(path + ".laws: expected an array");
        for (std::size_t i = 0; i < laws.size(); ++i)
            sc.laws.push_back(parse_law(laws[i], path + ".laws[" + std::to_string(i) + "]"));
        o.done();
        spec.variant = std::move(sc);
    } else {
        throw ConfigError(path + ".variant: unknown variant '" + variant + "'");
    }
    try {
        validate_spec(spec);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return spec;
}

queue::ArrivalLaw parse_arrivals(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.get<std::string>("kind");
    if (kind == "exponential") {
        const double rate = o.get<double>("rate");
        o.done();
        if (rate <= 0.0) throw ConfigError(path + ".rate: must be > 0");
        return queue::exponential_arrivals(rate);
    }
    if (kind == "deterministic") {
        const double value = o.get<double>("value");
        o.done();
        return queue::deterministic_arrivals(value);
    }
    throw ConfigError(path + ".kind: unknown arrival law '" + kind + "'");
}

queue::QueueModel parse_queue_model(const json& j, const std::string& path) {
    Obj o(j, path);
    queue::QueueModel model;
    model.service = parse_env(o.req("service"), path + ".service");
    model.service_bound = o.get<double>("M");
    model.arrivals = parse_arrivals(o.req("arrivals"), path + ".arrivals");
    model.t_grid = o.get_or<std::vector<double>>("t_grid", {0.125, 0.25, 0.5, 1.0, 2.0});
    o.done();
    try {
        queue::validate_model(model);
    } catch (const std::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return model;
}

struct Ctx {
    fs::path dir;
    std::uint64_t seed = 0;

    std::string file(const std::string& name) const { return (dir / name).string(); }
    void write_report(const json& j) const {
        std::ofstream out(dir / "report.json");
        out << j.dump(2) << "\n";
    }
};

limits::PartialSumEnsemble queue_wait_ensemble(const queue::QueueModel& model,
                                               long long replicas, int n,
                                               std::uint64_t seed) {
    return limits::make_ensemble(replicas, n, [&](std::int64_t rep, std::vector<double>& out) {
        const std::uint64_t base = 0x900 + 2 * static_cast<std::uint64_t>(rep);
        RngStream env_rng = derive_stream(seed, base);
        RngStream z_rng = derive_stream(seed, base + 1);
        const auto path = queue::simulate_queue(model, n, env_rng, z_rng);
        for (int k = 1; k <= n; ++k) out[static_cast<std::size_t>(k - 1)] = path.w[static_cast<std::size_t>(k)];
    });
}

void run_felsmann(Obj& params, const Ctx& ctx) {
    const double epsilon = params.get_or<double>("epsilon", 0.0);
    const int n_max = params.get_or<int>("n_max", 40);
    const long long replicas = params.get_or<long long>("replicas", 1000000);
    params.done();
    const auto rep = felsmann::felsmann_report(epsilon, n_max, replicas, ctx.seed);
    CsvWriter csv(ctx.file("felsmann.csv"), {"n", "a_n", "exact", "mc", "mc_se"});
    for (int n = 0; n <= n_max; ++n)
        csv.row({static_cast<std::int64_t>(n), rep.exact_a[static_cast<std::size_t>(n)],
                 n == 0 ? 1.0 : 0.5 * std::pow(1.5, n),
                 rep.mc_mean[static_cast<std::size_t>(n)],
                 rep.mc_se[static_cast<std::size_t>(n)]});
    csv.close();
    ctx.write_report(json{{"epsilon", epsilon},
                          {"mean_gamma", rep.mean_gamma},
                          {"replicas", replicas},
                          {"n_max", n_max}});
}

void run_mixing_table(Obj& params, const Ctx& ctx) {
    const EnvironmentSpec spec = parse_env(params.req("env"), "params.env");
    const int max_gap = params.get_or<int>("max_gap", 6);
    const int block_len = params.get_or<int>("block_len", 2);
    const long long j_min = params.get_or<long long>("j_min", 0);
    const long long j_max = params.get_or<long long>("j_max", j_min);
    const int max_atoms = params.get_or<int>("max_atoms", 12);
    const int max_atoms_linear = params.get_or<int>("max_atoms_linear", 4096);
    params.done();
    if (j_max < j_min) throw ConfigError("params: j_max < j_min");
    std::vector<long long> j_range;
    for (long long j = j_min; j <= j_max; ++j) j_range.push_back(j);
    const auto table = alpha_table(spec, max_gap, block_len, j_range, max_atoms, max_atoms_linear);
    write_dependence_table_csv(table, ctx.file("alpha_table.csv"));
    CsvWriter csv(ctx.file("cesaro.csv"), {"n", "cesaro"});
    for (int n = 1; n <= max_gap; ++n)
        csv.row({static_cast<std::int64_t>(n), cesaro_mixing(table, n)});
    csv.close();
    ctx.write_report(json{{"max_gap", max_gap}, {"block_len", block_len}});
}

void run_transfer_bound(Obj& params, const Ctx& ctx) {
    toy::ThresholdChainSpec spec;
    if (const json* t = params.opt("transition"))
        spec.transition = t->get<std::vector<std::vector<double>>>();
    if (const json* t = params.opt("thresholds")) {
        const auto rows = t->get<std::vector<std::vector<double>>>();
        if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
            throw ConfigError("params.thresholds: expected a 2x2 matrix");
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) spec.p[x][y] = rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    }
    spec.x0 = params.get_or<int>("x0", 0);
    spec.horizon = params.get_or<int>("horizon", 5);
    params.done();
    const auto rep = toy::transfer_soundness_check(spec);
    CsvWriter csv(ctx.file("transfer_bound.csv"),
                  {"n", "r", "alpha_x", "alpha_env", "b", "bound", "ok"});
    for (const auto& row : rep.rows)
        csv.row({static_cast<std::int64_t>(row.n), static_cast<std::int64_t>(row.r), row.alpha_x,
                 row.alpha_env, row.b, row.bound,
                 static_cast<std::int64_t>(row.ok ? 1 : 0)});
    csv.close();
    ctx.write_report(json{{"violations", rep.violations}, {"rows", rep.rows.size()}});
    if (rep.violations > 0)
        throw CheckError("transfer-bound: " + std::to_string(rep.violations) + " violations");
}

void run_drift(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const double t = params.get_or<double>("t", 0.5);
    const auto y_grid = params.get_or<std::vector<double>>("y_grid", {0.0, 0.25, 0.5, 1.0});
    const auto x_grid = params.get_or<std::vector<double>>("x_grid", {0.0, 0.5, 1.0, 2.0, 4.0});
    const long long replicas = params.get_or<long long>("replicas", 20000);
    params.done();
    const auto kernel = queue::queue_kernel(model);
    const auto drift = queue::queue_drift(model, t);
    const auto rep = drift_verify(kernel, drift, y_grid, x_grid, replicas, ctx.seed);
    CsvWriter csv(ctx.file("drift.csv"), {"y", "x", "estimate", "stderr", "bound", "violation"});
    for (const auto& c : rep.cells)
        csv.row({c.y, c.x, c.estimate, c.stderr_, c.bound,
                 static_cast<std::int64_t>(c.violation ? 1 : 0)});
    csv.close();
    ctx.write_report(json{{"violations", rep.violations}, {"t", t}, {"replicas", replicas}});
}

void run_contractivity(Obj& params, const Ctx& ctx) {
    EnvironmentSpec spec;
    DriftData drift;
    if (const json* m = params.opt("model")) {
        const auto model = parse_queue_model(*m, "params.model");
        const double t = params.get_or<double>("t", 0.5);
        spec = model.service;
        drift = queue::queue_drift(model, t);
    } else {
        spec = parse_env(params.req("env"), "params.env");
        const auto gamma_values = params.get<std::vector<double>>("gamma_values");
        const auto k_values = params.get_or<std::vector<double>>(
            "k_values", std::vector<double>(gamma_values.size(), 1.0));
        const auto alphabet = alphabet_values(spec);
        if (gamma_values.size() != alphabet.size() || k_values.size() != alphabet.size())
            throw ConfigError("params.gamma_values: size must match the alphabet");
        drift.V = [](double) { return 0.0; };
        drift.gamma = [alphabet, gamma_values](double y) {
            for (std::size_t i = 0; i < alphabet.size(); ++i)
                if (std::abs(alphabet[i] - y) < 1e-9) return gamma_values[i];
            throw std::invalid_argument("gamma table: value outside alphabet");
        };
        drift.K = [alphabet, k_values](double y) {
            for (std::size_t i = 0; i < alphabet.size(); ++i)
                if (std::abs(alphabet[i] - y) < 1e-9) return k_values[i];
            throw std::invalid_argument("K table: value outside alphabet");
        };
    }
    const int n_max = params.get_or<int>("n_max", 20);
    const int j_max = params.get_or<int>("j_max", 4);
    const long long replicas = params.get_or<long long>("replicas", 100000);
    params.done();
    const auto rep = contractivity_rate(spec, drift, n_max, j_max, replicas, ctx.seed);
    CsvWriter csv(ctx.file("contractivity.csv"), {"j", "n", "root"});
    for (std::size_t ji = 0; ji < rep.j_values.size(); ++ji)
        for (int n = 1; n <= n_max; ++n)
            csv.row({static_cast<std::int64_t>(rep.j_values[ji]), static_cast<std::int64_t>(n),
                     rep.root[ji][static_cast<std::size_t>(n - 1)]});
    csv.close();
    CsvWriter sup(ctx.file("contractivity_sup.csv"), {"n", "sup_root"});
    for (int n = 1; n <= n_max; ++n)
        sup.row({static_cast<std::int64_t>(n), rep.sup_root[static_cast<std::size_t>(n - 1)]});
    sup.close();
    ctx.write_report(json{{"exact", rep.exact}, {"n_max", n_max}, {"j_max", j_max}});
}

void run_coupling(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    queue::QueueCouplingOptions opts;
    opts.horizon = params.get_or<int>("horizon", 100);
    opts.replicas = params.get_or<long long>("replicas", 100000);
    opts.master_seed = ctx.seed;
    opts.loynes_depth = params.get_or<int>("loynes_depth", 1000);
    opts.checkpoints = params.get_or<std::vector<int>>("checkpoints", {10, 25, 50});
    opts.beta_override = params.get_or<double>("beta_bar", 0.0);
    opts.r_override = params.get_or<double>("r", 0.0);
    params.done();
    const auto result = queue::queue_coupling_experiment(model, opts);
    write_coupling_tail_csv(result.tail, result.fit_sqrt, ctx.file("coupling_tail.csv"));
    const auto tv = queue::tv_bound_report(result);
    CsvWriter csv(ctx.file("tv.csv"), {"n", "tv", "bound", "stderr", "ok"});
    bool tv_ok = true;
    for (const auto& row : tv) {
        csv.row({static_cast<std::int64_t>(row.n), row.tv, row.bound, row.stderr_,
                 static_cast<std::int64_t>(row.ok ? 1 : 0)});
        tv_ok = tv_ok && row.ok;
    }
    csv.close();
    ctx.write_report(json{{"c1_sqrt", result.fit_sqrt.c1},
                          {"c2_sqrt", result.fit_sqrt.c2},
                          {"rss_sqrt", result.fit_sqrt.rss},
                          {"c1_cbrt", result.fit_cbrt.c1},
                          {"c2_cbrt", result.fit_cbrt.c2},
                          {"rss_cbrt", result.fit_cbrt.rss},
                          {"sqrt_fit_better", result.sqrt_fit_better},
                          {"censor_rate", result.tail.censor_rate},
                          {"gamma_bar", result.assumptions.gamma_bar},
                          {"t_bar", result.assumptions.t_bar},
                          {"beta_bar", result.assumptions.beta_bar}});
    if (!tv_ok) throw CheckError("coupling: TV sandwich violated at a checkpoint");
}

void run_lln(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const auto n_grid = params.get_or<std::vector<int>>("n_grid", {100, 1000, 10000});
    const long long replicas = params.get_or<long long>("replicas", 2000);
    const auto b_grid = params.get_or<std::vector<double>>("b_grid", {1.0, 2.0, 5.0, 10.0, 20.0});
    params.done();
    const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
    const auto ens = queue_wait_ensemble(model, replicas, n_max, ctx.seed);
    const auto rep = limits::lln_report(ens, n_grid, b_grid);
    CsvWriter csv(ctx.file("lln.csv"), {"n", "mean_abs", "stderr"});
    for (const auto& pt : rep.curve)
        csv.row({static_cast<std::int64_t>(pt.n), pt.mean_abs, pt.stderr_});
    csv.close();
    CsvWriter ui(ctx.file("uniform_integrability.csv"), {"B", "tail_mean"});
    for (const auto& pt : rep.uniform_integrability) ui.row({pt.threshold, pt.tail_mean});
    ui.close();
    ctx.write_report(json{{"replicas", replicas}});
}

void run_clt(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const int n = params.get_or<int>("n", 5000);
    const long long replicas = params.get_or<long long>("replicas", 2000);
    params.done();
    const auto ens = queue_wait_ensemble(model, replicas, n, ctx.seed);
    std::vector<double> terminal(static_cast<std::size_t>(replicas));
    for (long long r = 0; r < replicas; ++r)
        terminal[static_cast<std::size_t>(r)] = ens.partial_sum(r, n) / std::sqrt(static_cast<double>(n));
    const auto rep = limits::weak_approach_report(terminal);
    CsvWriter csv(ctx.file("witness.csv"), {"index", "gap"});
    for (std::size_t i = 0; i < rep.witness_gaps.size(); ++i)
        csv.row({static_cast<std::int64_t>(i), rep.witness_gaps[i]});
    csv.close();
    const auto coverage =
        limits::coverage_check(terminal, {0.5 * rep.sigma_hat, rep.sigma_hat, 2.0 * rep.sigma_hat},
                               rep.sigma_hat);
    CsvWriter cov(ctx.file("coverage.csv"), {"a", "empirical", "stderr", "bound", "ok"});
    for (const auto& row : coverage)
        cov.row({row.a, row.empirical, row.stderr_, row.bound,
                 static_cast<std::int64_t>(row.ok ? 1 : 0)});
    cov.close();
    ctx.write_report(json{{"sigma_hat", rep.sigma_hat},
                          {"ks_stat", rep.ks_stat},
                          {"ks_p", rep.ks_p},
                          {"max_witness_gap", rep.max_witness_gap},
                          {"n", n},
                          {"replicas", replicas}});
}

void run_fclt(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const int n = params.get_or<int>("n", 5000);
    const long long replicas = params.get_or<long long>("replicas", 2000);
    const int t_points = params.get_or<int>("t_points", 20);
    const int keep_paths = params.get_or<int>("paths_kept", 50);
    params.done();
    const auto ens = queue_wait_ensemble(model, replicas, n, ctx.seed);
    std::vector<double> t_grid;
    for (int i = 1; i <= t_points; ++i) t_grid.push_back(static_cast<double>(i) / t_points);
    const auto result = limits::fclt_ensemble(ens, t_grid, keep_paths > 0);
    CsvWriter csv(ctx.file("fclt_diagnostics.csv"), {"t", "v_n", "var_B"});
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        csv.row({t_grid[i], static_cast<std::int64_t>(result.diagnostics.v_n[i]),
                 result.diagnostics.var_b[i]});
    csv.close();
    if (keep_paths > 0)
        limits::write_fclt_paths_csv(result, ctx.file("fclt_paths.csv"), keep_paths);
    ctx.write_report(json{{"var_b1", result.diagnostics.var_b1},
                          {"corr_half", result.diagnostics.corr_half},
                          {"ks_b1_p", result.diagnostics.ks_b1_p},
                          {"n", n},
                          {"replicas", replicas}});
}

void run_queue_suite(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const long long replicas = params.get_or<long long>("replicas", 20000);
    const double r = params.get_or<double>("r", 0.0);
    params.done();
    const auto rep = queue::assumption_report(model, replicas, ctx.seed, r);
    CsvWriter csv(ctx.file("lambda_grid.csv"), {"t", "lambda", "stderr", "argmax_j"});
    for (const auto& le : rep.lambda_grid)
        csv.row({le.t, le.value, le.stderr_, static_cast<std::int64_t>(le.argmax_j)});
    csv.close();
    ctx.write_report(json{{"subcritical", rep.subcritical},
                          {"subcritical_margin", rep.subcritical_margin},
                          {"bounded_service", rep.bounded_service},
                          {"arrivals_square_integrable", rep.arrivals_square_integrable},
                          {"lambda_negative", rep.lambda_negative},
                          {"t_bar", rep.t_bar},
                          {"gamma_bar", rep.gamma_bar},
                          {"r", rep.r},
                          {"tau_threshold", rep.tau_threshold},
                          {"p_z_tail", rep.p_z_tail},
                          {"minorization", rep.minorization},
                          {"small_set_radius", rep.small_set_radius},
                          {"beta_bar", rep.beta_bar},
                          {"all_green", rep.all_green},
                          {"first_failure", rep.first_failure}});
    if (!rep.all_green)
        throw AssumptionError("queue-suite: assumption failed: " + rep.first_failure);
}

void run_borovkov(Obj& params, const Ctx& ctx) {
    const auto model = parse_queue_model(params.req("model"), "params.model");
    const auto n_grid = params.get_or<std::vector<int>>("n_grid", {2, 5, 10, 25, 50});
    const long long replicas = params.get_or<long long>("replicas", 100000);
    const int depth = params.get_or<int>("depth", 1000);
    const long long coupling_replicas = params.get_or<long long>("coupling_replicas", replicas / 10);
    params.done();
    queue::QueueCouplingOptions opts;
    opts.horizon = *std::max_element(n_grid.begin(), n_grid.end());
    opts.replicas = std::max<long long>(coupling_replicas, 1000);
    opts.master_seed = ctx.seed;
    opts.loynes_depth = depth;
    const auto coupling = queue::queue_coupling_experiment(model, opts);
    CsvWriter csv(ctx.file("borovkov.csv"), {"n", "estimate", "stderr", "coupling_tv_bound"});
    for (int n : n_grid) {
        const auto est = queue::borovkov_rate(model, n, replicas, ctx.seed, depth);
        csv.row({static_cast<std::int64_t>(n), est.estimate, est.stderr_,
                 2.0 * coupling.tail.p_tau_gt[static_cast<std::size_t>(n)]});
    }
    csv.close();
    ctx.write_report(json{{"replicas", replicas}, {"depth", depth}});
}

std::string timestamp_label() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

}  // namespace

int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::string* result_dir) {
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config: " + config_path);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        Obj root(cfg, "config");
        const std::string kind = root.get<std::string>("kind");
        std::uint64_t seed = root.get_or<std::uint64_t>("seed", 20240801);
        if (overrides.seed) seed = *overrides.seed;
        int threads = root.get_or<int>("threads", 0);
        if (overrides.threads) threads = *overrides.threads;
        if (threads > 0) set_default_threads(threads);
        std::string out_root = root.get_or<std::string>("out", "");
        if (overrides.out_root) out_root = *overrides.out_root;
        if (out_root.empty()) {
            const char* env = std::getenv("MCRE_LAB_OUT");
            out_root = env ? env : "results";
        }
        std::string label = root.get_or<std::string>("label", "");
        if (overrides.label) label = *overrides.label;
        if (label.empty()) label = timestamp_label();

        const json& params_json = root.req("params");
        root.done();
        Obj params(params_json, "params");

        Ctx ctx;
        ctx.dir = fs::path(out_root) / kind / label;
        fs::create_directories(ctx.dir);
        ctx.seed = seed;

        {
            json echo = cfg;
            echo["seed"] = seed;
            echo["threads"] = threads;
            echo["out"] = out_root;
            echo["label"] = label;
            std::ofstream e(ctx.dir / "config_echo.json");
            e << echo.dump(2) << "\n";
        }

        if (kind == "felsmann")
            run_felsmann(params, ctx);
        else if (kind == "mixing-table")
            run_mixing_table(params, ctx);
        else if (kind == "transfer-bound")
            run_transfer_bound(params, ctx);
        else if (kind == "drift")
            run_drift(params, ctx);
        else if (kind == "contractivity")
            run_contractivity(params, ctx);
        else if (kind == "coupling")
            run_coupling(params, ctx);
        else if (kind == "lln")
            run_lln(params, ctx);
        else if (kind == "clt")
            run_clt(params, ctx);
        else if (kind == "fclt")
            run_fclt(params, ctx);
        else if (kind == "queue-suite")
            run_queue_suite(params, ctx);
        else if (kind == "borovkov")
            run_borovkov(params, ctx);
        else
            throw ConfigError("config.kind: unknown experiment kind '" + kind + "'");

        if (result_dir) *result_dir = ctx.dir.string();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const AssumptionError& e) {
        std::cerr << "assumption failure: " << e.what() << "\n";
        return 3;
    } catch (const CheckError& e) {
        std::cerr << "acceptance check failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mcrelab::experiments
