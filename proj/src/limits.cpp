#include "mcrelab/limits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrelab/csv.hpp"
#include "mcrelab/parallel.hpp"

namespace mcrelab::limits {

PartialSumEnsemble::PartialSumEnsemble(long long replicas, int horizon)
    : replicas_(replicas), horizon_(horizon) {
    if (replicas < 2 || horizon < 1)
        throw std::invalid_argument("PartialSumEnsemble: need replicas >= 2, horizon >= 1");
    values_.assign(static_cast<std::size_t>(replicas) * static_cast<std::size_t>(horizon), 0.0);
}

const std::vector<double>& PartialSumEnsemble::means() const {
    if (means_.empty()) {
        means_.assign(static_cast<std::size_t>(horizon_), 0.0);
        for (long long r = 0; r < replicas_; ++r)
            for (int k = 1; k <= horizon_; ++k)
                means_[static_cast<std::size_t>(k - 1)] += at(r, k);
        for (double& m : means_) m /= static_cast<double>(replicas_);
    }
    return means_;
}

const std::vector<double>& PartialSumEnsemble::var_curve() const {
    if (var_curve_.empty()) {
        const auto& mu = means();
        var_curve_.assign(static_cast<std::size_t>(horizon_), 0.0);
        std::vector<double> s(static_cast<std::size_t>(replicas_), 0.0);
        for (int k = 1; k <= horizon_; ++k) {
            double acc = 0.0;
            for (long long r = 0; r < replicas_; ++r) {
                s[static_cast<std::size_t>(r)] += at(r, k) - mu[static_cast<std::size_t>(k - 1)];
                acc += s[static_cast<std::size_t>(r)] * s[static_cast<std::size_t>(r)];
            }
            // Centered sums average to zero across replicas by construction.
            var_curve_[static_cast<std::size_t>(k - 1)] = acc / static_cast<double>(replicas_ - 1);
        }
    }
    return var_curve_;
}

double PartialSumEnsemble::partial_sum(long long r, int n) const {
    const auto& mu = means();
    double s = 0.0;
    for (int k = 1; k <= n; ++k) s += at(r, k) - mu[static_cast<std::size_t>(k - 1)];
    return s;
}

PartialSumEnsemble make_ensemble(
    long long replicas, int horizon,
    const std::function<void(std::int64_t, std::vector<double>&)>& fill) {
    PartialSumEnsemble ens(replicas, horizon);
    parallel_for(replicas, [&](std::int64_t r) {
        std::vector<double> buf(static_cast<std::size_t>(horizon));
        fill(r, buf);
        for (int k = 1; k <= horizon; ++k) ens.at(r, k) = buf[static_cast<std::size_t>(k - 1)];
    });
    return ens;
}

LlnReport lln_report(const PartialSumEnsemble& ens, const std::vector<int>& n_grid,
                     const std::vector<double>& b_grid) {
    LlnReport rep;
    const auto& mu = ens.means();
    for (int n : n_grid) {
        if (n < 1 || n > ens.horizon()) throw std::invalid_argument("lln_report: n outside ensemble");
        std::vector<double> vals(static_cast<std::size_t>(ens.replicas()));
        for (long long r = 0; r < ens.replicas(); ++r)
            vals[static_cast<std::size_t>(r)] = std::abs(ens.partial_sum(r, n)) / n;
        LlnPoint pt;
        pt.n = n;
        pt.mean_abs = stats::mean(vals);
        pt.stderr_ = std::sqrt(stats::variance(vals) / static_cast<double>(ens.replicas()));
        rep.curve.push_back(pt);
    }
    for (double b : b_grid) {
        double worst = 0.0;
        for (int n : n_grid) {
            double acc = 0.0;
            for (long long r = 0; r < ens.replicas(); ++r)
                for (int k = 1; k <= n; ++k) {
                    const double w = ens.at(r, k) - mu[static_cast<std::size_t>(k - 1)];
                    if (std::abs(w) >= b) acc += std::abs(w);
                }
            worst = std::max(worst, acc / (static_cast<double>(n) * ens.replicas()));
        }
        rep.uniform_integrability.push_back({b, worst});
    }
    return rep;
}

double witness_function(int i, double x) {
    // Frozen family; see README.md. All bounded by 1 and 1-Lipschitz up to a
    // modest constant.
    switch (i) {
        case 0: case 1: case 2: case 3: case 4:
            return std::cos(0.5 * (i + 1) * x);
        case 5: case 6: case 7: case 8: case 9:
            return std::sin(0.5 * (i - 4) * x);
        case 10: case 11: case 12: case 13:
            return std::tanh(x / (i - 9));
        case 14: return std::exp(-0.5 * x * x);
        case 15: return 1.0 / (1.0 + x * x);
        case 16: return x / (1.0 + x * x);
        case 17: return std::clamp(x, -1.0, 1.0);
        case 18: return 2.0 / M_PI * std::atan(x);
        case 19: return std::exp(-std::abs(x));
        default: throw std::invalid_argument("witness_function: index outside [0,20)");
    }
}

WeakApproachReport weak_approach_report(const std::vector<double>& t) {
    if (t.size() < 500)
        throw std::invalid_argument("weak_approach_report: need at least 500 replicas");
    WeakApproachReport rep;
    const double var = stats::variance(t);
    if (var <= 0.0) throw std::invalid_argument("weak_approach_report: degenerate sigma");
    rep.sigma_hat = std::sqrt(var);
    std::vector<double> standardized(t.size());
    const double m = stats::mean(t);
    for (std::size_t i = 0; i < t.size(); ++i) standardized[i] = (t[i] - m) / rep.sigma_hat;
    const auto ks = stats::ks_test(standardized, [](double x) { return stats::normal_cdf(x); });
    rep.ks_stat = ks.statistic;
    rep.ks_p = ks.p_value;
    rep.witness_gaps.resize(20);
    for (int i = 0; i < 20; ++i) {
        double emp = 0.0;
        for (double v : t) emp += witness_function(i, v);
        emp /= static_cast<double>(t.size());
        const double ref = stats::normal_expectation(
            [&](double x) { return witness_function(i, x); }, rep.sigma_hat);
        rep.witness_gaps[static_cast<std::size_t>(i)] = std::abs(emp - ref);
        rep.max_witness_gap = std::max(rep.max_witness_gap,
                                       rep.witness_gaps[static_cast<std::size_t>(i)]);
    }
    return rep;
}

double confidence_bound(double a, double sigma) {
    if (a <= 0.0 || sigma <= 0.0)
        throw std::invalid_argument("confidence_bound: need a, sigma > 0");
    return 2.0 * (1.0 - stats::normal_cdf(a / sigma));
}

std::vector<CoverageRow> coverage_check(const std::vector<double>& t,
                                        const std::vector<double>& a_values, double sigma) {
    std::vector<CoverageRow> rows;
    for (double a : a_values) {
        CoverageRow row;
        row.a = a;
        long long hits = 0;
        for (double v : t)
            if (std::abs(v) >= a) ++hits;
        row.empirical = static_cast<double>(hits) / static_cast<double>(t.size());
        row.stderr_ = std::sqrt(row.empirical * (1.0 - row.empirical) /
                                static_cast<double>(t.size()));
        row.bound = confidence_bound(a, sigma);
        row.ok = row.empirical <= row.bound + 4.0 * row.stderr_;
        rows.push_back(row);
    }
    return rows;
}

double cramer_rao_floor(const FisherFloorInputs& inputs) {
    if (inputs.r_star.size() != inputs.gradient_sq.size())
        throw std::invalid_argument("cramer_rao_floor: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < inputs.r_star.size(); ++k) {
        if (inputs.r_star[k] <= 0.0)
            throw std::invalid_argument("cramer_rao_floor: r* must be positive");
        s += inputs.gradient_sq[k] / inputs.r_star[k];
    }
    return s;
}

FcltResult fclt_ensemble(const PartialSumEnsemble& ens, const std::vector<double>& t_grid,
                         bool keep_paths, double drawdown_tol) {
    if (t_grid.empty()) throw std::invalid_argument("fclt_ensemble: empty t grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] <= 0.0 || t_grid[i] > 1.0)
            throw std::invalid_argument("fclt_ensemble: t must lie in (0,1]");
        if (i > 0 && t_grid[i] <= t_grid[i - 1])
            throw std::invalid_argument("fclt_ensemble: t grid must be increasing");
    }
    const auto& var = ens.var_curve();
    const int n = ens.horizon();
    const double var_sn = var[static_cast<std::size_t>(n - 1)];
    if (var_sn <= 0.0) throw std::invalid_argument("fclt_ensemble: degenerate variance");
    double peak = 0.0;
    for (double v : var) {
        peak = std::max(peak, v);
        if (v < peak * (1.0 - drawdown_tol) && peak > 0.01 * var_sn)
            throw std::invalid_argument("fclt_ensemble: variance curve non-monotone beyond tolerance");
    }

    FcltResult result;
    result.diagnostics.t_grid = t_grid;
    // v_n(t): first k with Var(S_k) >= t Var(S_n); ties by the minimum.
    std::vector<int>& vn = result.diagnostics.v_n;
    vn.resize(t_grid.size());
    {
        int k = 1;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            const double target = t_grid[i] * var_sn;
            if (i > 0 && vn[i - 1] > k) k = vn[i - 1];
            while (k <= n && var[static_cast<std::size_t>(k - 1)] < target) ++k;
            vn[i] = std::min(k, n);
        }
    }

    const double scale = std::sqrt(var_sn);
    const std::size_t R = static_cast<std::size_t>(ens.replicas());
    std::vector<std::vector<double>> paths(R, std::vector<double>(t_grid.size(), 0.0));
    const auto& mu = ens.means();
    parallel_for(ens.replicas(), [&](std::int64_t r) {
        double s = 0.0;
        std::size_t gi = 0;
        for (int k = 1; k <= n && gi < vn.size(); ++k) {
            s += ens.at(r, k) - mu[static_cast<std::size_t>(k - 1)];
            while (gi < vn.size() && vn[gi] == k) {
                paths[static_cast<std::size_t>(r)][gi] = s / scale;
                ++gi;
            }
        }
    });

    auto column = [&](std::size_t i) {
        std::vector<double> col(R);
        for (std::size_t r = 0; r < R; ++r) col[r] = paths[r][i];
        return col;
    };
    result.diagnostics.var_b.resize(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        result.diagnostics.var_b[i] = stats::variance(column(i));
    result.diagnostics.var_b1 = result.diagnostics.var_b.back();

    // corr(B(1/2), B(1) - B(1/2)) using the closest grid point to t = 1/2.
    std::size_t half = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (std::abs(t_grid[i] - 0.5) < std::abs(t_grid[half] - 0.5)) half = i;
    {
        const auto bh = column(half);
        const auto b1 = column(t_grid.size() - 1);
        std::vector<double> incr(R);
        for (std::size_t r = 0; r < R; ++r) incr[r] = b1[r] - bh[r];
        result.diagnostics.corr_half = stats::correlation(bh, incr);
    }
    {
        auto b1 = column(t_grid.size() - 1);
        const auto ks = stats::ks_test(b1, [](double x) { return stats::normal_cdf(x); });
        result.diagnostics.ks_b1_stat = ks.statistic;
        result.diagnostics.ks_b1_p = ks.p_value;
    }
    if (keep_paths) result.paths = std::move(paths);
    return result;
}

void write_fclt_paths_csv(const FcltResult& result, const std::string& path, int max_paths) {
    CsvWriter csv(path, {"replica", "t", "B_n"});
    const std::size_t count =
        std::min<std::size_t>(result.paths.size(), static_cast<std::size_t>(max_paths));
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t i = 0; i < result.diagnostics.t_grid.size(); ++i)
            csv.row({static_cast<std::int64_t>(r), result.diagnostics.t_grid[i],
                     result.paths[r][i]});
    csv.close();
}

}  // namespace mcrelab::limits
