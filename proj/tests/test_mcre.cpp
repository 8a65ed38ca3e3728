#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mcrelab/mcre.hpp"
#include "mcrelab/queue.hpp"
#include "mcrelab/stats.hpp"

using namespace mcrelab;

namespace {

queue::QueueModel small_queue_model() {
    queue::QueueModel model;
    EnvironmentSpec service;
    service.variant = IidSpec{FiniteLaw{{0.0, 0.3, 0.6}, {0.4, 0.3, 0.3}}, nullptr};
    model.service = service;
    model.service_bound = 0.6;
    model.arrivals = queue::exponential_arrivals(1.0);
    model.t_grid = {0.25, 0.5, 1.0};
    return model;
}

}  // namespace

TEST_CASE("iterated drift bound") {
    CHECK(iterated_drift_bound({}, {}, 3.5) == doctest::Approx(3.5));
    CHECK(iterated_drift_bound({0.5, 0.5, 0.5}, {1.0, 1.0, 1.0}, 0.0) ==
          doctest::Approx(1.75));
    // V0 enters through the full gamma product.
    CHECK(iterated_drift_bound({0.5, 2.0}, {0.0, 0.0}, 3.0) == doctest::Approx(3.0));
}

TEST_CASE("iterated drift bound dominates conditional Monte Carlo for the queue kernel") {
    const auto model = small_queue_model();
    const auto kernel = queue::queue_kernel(model);
    const auto drift = queue::queue_drift(model, 0.5);
    // Fixed service path; iterated analytic bound vs MC estimate of E V(X_n).
    const std::vector<double> services{0.6, 0.0, 0.3, 0.6, 0.3};
    std::vector<double> gamma_path, k_path;
    for (double s : services) {
        gamma_path.push_back(drift.gamma(s));
        k_path.push_back(drift.K(s));
    }
    const double x0 = 1.0;
    const double bound = iterated_drift_bound(gamma_path, k_path, drift.V(x0));
    RngStream g = derive_stream(11, 0);
    const long long reps = 40000;
    double acc = 0.0, acc2 = 0.0;
    for (long long r = 0; r < reps; ++r) {
        double x = x0;
        for (double s : services) x = kernel.quantile(s, x, g.next_uniform());
        const double v = drift.V(x);
        acc += v;
        acc2 += v * v;
    }
    const double mean = acc / reps;
    const double se = std::sqrt((acc2 / reps - mean * mean) / (reps - 1.0));
    CHECK(mean <= bound + 4.0 * se);
}

TEST_CASE("drift verification on the identity kernel and AR(1)") {
    SUBCASE("deterministic identity kernel never violates") {
        ParametricKernel id;
        id.quantile = [](double, double x, double) { return x; };
        id.cdf = [](double, double x, double z) { return z >= x ? 1.0 : 0.0; };
        DriftData drift;
        drift.V = [](double x) { return std::abs(x); };
        drift.gamma = [](double) { return 1.0; };
        drift.K = [](double) { return 1.0; };
        const auto rep = drift_verify(id, drift, {0.0}, {0.0, 1.0, 5.0}, 2000, 3);
        CHECK(rep.violations == 0);
        for (const auto& c : rep.cells) CHECK(c.estimate == doctest::Approx(std::abs(c.x)));
    }
    SUBCASE("AR(1) with uniform noise against the quadrature oracle") {
        const double a = -0.7;
        ParametricKernel ar;
        ar.quantile = [a](double, double x, double u) { return a * x + u; };
        ar.cdf = [a](double, double x, double z) {
            const double u = z - a * x;
            return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
        };
        DriftData drift;
        drift.V = [](double x) { return std::abs(x); };
        drift.gamma = [a](double) { return std::abs(a); };
        drift.K = [](double) { return 1.0; };
        const std::vector<double> xs{-2.0, -0.4, 0.0, 0.9, 3.0};
        const auto rep = drift_verify(ar, drift, {0.0}, xs, 60000, 4);
        CHECK(rep.violations == 0);
        for (const auto& c : rep.cells) {
            const double oracle = stats::integrate(
                [&](double u) { return std::abs(a * c.x + u); }, 0.0, 1.0, 1e-12);
            CHECK(std::abs(c.estimate - oracle) <= 5.0 * c.stderr_ + 1e-9);
            CHECK(oracle <= c.bound + 1e-12);
        }
    }
}

TEST_CASE("contractivity: constants, the fair-bit product environment, queue closed form") {
    SUBCASE("constant gamma < 1 gives the constant root exactly") {
        EnvironmentSpec spec;
        spec.variant = IidSpec{FiniteLaw{{1.0}, {1.0}}, nullptr};
        DriftData drift;
        drift.V = [](double) { return 0.0; };
        drift.gamma = [](double) { return 0.8; };
        drift.K = [](double) { return 1.0; };
        const auto rep = contractivity_rate(spec, drift, 10, 3, 0, 1);
        CHECK(rep.exact);
        for (const auto& row : rep.root)
            for (double v : row) CHECK(v == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("moving-sum environment with gamma (3,0,0): mean contraction fails long term") {
        EnvironmentSpec spec;
        spec.variant = MovingSumSpec{1, FiniteLaw{{0.0, 1.0}, {0.5, 0.5}}};
        DriftData drift;
        drift.V = [](double) { return 0.0; };
        drift.gamma = [](double y) { return y < 0.5 ? 3.0 : 0.0; };
        drift.K = [](double) { return 1.0; };
        const auto rep = contractivity_rate(spec, drift, 20, 2, 0, 1);
        CHECK(rep.exact);
        for (int n = 1; n <= 20; ++n) {
            const double expected = std::pow(0.5 * std::pow(1.5, n), 1.0 / n);
            CHECK(rep.sup_root[static_cast<std::size_t>(n - 1)] ==
                  doctest::Approx(expected).epsilon(1e-10));
        }
        // One-step mean is below one even though the long-run root exceeds it.
        CHECK(rep.sup_root[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(rep.sup_root[19] > 1.4);
    }
    SUBCASE("uniform service, exponential arrivals: MC meets the closed form") {
        EnvironmentSpec spec;
        IidSpec iid;
        iid.quantile = [](double u) { return u; };
        spec.variant = iid;
        DriftData drift;
        const double t = 0.5;
        drift.V = [](double) { return 0.0; };
        drift.gamma = [t](double s) { return std::exp(t * s) * (1.0 / 1.5); };
        drift.K = drift.gamma;
        const int n = 6;
        const auto rep = contractivity_rate(spec, drift, n, 0, 200000, 5);
        CHECK_FALSE(rep.exact);
        const double per_step = (std::exp(0.5) - 1.0) / 0.5 * (2.0 / 3.0);
        const double expected = std::pow(per_step, (n + 1.0) / n);
        CHECK(rep.sup_root[static_cast<std::size_t>(n - 1)] ==
              doctest::Approx(expected).epsilon(0.01));
    }
}

TEST_CASE("split sampler: regeneration, no-split branch, marginal law") {
    const auto model = small_queue_model();
    const auto report = queue::assumption_report(model, 20000, 21);
    REQUIRE(report.all_green);
    const auto splitter = queue::make_queue_splitter(model, report);
    const double beta = splitter.minor.beta_bar;
    const double R = splitter.minor.R(0.3);
    const double tau_small = report.small_set_radius;

    SUBCASE("regeneration returns the kappa point and is state independent") {
        const double w1 = 0.1 * tau_small, w2 = 0.9 * tau_small;
        REQUIRE(splitter.drift.V(w1) <= R);
        REQUIRE(splitter.drift.V(w2) <= R);
        for (double u2 : {0.05, 0.3, 0.77}) {
            const auto r1 = split_step(splitter, 0.3, w1, beta + 0.5 * (1 - beta), u2);
            const auto r2 = split_step(splitter, 0.3, w2, beta + 0.5 * (1 - beta), u2);
            CHECK(r1.regenerated);
            CHECK(r2.regenerated);
            CHECK(r1.state == 0.0);
            CHECK(r1.state == r2.state);
        }
    }
    SUBCASE("outside the small set the step is plain inverse-cdf sampling") {
        const double w = tau_small * 3.0 + 1.0;
        REQUIRE(splitter.drift.V(w) > R);
        for (double u2 : {0.02, 0.5, 0.93}) {
            const auto r = split_step(splitter, 0.6, w, 0.0, u2);
            CHECK_FALSE(r.regenerated);
            CHECK(r.state == doctest::Approx(splitter.kernel.quantile(0.6, w, u2)));
        }
    }
    SUBCASE("split marginal law equals the kernel law (two-sample KS)") {
        for (double w : {0.0, 0.5 * tau_small, 2.0 * tau_small}) {
            RngStream g1 = derive_stream(31, 0);
            RngStream g2 = derive_stream(31, 1);
            RngStream g3 = derive_stream(31, 2);
            const int n = 20000;
            std::vector<double> split_draws(n), direct_draws(n);
            for (int i = 0; i < n; ++i) {
                split_draws[static_cast<std::size_t>(i)] =
                    split_step(splitter, 0.3, w, g1.next_uniform(), g2.next_uniform()).state;
                direct_draws[static_cast<std::size_t>(i)] =
                    splitter.kernel.quantile(0.3, w, g3.next_uniform());
            }
            const auto ks = stats::ks_test_two_sample(split_draws, direct_draws);
            CHECK(ks.p_value >= 0.001);
        }
    }
}

TEST_CASE("generic residual kernel via bisection") {
    // Kernel: uniform on [x, x+2]; kappa: uniform on [0.5, 2]; small set x <= 0.5.
    SplitSampler s;
    s.kernel.quantile = [](double, double x, double u) { return x + 2.0 * u; };
    s.kernel.cdf = [](double, double x, double z) {
        return std::clamp((z - x) / 2.0, 0.0, 1.0);
    };
    s.kernel.support = [](double, double x) { return std::make_pair(x, x + 2.0); };
    s.drift.V = [](double x) { return std::abs(x); };
    s.drift.gamma = [](double) { return 1.0; };
    s.drift.K = [](double) { return 1.0; };
    s.minor.r = 4.0;  // R = 2K/(r gamma) = 0.5
    s.minor.beta_bar = 0.5;
    s.minor.kappa_quantile = [](double, double u) { return 0.5 + 1.5 * u; };
    s.minor.kappa_cdf = [](double, double z) { return std::clamp((z - 0.5) / 1.5, 0.0, 1.0); };

    SUBCASE("residual quantile inverts the residual cdf") {
        for (double u : {0.01, 0.2, 0.5, 0.8, 0.99}) {
            const double z = residual_quantile(s, 0.0, 0.25, u);
            const double cdf = (s.kernel.cdf(0.0, 0.25, z) -
                                0.5 * s.minor.kappa_cdf(0.0, z)) / 0.5;
            CHECK(cdf == doctest::Approx(u).epsilon(1e-9));
        }
    }
    SUBCASE("split marginal equals the kernel marginal in the small set") {
        RngStream g1 = derive_stream(32, 0);
        RngStream g2 = derive_stream(32, 1);
        RngStream g3 = derive_stream(32, 2);
        const int n = 20000;
        std::vector<double> split_draws(n), direct_draws(n);
        for (int i = 0; i < n; ++i) {
            split_draws[static_cast<std::size_t>(i)] =
                split_step(s, 0.0, 0.25, g1.next_uniform(), g2.next_uniform()).state;
            direct_draws[static_cast<std::size_t>(i)] =
                s.kernel.quantile(0.0, 0.25, g3.next_uniform());
        }
        const auto ks = stats::ks_test_two_sample(split_draws, direct_draws);
        CHECK(ks.p_value >= 0.001);
    }
}

TEST_CASE("coupled chains: tau semantics, permanence, censoring") {
    const auto model = small_queue_model();
    const auto report = queue::assumption_report(model, 20000, 21);
    REQUIRE(report.all_green);
    const auto splitter = queue::make_queue_splitter(model, report);

    CoupleOptions opts;
    opts.horizon = 60;
    opts.replicas = 400;
    opts.master_seed = 77;

    SUBCASE("equal starts couple at time zero") {
        const auto res = couple_chains(
            splitter, model.service, 1.0, [](std::int64_t, RngStream&) { return 1.0; }, opts);
        for (const auto& rec : res.records) {
            CHECK_FALSE(rec.censored);
            CHECK(rec.tau == 0);
        }
        CHECK(res.tail.p_tau_gt[0] == 0.0);
    }
    SUBCASE("distinct starts couple eventually; tail is nonincreasing") {
        const auto res = couple_chains(
            splitter, model.service, 0.0, [](std::int64_t, RngStream&) { return 3.0; }, opts);
        for (std::size_t n = 1; n < res.tail.p_tau_gt.size(); ++n)
            CHECK(res.tail.p_tau_gt[n] <= res.tail.p_tau_gt[n - 1] + 1e-15);
        CHECK(res.tail.censor_rate < 0.05);
        // Small-set visits were recorded up to coupling.
        bool any_visit = false;
        for (const auto& rec : res.records) any_visit = any_visit || !rec.small_set_visits.empty();
        CHECK(any_visit);
    }
    SUBCASE("a tiny horizon censors") {
        CoupleOptions tight = opts;
        tight.horizon = 1;
        const auto res = couple_chains(
            splitter, model.service, 0.0, [](std::int64_t, RngStream&) { return 50.0; }, tight);
        CHECK(res.tail.censor_rate > 0.5);
    }
}

TEST_CASE("tail fits recover a planted sqrt-exponent tail") {
    CouplingTail tail;
    tail.horizon = 100;
    tail.replicas = 1;
    tail.p_tau_gt.resize(101);
    tail.stderr_.assign(101, 0.0);
    const double c1 = 0.8, c2 = 0.45;
    for (int n = 0; n <= 100; ++n)
        tail.p_tau_gt[static_cast<std::size_t>(n)] =
            std::min(1.0, c1 * std::exp(-c2 * std::sqrt(static_cast<double>(std::max(n, 1)))));
    const auto fit = fit_tail(tail, 0.5, 1, 50);
    CHECK(fit.c1 == doctest::Approx(c1).epsilon(1e-6));
    CHECK(fit.c2 == doctest::Approx(c2).epsilon(1e-6));
    CHECK(tail_fit_value(fit, 0.5, 64.0) ==
          doctest::Approx(c1 * std::exp(-c2 * 8.0)).epsilon(1e-6));
    const auto bad = fit_tail(tail, 1.0 / 3.0, 1, 50);
    CHECK(fit.rss < bad.rss);
}

TEST_CASE("raising beta_bar slows regeneration-driven coupling") {
    // Mean-reverting uniform kernel U[x/2, x/2 + 1]; chains can only meet on
    // a joint regeneration, so the coupling time is governed by 1 - beta_bar.
    auto make = [](double beta) {
        SplitSampler s;
        s.kernel.quantile = [](double, double x, double u) { return 0.5 * x + u; };
        s.kernel.cdf = [](double, double x, double z) {
            return std::clamp(z - 0.5 * x, 0.0, 1.0);
        };
        s.kernel.support = [](double, double x) {
            return std::make_pair(0.5 * x, 0.5 * x + 1.0);
        };
        s.drift.V = [](double x) { return std::abs(x); };
        s.drift.gamma = [](double) { return 0.5; };
        s.drift.K = [](double) { return 1.0; };
        s.minor.R = [](double) { return 1.0; };  // small set |x| <= 1
        s.minor.r = 1.0;
        s.minor.beta_bar = beta;
        // kappa = uniform on [0.5, 1], inside every small-set support.
        s.minor.kappa_quantile = [](double, double u) { return 0.5 + 0.5 * u; };
        s.minor.kappa_cdf = [](double, double z) {
            return std::clamp((z - 0.5) / 0.5, 0.0, 1.0);
        };
        return s;
    };
    EnvironmentSpec env;
    env.variant = IidSpec{FiniteLaw{{0.0}, {1.0}}, nullptr};
    CoupleOptions opts;
    opts.horizon = 400;
    opts.replicas = 2000;
    opts.master_seed = 99;
    auto median_tau = [&](double beta) {
        const auto res = couple_chains(
            make(beta), env, 0.1, [](std::int64_t, RngStream&) { return 0.9; }, opts);
        std::vector<long long> taus;
        for (const auto& rec : res.records)
            taus.push_back(rec.censored ? opts.horizon + 1 : rec.tau);
        std::sort(taus.begin(), taus.end());
        return taus[taus.size() / 2];
    };
    const long long m1 = median_tau(0.5);
    const long long m2 = median_tau(0.8);
    const long long m3 = median_tau(0.95);
    CHECK(m1 <= m2);
    CHECK(m2 <= m3);
    CHECK(m1 < m3);  // strict across the full grid
}
