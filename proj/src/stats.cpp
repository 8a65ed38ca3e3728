#include "mcrelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcrelab::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, then one Halley refinement step.
double normal_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    double x = normal_quantile_approx(p);
    // Halley refinement against erfc for ~1e-15 accuracy.
    for (int it = 0; it < 2; ++it) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 101; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1) ? term : -term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> sample,
                 const std::function<double(double)>& cdf) {
    const std::size_t n = sample.size();
    if (n == 0) throw std::invalid_argument("ks_test: empty sample");
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    // Ties are grouped so reference laws with atoms are compared against
    // F(x-) below the jump and F(x) after it.
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && xs[j] == xs[i]) ++j;
        const double f_at = cdf(xs[i]);
        const double f_left =
            cdf(std::nextafter(xs[i], -std::numeric_limits<double>::infinity()));
        d = std::max(d, static_cast<double>(j) / n - f_at);
        d = std::max(d, f_left - static_cast<double>(i) / n);
        i = j;
    }
    const double sn = std::sqrt(static_cast<double>(n));
    // Stephens' small-sample adjustment.
    const double lambda = d * (sn + 0.12 + 0.11 / sn);
    return {d, kolmogorov_tail(lambda)};
}

KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_test_two_sample: empty sample");
    std::vector<double> xs(a.begin(), a.end()), ys(b.begin(), b.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const std::size_t n = xs.size(), m = ys.size();
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < n && j < m) {
        const double v = std::min(xs[i], ys[j]);
        while (i < n && xs[i] <= v) ++i;
        while (j < m && ys[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    const double ne = static_cast<double>(n) * m / static_cast<double>(n + m);
    const double sn = std::sqrt(ne);
    const double lambda = d * (sn + 0.12 + 0.11 / sn);
    return {d, kolmogorov_tail(lambda)};
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance: need n >= 2");
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("covariance: mismatched or short inputs");
    const double mx = mean(xs), my = mean(ys);
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (xs[i] - mx) * (ys[i] - my);
    return s / static_cast<double>(xs.size() - 1);
}

double correlation(std::span<const double> xs, std::span<const double> ys) {
    const double c = covariance(xs, ys);
    const double vx = variance(xs), vy = variance(ys);
    if (vx <= 0.0 || vy <= 0.0) throw std::invalid_argument("correlation: degenerate input");
    return c / std::sqrt(vx * vy);
}

double variance_stderr(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 4) throw std::invalid_argument("variance_stderr: need n >= 4");
    const double m = mean(xs);
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d2 = (x - m) * (x - m);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    const double v = m4 - m2 * m2;
    return std::sqrt(std::max(v, 0.0) / static_cast<double>(n));
}

double log_mean_exp(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("log_mean_exp: empty");
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : xs) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s / static_cast<double>(xs.size()));
}

LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("least_squares: mismatched or short inputs");
    const double mx = mean(xs), my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("least_squares: degenerate abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        fit.rss += r * r;
    }
    return fit;
}

Histogram make_histogram(std::span<const double> xs, double lo, double hi, int bins) {
    if (!(hi > lo) || bins < 1) throw std::invalid_argument("make_histogram: bad range");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.mass.assign(static_cast<std::size_t>(bins), 0.0);
    const double w = (hi - lo) / bins;
    for (double x : xs) {
        int b = static_cast<int>(std::floor((x - lo) / w));
        b = std::clamp(b, 0, bins - 1);
        h.mass[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& m : h.mass) m /= static_cast<double>(xs.size());
    return h;
}

double tv_distance(const Histogram& a, const Histogram& b) {
    if (a.mass.size() != b.mass.size() || a.lo != b.lo || a.hi != b.hi)
        throw std::invalid_argument("tv_distance: incompatible binnings");
    double s = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * s;
}

namespace {
double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double fa, double b,
                double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, fa, m, fm, flm);
    const double right = simpson(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) +
           adaptive(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1);
}
}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol,
                 int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = simpson(a, fa, b, fb, fm);
    return adaptive(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double normal_expectation(const std::function<double(double)>& g, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("normal_expectation: sigma <= 0");
    const double c = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    auto integrand = [&](double x) {
        return g(x) * c * std::exp(-x * x / (2.0 * sigma * sigma));
    };
    return integrate(integrand, -12.0 * sigma, 12.0 * sigma, 1e-12);
}

}  // namespace mcrelab::stats
