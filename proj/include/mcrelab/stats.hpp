// Shared numerics: normal distribution helpers, Kolmogorov-Smirnov tests,
// summary statistics, least squares, histograms and adaptive quadrature.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mcrelab::stats {

double normal_cdf(double x);
double normal_quantile(double p);  // inverse of normal_cdf, p in (0,1)

// Kolmogorov asymptotic tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_tail(double lambda);

struct KsResult {
    double statistic = 0.0;  // sup-distance D
    double p_value = 1.0;
};

// One-sample KS against an arbitrary cdf (atoms allowed; p-value is the
// classical continuous-case approximation, conservative under ties).
KsResult ks_test(std::span<const double> sample,
                 const std::function<double(double)>& cdf);
KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);              // 1/(n-1)
double covariance(std::span<const double> xs, std::span<const double> ys);
double correlation(std::span<const double> xs, std::span<const double> ys);
// Standard error of the sample variance via the fourth central moment.
double variance_stderr(std::span<const double> xs);

// log( mean(exp(x_i)) ), overflow safe.
double log_mean_exp(std::span<const double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;  // residual sum of squares
};
LinearFit least_squares(std::span<const double> xs, std::span<const double> ys);

struct Histogram {
    double lo = 0.0, hi = 1.0;
    std::vector<double> mass;  // normalized bin masses, first/last bins catch overflow
};
Histogram make_histogram(std::span<const double> xs, double lo, double hi, int bins);
// Total variation (sup-event convention): half L1 distance between bin masses.
double tv_distance(const Histogram& a, const Histogram& b);

// Adaptive Simpson quadrature.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-10, int max_depth = 48);

// Expectation of g under N(0, sigma^2), by quadrature over +-12 sigma.
double normal_expectation(const std::function<double(double)>& g, double sigma);

}  // namespace mcrelab::stats
