#include "fairdetect/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "fairdetect/errors.hpp"

namespace fairdetect::stats {

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ConfigError("incomplete_beta: shape parameters must be positive");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, int df) {
    if (df <= 0) throw ConfigError("student_t_cdf: df must be positive");
    if (t == 0.0) return 0.5;
    const double nu = static_cast<double>(df);
    const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_two_sided_p(double t, int df) {
    if (df <= 0) throw ConfigError("student_t_two_sided_p: df must be positive");
    const double nu = static_cast<double>(df);
    return incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
}

double f_survival(double f, int df1, int df2) {
    if (df1 <= 0 || df2 <= 0) throw ConfigError("f_survival: df must be positive");
    if (f <= 0.0) return 1.0;
    const double d1 = static_cast<double>(df1);
    const double d2 = static_cast<double>(df2);
    return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

TestResult t_test(std::span<const double> a, std::span<const double> b) {
    const auto na = static_cast<int>(a.size());
    const auto nb = static_cast<int>(b.size());
    if (na < 2 || nb < 2) {
        throw DataError("t_test: each sample needs at least 2 observations");
    }
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double ssa = 0.0;
    double ssb = 0.0;
    for (double x : a) ssa += (x - ma) * (x - ma);
    for (double x : b) ssb += (x - mb) * (x - mb);
    const int df = na + nb - 2;
    const double pooled_var = (ssa + ssb) / static_cast<double>(df);

    TestResult r;
    r.kind = TestKind::t_test;
    r.df = {df, 0};
    if (pooled_var <= 0.0) {
        if (ma == mb) {
            r.statistic = 0.0;
            r.p_value = 1.0;
            return r;
        }
        throw DataError("t_test: zero pooled variance with unequal means");
    }
    const double se = std::sqrt(pooled_var * (1.0 / na + 1.0 / nb));
    r.statistic = (ma - mb) / se;
    r.p_value = student_t_two_sided_p(r.statistic, df);
    return r;
}

TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    const auto k = static_cast<int>(groups.size());
    if (k < 2) throw DataError("anova_oneway: need at least 2 groups");
    int n_total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw DataError("anova_oneway: each group needs at least 2 observations");
        n_total += static_cast<int>(g.size());
        for (double x : g) grand_sum += x;
    }
    const double grand_mean = grand_sum / n_total;

    double ss_between = 0.0;
    double ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ss_between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
        for (double x : g) ss_within += (x - m) * (x - m);
    }
    const int df1 = k - 1;
    const int df2 = n_total - k;
    TestResult r;
    r.kind = TestKind::anova;
    r.df = {df1, df2};
    if (ss_within <= 0.0) {
        if (ss_between <= 0.0) {
            throw DataError("anova_oneway: degenerate input, zero variance everywhere");
        }
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.statistic = (ss_between / df1) / (ss_within / df2);
    r.p_value = f_survival(r.statistic, df1, df2);
    return r;
}

std::string format_test(const TestResult& r) {
    char buf[128];
    if (r.kind == TestKind::t_test) {
        if (r.p_value < 0.001) {
            std::snprintf(buf, sizeof(buf), "t(%d)= %.4f, p < 0.001", r.df[0], r.statistic);
        } else {
            std::snprintf(buf, sizeof(buf), "t(%d)= %.4f, p = %.4f", r.df[0], r.statistic, r.p_value);
        }
    } else {
        if (r.p_value < 0.001) {
            std::snprintf(buf, sizeof(buf), "F(%d,%d) = %.4f, p < 0.001", r.df[0], r.df[1], r.statistic);
        } else {
            std::snprintf(buf, sizeof(buf), "F(%d,%d) = %.4f, p = %.4f", r.df[0], r.df[1], r.statistic,
                          r.p_value);
        }
    }
    return buf;
}

}  // namespace fairdetect::stats
