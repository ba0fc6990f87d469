#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace fairdetect::stats {

enum class TestKind { t_test, anova };

struct TestResult {
    TestKind kind;
    double statistic = 0.0;
    // t-test: {n_a + n_b - 2, 0}; ANOVA: {k - 1, N - k}.
    std::array<int, 2> df{0, 0};
    double p_value = 1.0;
};

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
// Absolute accuracy target 1e-10 on the tested range.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, int df);

// Two-sided p for a t statistic.
double student_t_two_sided_p(double t, int df);

// Upper tail P(F >= f).
double f_survival(double f, int df1, int df2);

// Pooled-variance two-sample t-test, two-sided.
TestResult t_test(std::span<const double> a, std::span<const double> b);

TestResult anova_oneway(const std::vector<std::vector<double>>& groups);

// "t(18)= -1.0394, p = 0.3126" / "F(2,57) = 15.23, p < 0.001"
std::string format_test(const TestResult& r);

}  // namespace fairdetect::stats
