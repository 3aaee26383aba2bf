#pragma once

#include <span>

namespace homoscope {

enum class Alternative { Less, Greater, TwoSided };

struct TTestResult {
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 0.0;
  Alternative alternative = Alternative::Less;
};

double mean(std::span<const double> v);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> v);

double student_t_cdf(double t, double dof);

// Two-sample t-test; Less tests mean(a) < mean(b). Welch-Satterthwaite dof
// unless pooled. When both samples are constant the statistic is 0 for equal
// means (p = 0.5 one-sided) and +-inf otherwise (p = 0 or 1).
// Throws Error(Validation) when a sample has fewer than 2 values.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b, Alternative alt = Alternative::Less,
                        bool pooled = false);

const char* to_string(Alternative alt);

}  // namespace homoscope
