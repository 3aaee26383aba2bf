#pragma once

#include <vector>

namespace homoscope {

// Y = sum_i w_i * chi2(k_i, lambda_i) + N(mean, sd^2) + offset.
struct GChi2Spec {
  struct Term {
    double weight = 1.0;
    int dof = 1;
    double noncentrality = 0.0;
  };
  std::vector<Term> terms;
  double gauss_mean = 0.0;
  double gauss_sd = 0.0;
  double offset = 0.0;
};

// P(Y <= x), absolute accuracy about tol. Single-term and pure Gaussian specs
// use the closed forms below; anything else goes through characteristic
// function inversion. Throws AccuracyError when tol cannot be reached and
// Error(Validation) on a malformed spec.
double gchi2_cdf(const GChi2Spec& spec, double x, double tol = 1e-6);

double noncentral_chi2_cdf(int dof, double lambda, double x);
double chi2_cdf(double dof, double x);
double normal_cdf(double z);

}  // namespace homoscope
