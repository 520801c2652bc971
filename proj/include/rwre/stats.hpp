#pragma once
// Small numerical utilities: deterministic reductions, moment accumulators,
// least squares, and the test statistics used by the verifiers.
//
// Determinism note: every floating-point reduction that feeds a report is
// either (a) a serial loop in fixed order, or (b) a blocked sum whose partial
// blocks are combined serially in block order — never an OpenMP reduction —
// so results are bitwise independent of thread count.

#include <cstdint>
#include <vector>

namespace rwre {

// ------------------------------------------------------- execution policy
enum class Exec { Serial, Parallel };

// Process-wide default for the stepping cores (tests pin Serial vs Parallel
// to assert bitwise equality). Parallel respects RWRE_THREADS.
void set_exec_policy(Exec e);
Exec exec_policy();
// Reads RWRE_THREADS (if set) and caps OpenMP workers accordingly.
void apply_thread_cap_from_env();

// ------------------------------------------------------- reductions
// Sum in fixed order with pairwise splitting (accuracy + determinism).
double pairwise_sum(const double* x, int64_t n);
double pairwise_sum(const std::vector<double>& x);

// ------------------------------------------------------- moments
struct MeanVar {
  int64_t n = 0;
  double mean = 0.0;
  double var = 0.0;  // unbiased sample variance
  double se() const;
};
MeanVar mean_var(const std::vector<double>& x);

// ------------------------------------------------------- regression
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double max_resid = 0.0;  // max |y - (a + b x)|
  double min_resid = 0.0;  // min (signed) residual
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// ------------------------------------------------------- test statistics
// Two-sample Kolmogorov-Smirnov statistic sup |F1 - F2| (inputs get sorted).
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Critical value at level alpha for sample sizes n, m.
double ks_critical(double alpha, int64_t n, int64_t m);

// Upper quantile of chi-square with k dof (Wilson-Hilferty approximation).
double chi2_quantile(double p, double k);

}  // namespace rwre
