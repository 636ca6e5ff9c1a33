#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motjvie/kernel.hpp"

namespace motjvie {

struct FirFilter {
  int order = 0;
  double delta = 0;
  std::vector<double> coeffs;  // delta_n, n = 0..order-1

  double alternating_sum() const;
  // |sum_n delta_n exp(-j n theta)|
  double magnitude(double theta) const;
};

// order 2, 3 or 4: binomial high-pass stencils scaled so the alternating
// sum is delta. fir4_plus_last_tap flips the last FIR4 tap to +delta/8,
// whose alternating sum is 3 delta / 4.
FirFilter make_fir(int order, double delta, bool fir4_plus_last_tap = false);
// delta * sin^(order-1)(theta/2)
double fir_closed_form(int order, double delta, double theta);

double recommend_delta(std::size_t M);

// Copy of K with delta_n added to the identity coefficient at lag n.
InteractionKernel regularize(const InteractionKernel& K, const FirFilter& f);
// Copy of K with every stored value rounded to the nearest multiple of eps.
InteractionKernel inject_truncation(const InteractionKernel& K, double eps);

// Normalised weights (-1)^j binom(ell-j, ell-n), j = 0..n. log_scale gets
// the log of the largest binomial the weights were divided by.
std::vector<double> pdsa_weights(int ell, int n, double* log_scale = nullptr);

enum class Verdict { positive_definite, semidefinite, indefinite, inconclusive };
std::string verdict_name(Verdict v);

enum class PdsaMethod { automatic, dense, matrix_free };

// Block LOBPCG preconditioned by the inverse magnitude of the optimal
// block circulant approximation of D_n.
struct MatrixFreeOptions {
  double tolerance = 1e-10;  // residual relative to the operator norm estimate
  int max_iterations = 20000;
  int block = 4;
  bool precondition = true;
  double floor = 1e-10;  // preconditioner eigenvalue clamp, relative
  // stop once the residual bound separates the smallest Ritz value from
  // zero instead of iterating down to tolerance
  bool stop_at_verdict = true;
  unsigned seed = 12345;
};

struct PdsaEntry {
  int n = 0;
  Verdict verdict = Verdict::inconclusive;
  double lambda_min = 0;  // smallest eigenvalue estimate of the weighted D_n
  double lambda_max = 0;  // matrix-free: circulant estimate of the norm
  double log_scale = 0;   // log of the weight normalisation applied
  std::string method;
  int iterations = 0;
  double seconds = 0;
};

struct PdsaReport {
  std::vector<PdsaEntry> entries;
  std::string text() const;
};

// D_n = sum_j w_j Z_j in the symmetric similarity form
// a I - C^(1/2) S C^(1/2), which has the eigenvalues of D_n.
Eigen::MatrixXd pdsa_dense_matrix(const InteractionKernel& K, int n);

PdsaReport pdsa_check(const InteractionKernel& K, const std::vector<int>& n_list,
                      PdsaMethod method = PdsaMethod::automatic, const MatrixFreeOptions& opt = {});

}  // namespace motjvie
