#pragma once

#include <Eigen/Dense>
#include <string>

#include "ggmac/channel.hpp"
#include "ggmac/types.hpp"

namespace ggmac {

// Which pipeline produced a covariance estimate.
enum class Method { original, signs, uncoded };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

struct CovarianceEstimate {
  Eigen::MatrixXd matrix;  // symmetric, positive diagonal; not necessarily PSD
  Method method = Method::original;
  long n_used = 0;             // samples actually consumed
  int clamped_diagonals = 0;   // diagonal repairs during uncoded de-noising
};

// Symmetry within tol, strictly positive diagonal, n_used >= 1.
void validate_estimate(const CovarianceEstimate& est, double tol = 1e-8);

// Plain second-moment estimate X^T X / n (variables are zero mean by model).
CovarianceEstimate sample_covariance(const SampleMatrix& samples);

// Entrywise sign with sign(0) = +1.
SignMatrix sign_quantize(const SampleMatrix& samples);

// Fraction of samples where the two bit streams agree.
double estimate_beta(const Eigen::VectorXd& bits_j, const Eigen::VectorXd& bits_k);

// Correlation estimate from sign agreement: the agreement probability of the
// signs of two standard jointly Gaussian variables is 1/2 + asin(rho)/pi, so
// rho is recovered as -cos(pi * beta_hat). Diagonal is exactly 1.
CovarianceEstimate signs_covariance(const SignMatrix& bits);

// Same estimate built from the bit Gram matrix bits^T bits (streaming path).
CovarianceEstimate signs_covariance_from_gram(const Eigen::MatrixXd& gram, long n);

// Diagonal entries of the de-noised uncoded estimate below this are clamped
// up to it (and counted) so downstream solvers always see positive variances.
inline constexpr double kUncodedDiagFloor = 1e-3;

// Inverts the channel mixing on the received second moment and subtracts the
// known noise term, then averages the two diagonal d x d blocks back into one
// covariance estimate for the original variables. n_used counts original
// samples, i.e. twice the received rows.
CovarianceEstimate uncoded_covariance(const ReceivedMatrix& received,
                                      const RealBlockChannel& chan);

// Same estimate built from the receive Gram matrix Y^T Y (streaming path).
CovarianceEstimate uncoded_covariance_from_gram(const Eigen::MatrixXd& gram,
                                                long rows,
                                                const RealBlockChannel& chan);

// Sub-Gaussian tail scale of the uncoded estimate: 3200 * (1 + noise_var /
// sigma_min(mixing)^2)^2. Enters the uncoded sample-size thresholds.
double uncoded_tail_constant(const RealBlockChannel& chan);

void save_covariance(const CovarianceEstimate& est, const std::string& path);
CovarianceEstimate load_covariance(const std::string& path);

}  // namespace ggmac
