#ifndef SURVEYFUSE_GMRF_HPP
#define SURVEYFUSE_GMRF_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cstdint>
#include <memory>

#include "surveyfuse/mesh.hpp"
#include "surveyfuse/rng.hpp"

namespace surveyfuse {

using SpMat = Eigen::SparseMatrix<double>;

// Matern field parameters (smoothness fixed at 1, two dimensions).
// kappa = sqrt(8 nu) / range and sigma^2 = 1 / (4 pi kappa^2 tau^2) tie
// the five fields together; use the factories to keep them consistent.
struct MaternParams {
  double kappa = 1.0;   // 1/km
  double tau = 1.0;     // SPDE scale
  double nu = 1.0;      // smoothness
  double range = 1.0;   // km, correlation ~0.14 at this distance
  double sigma = 1.0;   // marginal sd of the field

  static MaternParams from_range_sigma(double range, double sigma);
  static MaternParams from_kappa_tau(double kappa, double tau);
};

// C(d) = 2^{1-nu}/Gamma(nu) (kappa d)^nu K_nu(kappa d), C(0) = 1.
double matern_correlation(double delta, const MaternParams& params);

struct Ar1Params {
  double rho = 0.0;  // |rho| < 1
  int n_steps = 1;   // T
};

// Symmetric positive definite sparse matrix with a cached LDLT factor.
// Construction factorizes eagerly; failure surfaces as NumericError (no
// silent jitter).
class SparsePrecision {
 public:
  explicit SparsePrecision(SpMat q);

  int dim() const { return static_cast<int>(q_.rows()); }
  const SpMat& matrix() const { return q_; }
  double log_det() const { return log_det_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  // x with precision Q: x = Pinv L^{-T} D^{-1/2} z, z iid standard normal
  Eigen::VectorXd sample(Rng& rng) const;
  // diagonal of Q^{-1} via Takahashi recursions on the factor pattern
  Eigen::VectorXd marginal_variances() const;

 private:
  SpMat q_;
  Eigen::SimplicialLDLT<SpMat> factor_;
  double log_det_ = 0.0;
};

// Q = tau^2 (kappa^4 C + 2 kappa^2 G + G C^{-1} G) for the nu = 1
// (alpha = 2) SPDE discretization with lumped mass.
SparsePrecision spde_precision(const FemMatrices& fem, const MaternParams& params);
SpMat spde_precision_matrix(const FemMatrices& fem, const MaternParams& params);

// Stationary unit-marginal-variance AR1 precision (tridiagonal T x T).
SparsePrecision ar1_precision(const Ar1Params& params);
SpMat ar1_precision_matrix(const Ar1Params& params);

// Q_st = Q_t kron Q_s, year-major node ordering.
SparsePrecision kronecker_precision(const SparsePrecision& qt,
                                    const SparsePrecision& qs);

Eigen::VectorXd sample_gmrf(const SparsePrecision& q, std::uint64_t seed);
Eigen::VectorXd marginal_variances(const SparsePrecision& q);

}  // namespace surveyfuse

#endif
