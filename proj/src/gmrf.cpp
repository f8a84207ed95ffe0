#include "surveyfuse/gmrf.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>

#include "surveyfuse/types.hpp"

namespace surveyfuse {

MaternParams MaternParams::from_range_sigma(double range, double sigma) {
  if (range <= 0 || sigma <= 0)
    throw ValidationError("matern: range and sigma must be positive");
  MaternParams p;
  p.nu = 1.0;
  p.range = range;
  p.sigma = sigma;
  p.kappa = std::sqrt(8.0 * p.nu) / range;
  // sigma^2 = 1 / (4 pi kappa^2 tau^2)
  p.tau = 1.0 / (sigma * p.kappa * std::sqrt(4.0 * M_PI));
  return p;
}

MaternParams MaternParams::from_kappa_tau(double kappa, double tau) {
  if (kappa <= 0 || tau <= 0)
    throw ValidationError("matern: kappa and tau must be positive");
  MaternParams p;
  p.nu = 1.0;
  p.kappa = kappa;
  p.tau = tau;
  p.range = std::sqrt(8.0 * p.nu) / kappa;
  p.sigma = 1.0 / (kappa * tau * std::sqrt(4.0 * M_PI));
  return p;
}

double matern_correlation(double delta, const MaternParams& params) {
  if (delta < 0) throw ValidationError("matern: negative distance");
  const double x = params.kappa * delta;
  if (x == 0.0) return 1.0;  // continuous limit of x^nu K_nu(x)
  const double nu = params.nu;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) *
         std::cyl_bessel_k(nu, x);
}

SparsePrecision::SparsePrecision(SpMat q) : q_(std::move(q)) {
  if (q_.rows() != q_.cols())
    throw ValidationError("precision matrix must be square");
  q_.makeCompressed();
  SpMat diff = SpMat(q_.transpose()) - q_;
  if (diff.coeffs().size() > 0 && diff.coeffs().cwiseAbs().maxCoeff() > 1e-10)
    throw NumericError("precision matrix not symmetric");
  factor_.compute(q_);
  if (factor_.info() != Eigen::Success || (factor_.vectorD().array() <= 0).any())
    throw NumericError("precision matrix not positive definite (dim " +
                       std::to_string(q_.rows()) + ")");
  log_det_ = factor_.vectorD().array().log().sum();
}

Eigen::VectorXd SparsePrecision::solve(const Eigen::VectorXd& b) const {
  return factor_.solve(b);
}

Eigen::VectorXd SparsePrecision::sample(Rng& rng) const {
  Eigen::VectorXd z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
  Eigen::VectorXd v = z.array() / factor_.vectorD().array().sqrt();
  SpMat l = factor_.matrixL();
  Eigen::VectorXd w =
      l.transpose().triangularView<Eigen::UnitUpper>().solve(v);
  return factor_.permutationPinv() * w;
}

// Erisman-Tinney recursions restricted to the Cholesky pattern; iterating
// columns from the last, every needed entry S_ik lies inside the pattern
// by the elimination-tree closure property.
Eigen::VectorXd SparsePrecision::marginal_variances() const {
  const int n = dim();
  SpMat l = factor_.matrixL();  // unit lower triangular, column compressed
  l.makeCompressed();
  const Eigen::VectorXd d = factor_.vectorD();
  const int* outer = l.outerIndexPtr();
  const int* inner = l.innerIndexPtr();
  const double* vals = l.valuePtr();

  // S stored on the pattern of L (lower triangle including diagonal)
  std::vector<double> s(l.nonZeros(), 0.0);
  auto entry = [&](int row, int col) -> int {
    // binary search for row inside column col
    int lo = outer[col], hi = outer[col + 1];
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (inner[mid] < row)
        lo = mid + 1;
      else
        hi = mid;
    }
    return (lo < outer[col + 1] && inner[lo] == row) ? lo : -1;
  };

  for (int j = n - 1; j >= 0; --j) {
    for (int pi = outer[j + 1] - 1; pi >= outer[j]; --pi) {
      const int i = inner[pi];
      double acc = (i == j) ? 1.0 / d[j] : 0.0;
      for (int pk = outer[j]; pk < outer[j + 1]; ++pk) {
        const int k = inner[pk];
        if (k <= j) continue;  // skip the unit diagonal
        const int pos = (k >= i) ? entry(k, i) : entry(i, k);
        if (pos >= 0) acc -= vals[pk] * s[pos];
      }
      s[pi] = acc;
    }
  }

  Eigen::VectorXd diag_perm(n);
  for (int j = 0; j < n; ++j) {
    const int pos = entry(j, j);
    diag_perm[j] = s[pos];
  }
  // un-permute: Q = P^T (L D L^T) P with P = permutationP()
  Eigen::VectorXd out(n);
  const auto& p = factor_.permutationP();
  for (int i = 0; i < n; ++i) out[i] = diag_perm[p.indices()[i]];
  return out;
}

SpMat spde_precision_matrix(const FemMatrices& fem, const MaternParams& params) {
  if (params.nu != 1.0)
    throw ValidationError("spde precision supports nu = 1 only");
  const double k2 = params.kappa * params.kappa;
  const double t2 = params.tau * params.tau;
  SpMat cinv_g = fem.c_diag.cwiseInverse().asDiagonal() * fem.g;
  SpMat q = k2 * k2 * fem.c + 2.0 * k2 * fem.g + SpMat(fem.g * cinv_g);
  q = t2 * q;
  return 0.5 * (SpMat(q.transpose()) + q);
}

SparsePrecision spde_precision(const FemMatrices& fem, const MaternParams& params) {
  return SparsePrecision(spde_precision_matrix(fem, params));
}

SpMat ar1_precision_matrix(const Ar1Params& params) {
  if (std::abs(params.rho) >= 1.0)
    throw ValidationError("ar1: |rho| must be < 1");
  if (params.n_steps < 1) throw ValidationError("ar1: need T >= 1");
  const int t = params.n_steps;
  const double rho = params.rho;
  SpMat q(t, t);
  if (t == 1) {
    q.insert(0, 0) = 1.0;
    return q;
  }
  const double scale = 1.0 / (1.0 - rho * rho);
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < t; ++i) {
    const double diag = (i == 0 || i == t - 1) ? 1.0 : 1.0 + rho * rho;
    trips.emplace_back(i, i, diag * scale);
    if (i + 1 < t) {
      trips.emplace_back(i, i + 1, -rho * scale);
      trips.emplace_back(i + 1, i, -rho * scale);
    }
  }
  q.setFromTriplets(trips.begin(), trips.end());
  return q;
}

SparsePrecision ar1_precision(const Ar1Params& params) {
  return SparsePrecision(ar1_precision_matrix(params));
}

SparsePrecision kronecker_precision(const SparsePrecision& qt,
                                    const SparsePrecision& qs) {
  const std::int64_t dim =
      static_cast<std::int64_t>(qt.dim()) * static_cast<std::int64_t>(qs.dim());
  if (dim > 2'000'000)
    throw ValidationError("kronecker precision dimension too large: " +
                          std::to_string(dim));
  SpMat q = Eigen::kroneckerProduct(qt.matrix(), qs.matrix()).eval();
  return SparsePrecision(std::move(q));
}

Eigen::VectorXd sample_gmrf(const SparsePrecision& q, std::uint64_t seed) {
  Rng rng(seed);
  return q.sample(rng);
}

Eigen::VectorXd marginal_variances(const SparsePrecision& q) {
  return q.marginal_variances();
}

}  // namespace surveyfuse
