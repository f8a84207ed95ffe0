#include "surveyfuse/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "surveyfuse/parallel.hpp"

namespace surveyfuse {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

double ObsLikelihood::loglik(const Eigen::VectorXd& eta, double sigma) const {
  if (family == Family::bernoulli) {
    double ll = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double stable = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i])));
      ll += y[i] * eta[i] - stable;
    }
    return ll;
  }
  const double inv_var = 1.0 / (sigma * sigma);
  double ll = 0.0;
  for (int i = 0; i < y.size(); ++i) {
    const double r = y[i] - eta[i];
    ll += -0.5 * (kLog2Pi + 2.0 * std::log(sigma) + r * r * inv_var);
  }
  return ll;
}

void ObsLikelihood::derivatives(const Eigen::VectorXd& eta, double sigma,
                                Eigen::VectorXd& grad,
                                Eigen::VectorXd& neg_hess) const {
  grad.resize(y.size());
  neg_hess.resize(y.size());
  if (family == Family::bernoulli) {
    for (int i = 0; i < y.size(); ++i) {
      const double p = inverse_logit(eta[i]);
      grad[i] = y[i] - p;
      neg_hess[i] = p * (1.0 - p);
    }
    return;
  }
  const double inv_var = 1.0 / (sigma * sigma);
  for (int i = 0; i < y.size(); ++i) {
    grad[i] = (y[i] - eta[i]) * inv_var;
    neg_hess[i] = inv_var;
  }
}

double ObsLikelihood::point_logdensity(int i, double eta_i, double sigma) const {
  if (family == Family::bernoulli) {
    const double stable = std::max(eta_i, 0.0) + std::log1p(std::exp(-std::abs(eta_i)));
    return y[i] * eta_i - stable;
  }
  const double r = y[i] - eta_i;
  return -0.5 * (kLog2Pi + 2.0 * std::log(sigma) + r * r / (sigma * sigma));
}

GaussianApprox gaussian_approx(const ObsLikelihood& lik, double sigma,
                               const SparsePrecision& prior,
                               const SpMatRow& design,
                               const Eigen::VectorXd& init,
                               const NewtonSettings& settings) {
  const int m = prior.dim();
  if (design.cols() != m)
    throw ValidationError("gaussian_approx: design/prior dimension mismatch");
  Eigen::VectorXd x = init.size() == m ? init : Eigen::VectorXd::Zero(m);
  SpMat design_t = design.transpose();

  auto objective = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd eta = design * v;
    return lik.loglik(eta, sigma) - 0.5 * v.dot(prior.matrix() * v);
  };

  Eigen::SimplicialLDLT<SpMat> solver;
  bool analyzed = false;
  Eigen::VectorXd grad_eta, weight;
  double fx = objective(x);
  std::vector<double> grad_trace;

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    const Eigen::VectorXd eta = design * x;
    lik.derivatives(eta, sigma, grad_eta, weight);
    weight = weight.cwiseMax(settings.min_weight);
    const Eigen::VectorXd grad = design_t * grad_eta - prior.matrix() * x;
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    grad_trace.push_back(gnorm);

    SpMat h = prior.matrix() + SpMat(design_t * weight.asDiagonal() * design);
    if (gnorm < settings.grad_tol) {
      GaussianApprox out;
      out.mode = x;
      out.precision = std::make_shared<SparsePrecision>(std::move(h));
      out.loglik_at_mode = lik.loglik(eta, sigma);
      out.prior_quad = x.dot(prior.matrix() * x);
      out.iterations = iter;
      return out;
    }

    if (!analyzed) {
      solver.analyzePattern(h);
      analyzed = true;
    }
    solver.factorize(h);
    if (solver.info() != Eigen::Success)
      throw NumericError("gaussian_approx: curvature factorization failed");
    const Eigen::VectorXd delta = solver.solve(grad);

    double t = 1.0;
    bool improved = false;
    for (int half = 0; half < 12; ++half) {
      const Eigen::VectorXd cand = x + t * delta;
      const double fc = objective(cand);
      if (std::isfinite(fc) && fc >= fx - 1e-12) {
        x = cand;
        fx = fc;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }

  std::ostringstream msg;
  msg << "gaussian_approx did not converge; gradient max-norm trace:";
  for (double g : grad_trace) msg << " " << g;
  throw NumericError(msg.str());
}

SparsePrecision SubmodelProblem::prior_precision(const HyperParams& h) const {
  return latent_prior_precision(layout, h, fem.get(), beta_prior_variance);
}

double SubmodelProblem::log_posterior(const Eigen::VectorXd& u,
                                      const NewtonSettings& settings,
                                      GaussianApprox* approx_out,
                                      const Eigen::VectorXd* warm_start) const {
  const HyperParams h = hspace.from_internal(u, base);
  SparsePrecision prior = prior_precision(h);
  const Eigen::VectorXd init =
      warm_start != nullptr ? *warm_start : Eigen::VectorXd::Zero(layout.total());
  GaussianApprox approx =
      gaussian_approx(lik, h.sigma_e, prior, design, init, settings);
  const double lp = approx.loglik_at_mode - 0.5 * approx.prior_quad +
                    0.5 * prior.log_det() - 0.5 * approx.precision->log_det() +
                    hspace.log_prior_internal(u, priors);
  if (approx_out != nullptr) *approx_out = std::move(approx);
  return lp;
}

namespace {

// objective wrapper that counts evaluations and treats numerical
// breakdowns at extreme hyperparameters as -inf
struct CountedObjective {
  const SubmodelProblem& problem;
  const NewtonSettings& newton;
  const Eigen::VectorXd* warm = nullptr;
  int evals = 0;

  double operator()(const Eigen::VectorXd& u) {
    ++evals;
    try {
      return problem.log_posterior(u, newton, nullptr, warm);
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  }
};

Eigen::VectorXd fd_gradient(CountedObjective& f, const Eigen::VectorXd& u,
                            double rel_step) {
  const int d = static_cast<int>(u.size());
  Eigen::VectorXd g(d);
  for (int i = 0; i < d; ++i) {
    const double h = rel_step * std::max(1.0, std::abs(u[i]));
    Eigen::VectorXd up = u, dn = u;
    up[i] += h;
    dn[i] -= h;
    g[i] = (f(up) - f(dn)) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_hessian(CountedObjective& f, const Eigen::VectorXd& u,
                           double f0, double rel_step) {
  const int d = static_cast<int>(u.size());
  Eigen::MatrixXd h_mat(d, d);
  Eigen::VectorXd steps(d);
  for (int i = 0; i < d; ++i)
    steps[i] = rel_step * std::max(1.0, std::abs(u[i]));
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd up = u, dn = u;
    up[i] += steps[i];
    dn[i] -= steps[i];
    h_mat(i, i) = (f(up) - 2.0 * f0 + f(dn)) / (steps[i] * steps[i]);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      Eigen::VectorXd pp = u, pm = u, mp = u, mm = u;
      pp[i] += steps[i];
      pp[j] += steps[j];
      pm[i] += steps[i];
      pm[j] -= steps[j];
      mp[i] -= steps[i];
      mp[j] += steps[j];
      mm[i] -= steps[i];
      mm[j] -= steps[j];
      const double v = (f(pp) - f(pm) - f(mp) + f(mm)) /
                       (4.0 * steps[i] * steps[j]);
      h_mat(i, j) = v;
      h_mat(j, i) = v;
    }
  }
  return h_mat;
}

}  // namespace

OptimResult optimize_hyper(const SubmodelProblem& problem,
                           const Eigen::VectorXd& start,
                           const InferenceSettings& settings) {
  OptimResult result;
  const int d = static_cast<int>(start.size());
  if (d == 0) {
    GaussianApprox approx;
    result.mode = start;
    result.log_post = problem.log_posterior(start, settings.newton, &approx);
    result.converged = true;
    result.n_eval = 1;
    return result;
  }

  CountedObjective f{problem, settings.newton};
  GaussianApprox approx;
  Eigen::VectorXd warm;
  Eigen::VectorXd x = start;
  double fx = problem.log_posterior(x, settings.newton, &approx);
  ++f.evals;
  warm = approx.mode;
  f.warm = &warm;

  const double fd_step = 1e-4;
  Eigen::VectorXd g = fd_gradient(f, x, fd_step);
  Eigen::MatrixXd b_inv = Eigen::MatrixXd::Identity(d, d);
  result.converged = false;

  while (f.evals < settings.max_hyper_evals) {
    Eigen::VectorXd dir = b_inv * g;
    if (dir.dot(g) <= 0) {
      b_inv.setIdentity();
      dir = g;
    }
    double t = 1.0;
    double fn = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd xn;
    bool improved = false;
    for (int ls = 0; ls < 12 && f.evals < settings.max_hyper_evals; ++ls) {
      xn = x + t * dir;
      fn = f(xn);
      if (fn > fx + 1e-4 * t * g.dot(dir)) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      // no ascent along the quasi-Newton direction: treat as converged
      result.converged = true;
      break;
    }
    const Eigen::VectorXd step = t * dir;
    if (f.evals >= settings.max_hyper_evals) {
      x = xn;
      fx = fn;
      break;
    }
    Eigen::VectorXd gn = fd_gradient(f, xn, fd_step);
    const Eigen::VectorXd yk = gn - g;  // gradient change (descent in -f)
    const double sy = -step.dot(yk);
    if (sy > 1e-12) {
      // BFGS inverse update for maximization (apply to -f)
      const Eigen::VectorXd by = b_inv * (-yk);
      const double ybby = (-yk).dot(by);
      b_inv += ((sy + ybby) / (sy * sy)) * (step * step.transpose()) -
               (by * step.transpose() + step * by.transpose()) / sy;
    }
    x = xn;
    fx = fn;
    g = gn;
    // refresh the warm start at the new incumbent
    try {
      fx = problem.log_posterior(x, settings.newton, &approx);
      ++f.evals;
      warm = approx.mode;
    } catch (const NumericError&) {
    }
    if (step.lpNorm<Eigen::Infinity>() < settings.step_tol) {
      result.converged = true;
      break;
    }
  }

  result.mode = x;
  result.log_post = fx;
  result.n_eval = f.evals;
  if (!result.converged)
    result.message = "hyperparameter optimization stopped after " +
                     std::to_string(f.evals) + " evaluations without meeting " +
                     "the step tolerance";
  return result;
}

namespace {

void fill_grid_point(const SubmodelProblem& problem,
                     const InferenceSettings& settings, HyperGridPoint& pt,
                     const Eigen::VectorXd& warm) {
  GaussianApprox approx;
  pt.log_post = problem.log_posterior(pt.u, settings.newton, &approx, &warm);
  pt.latent_mode = std::move(approx.mode);
  pt.latent_sd = approx.precision->marginal_variances().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

std::vector<HyperGridPoint> explore_hyper(const SubmodelProblem& problem,
                                          const Eigen::VectorXd& mode,
                                          const InferenceSettings& settings,
                                          std::vector<std::string>& warnings,
                                          Eigen::VectorXd* curvature_sd) {
  const int d = static_cast<int>(mode.size());
  std::vector<HyperGridPoint> grid;

  HyperGridPoint center;
  center.u = mode;
  fill_grid_point(problem, settings, center, Eigen::VectorXd::Zero(problem.layout.total()));
  const double lp0 = center.log_post;
  const Eigen::VectorXd warm = center.latent_mode;

  Eigen::MatrixXd transform;  // maps standardized z to internal u offsets
  if (d > 0) {
    CountedObjective f{problem, settings.newton, &warm};
    const Eigen::MatrixXd hess =
        fd_hessian(f, mode, lp0, settings.hessian_rel_step);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-hess);
    if (eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0) {
      transform = eig.eigenvectors() *
                  eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
      if (curvature_sd != nullptr) {
        const Eigen::MatrixXd cov = transform * transform.transpose();
        *curvature_sd = cov.diagonal().cwiseSqrt();
      }
    } else {
      warnings.push_back(
          "indefinite curvature at the hyperparameter mode; "
          "falling back to mode-only (empirical Bayes) integration");
      if (curvature_sd != nullptr) *curvature_sd = Eigen::VectorXd::Zero(d);
    }
  }

  if (d == 0 || transform.size() == 0) {
    center.weight = 1.0;
    grid.push_back(std::move(center));
    return grid;
  }

  // breadth-first walk of the integer lattice in standardized coordinates
  std::map<std::vector<int>, double> visited;  // lattice key -> log posterior
  std::vector<std::vector<int>> frontier;
  const std::vector<int> origin(d, 0);
  visited[origin] = lp0;
  frontier.push_back(origin);
  std::vector<HyperGridPoint> accepted;
  center.weight = 0.0;
  accepted.push_back(std::move(center));

  auto to_u = [&](const std::vector<int>& key) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = settings.grid_step * key[i];
    return Eigen::VectorXd(mode + transform * z);
  };

  while (!frontier.empty() &&
         static_cast<int>(accepted.size()) < settings.grid_max_points) {
    std::vector<std::vector<int>> candidates;
    for (const auto& key : frontier) {
      for (int i = 0; i < d; ++i) {
        for (int s : {-1, +1}) {
          std::vector<int> nb = key;
          nb[i] += s;
          if (visited.count(nb) == 0) {
            visited[nb] = std::numeric_limits<double>::quiet_NaN();
            candidates.push_back(std::move(nb));
          }
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    std::vector<HyperGridPoint> evals(candidates.size());
    parallel_for(static_cast<int>(candidates.size()), settings.threads,
                 [&](int i) {
                   evals[i].u = to_u(candidates[i]);
                   try {
                     fill_grid_point(problem, settings, evals[i], warm);
                   } catch (const NumericError&) {
                     evals[i].log_post = -std::numeric_limits<double>::infinity();
                   }
                 });
    frontier.clear();
    for (size_t i = 0; i < candidates.size(); ++i) {
      visited[candidates[i]] = evals[i].log_post;
      if (evals[i].log_post >= lp0 - settings.grid_cutoff) {
        frontier.push_back(candidates[i]);
        accepted.push_back(std::move(evals[i]));
        if (static_cast<int>(accepted.size()) >= settings.grid_max_points) {
          warnings.push_back("hyperparameter grid truncated at " +
                             std::to_string(settings.grid_max_points) +
                             " points");
          break;
        }
      }
    }
  }

  double lp_max = -std::numeric_limits<double>::infinity();
  for (const auto& pt : accepted) lp_max = std::max(lp_max, pt.log_post);
  double total = 0.0;
  for (auto& pt : accepted) {
    pt.weight = std::exp(pt.log_post - lp_max);
    total += pt.weight;
  }
  for (auto& pt : accepted) pt.weight /= total;
  return accepted;
}

std::vector<MarginalSummary> latent_marginals(
    const std::vector<HyperGridPoint>& grid) {
  if (grid.empty()) throw ValidationError("latent_marginals: empty grid");
  const int m = static_cast<int>(grid.front().latent_mode.size());
  std::vector<MarginalSummary> out(m);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0, second = 0.0;
    for (const auto& pt : grid) {
      mean += pt.weight * pt.latent_mode[i];
      second += pt.weight * (pt.latent_sd[i] * pt.latent_sd[i] +
                             pt.latent_mode[i] * pt.latent_mode[i]);
    }
    out[i].mean = mean;
    out[i].sd = std::sqrt(std::max(0.0, second - mean * mean));
  }
  return out;
}

WaicResult compute_waic(const Eigen::MatrixXd& lpd) {
  if (!lpd.allFinite())
    throw NumericError("compute_waic: non-finite log predictive density");
  const int s = static_cast<int>(lpd.rows());
  const int n = static_cast<int>(lpd.cols());
  if (s < 1 || n < 1) throw ValidationError("compute_waic: empty input");
  WaicResult out;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd col = lpd.col(i);
    const double mx = col.maxCoeff();
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    out.lppd += lse - std::log(static_cast<double>(s));
    if (s > 1) {
      const double mean = col.mean();
      out.p_eff += (col.array() - mean).square().sum() / (s - 1);
    }
  }
  out.waic = -2.0 * (out.lppd - out.p_eff);
  return out;
}

namespace {

std::vector<HyperSummary> summarize_hyper(const HyperSpace& hspace,
                                          const std::vector<HyperGridPoint>& grid,
                                          const Eigen::VectorXd& curvature_sd) {
  const auto names = hspace.names();
  const int d = static_cast<int>(names.size());
  std::vector<HyperSummary> out(d);
  for (int i = 0; i < d; ++i) {
    double mu = 0.0;
    for (const auto& pt : grid) mu += pt.weight * pt.u[i];
    double var = 0.0;
    for (const auto& pt : grid) var += pt.weight * (pt.u[i] - mu) * (pt.u[i] - mu);
    double sd = std::sqrt(var);
    if (grid.size() == 1 && curvature_sd.size() == d) sd = curvature_sd[i];

    const bool is_rho = names[i] == "rho";
    auto natural = [&](double u) { return is_rho ? std::tanh(u) : std::exp(u); };
    double mean_nat = 0.0, second_nat = 0.0;
    for (const auto& pt : grid) {
      const double v = natural(pt.u[i]);
      mean_nat += pt.weight * v;
      second_nat += pt.weight * v * v;
    }
    HyperSummary hs;
    hs.name = names[i];
    if (grid.size() == 1) {
      // delta-method spread around the single point
      const double v = natural(mu);
      const double dnat = is_rho ? 1.0 - v * v : v;
      hs.mean = v;
      hs.sd = std::abs(dnat) * sd;
    } else {
      hs.mean = mean_nat;
      hs.sd = std::sqrt(std::max(0.0, second_nat - mean_nat * mean_nat));
    }
    hs.lo95 = natural(mu - 1.959963984540054 * sd);
    hs.hi95 = natural(mu + 1.959963984540054 * sd);
    out[i] = hs;
  }
  return out;
}

// Seeded draws from the mixture of Gaussian approximations; the factor at
// each selected grid point is rebuilt from its stored mode.
void draw_mixture_samples(const SubmodelProblem& problem,
                          const InferenceSettings& settings,
                          const std::vector<HyperGridPoint>& grid,
                          std::uint64_t seed, SubmodelFit& fit_out) {
  const int s_total = settings.n_samples;
  const int m = problem.layout.total();
  Rng rng(seed);
  std::vector<int> counts(grid.size(), 0);
  for (int s = 0; s < s_total; ++s) {
    const double v = rng.uniform();
    double acc = 0.0;
    size_t pick = grid.size() - 1;
    for (size_t k = 0; k < grid.size(); ++k) {
      acc += grid[k].weight;
      if (v <= acc) {
        pick = k;
        break;
      }
    }
    counts[pick] += 1;
  }

  fit_out.latent_samples.resize(s_total, m);
  fit_out.sample_sigma_e.assign(s_total, problem.base.sigma_e);
  int row = 0;
  for (size_t k = 0; k < grid.size(); ++k) {
    if (counts[k] == 0) continue;
    const HyperParams h = problem.hspace.from_internal(grid[k].u, problem.base);
    SparsePrecision prior = problem.prior_precision(h);
    GaussianApprox approx = gaussian_approx(problem.lik, h.sigma_e, prior,
                                            problem.design, grid[k].latent_mode,
                                            settings.newton);
    for (int c = 0; c < counts[k]; ++c, ++row) {
      fit_out.latent_samples.row(row) =
          (approx.mode + approx.precision->sample(rng)).transpose();
      fit_out.sample_sigma_e[row] = h.sigma_e;
    }
  }
}

SubmodelFit solve_submodel(const SubmodelProblem& problem,
                           const InferenceSettings& settings,
                           const HyperParams& start, std::uint64_t seed) {
  SubmodelFit fit_out;
  fit_out.layout = problem.layout;
  fit_out.hspace = problem.hspace;

  const Eigen::VectorXd u0 = problem.hspace.to_internal(start);
  OptimResult opt = optimize_hyper(problem, u0, settings);
  fit_out.hyper_converged = opt.converged;
  if (!opt.message.empty()) fit_out.warnings.push_back(opt.message);

  Eigen::VectorXd curvature_sd;
  fit_out.grid = explore_hyper(problem, opt.mode, settings, fit_out.warnings,
                               &curvature_sd);
  fit_out.n_grid_points = static_cast<int>(fit_out.grid.size());
  fit_out.hyper = summarize_hyper(problem.hspace, fit_out.grid, curvature_sd);
  fit_out.latent = latent_marginals(fit_out.grid);

  draw_mixture_samples(problem, settings, fit_out.grid, seed, fit_out);

  // pointwise log predictive densities over the posterior draws
  const int s_total = settings.n_samples;
  const int n = problem.lik.size();
  Eigen::MatrixXd lpd(s_total, n);
  for (int s = 0; s < s_total; ++s) {
    const Eigen::VectorXd eta = problem.design * fit_out.latent_samples.row(s).transpose();
    for (int i = 0; i < n; ++i)
      lpd(s, i) = problem.lik.point_logdensity(i, eta[i], fit_out.sample_sigma_e[s]);
  }
  fit_out.waic = compute_waic(lpd);
  return fit_out;
}

}  // namespace

FitResult fit(const FitSettings& settings, const std::vector<HaulRecord>& records) {
  const auto t_start = std::chrono::steady_clock::now();
  FitResult result;
  result.spec = settings.spec;
  result.spec.normalize();
  result.seed = settings.seed;
  const HurdleModelSpec& spec = result.spec;

  if (records.empty()) throw ValidationError("fit: no records");
  double reference_lat = settings.reference_lat;
  if (reference_lat == 0.0) {
    double acc = 0.0;
    for (const auto& r : records) acc += r.lat;
    reference_lat = acc / static_cast<double>(records.size());
  }
  const DesignIndex index =
      build_design_index(records, spec.species, spec.gears, spec.year_min,
                         spec.year_max, reference_lat);

  // flag catalog cells with no data: their effects are prior-dominated
  std::vector<int> species_count(spec.n_species(), 0), gear_count(spec.n_gears(), 0);
  for (size_t i = 0; i < records.size(); ++i) {
    species_count[index.species[i]] += 1;
    gear_count[index.gear[i]] += 1;
  }
  for (int i = 0; i < spec.n_species(); ++i)
    if (species_count[i] == 0)
      result.warnings.push_back("species '" + spec.species[i] +
                                "' has no records; effect is prior-dominated");
  for (int j = 0; j < spec.n_gears(); ++j)
    if (gear_count[j] == 0)
      result.warnings.push_back("gear '" + spec.gears[j] +
                                "' has no records; effect is prior-dominated");

  const HurdleTables tables = split_hurdle(records);
  result.n_records = static_cast<int>(records.size());
  result.n_positive = static_cast<int>(tables.abundance.record_index.size());
  if (result.n_positive == 0)
    throw ValidationError("fit: no positive responses; abundance submodel is empty");

  result.data_hull = convex_hull_of(index.xy);
  const bool needs_mesh = spec.variant == FieldVariant::spatial ||
                          spec.variant == FieldVariant::spatiotemporal;
  std::shared_ptr<const FemMatrices> fem;
  SpMatRow projection;
  if (needs_mesh) {
    result.mesh = settings.mesh.has_value()
                      ? *settings.mesh
                      : build_mesh(index.xy, settings.mesh_inner_max_edge,
                                   settings.mesh_outer_extension,
                                   settings.mesh_outer_max_edge);
    fem = std::make_shared<FemMatrices>(fem_matrices(result.mesh));
    projection = projection_matrix(result.mesh, index.xy);
  }

  // detection submodel over all records
  {
    SubmodelProblem problem;
    problem.lik.family = ObsLikelihood::Family::bernoulli;
    problem.lik.y.resize(result.n_records);
    for (int i = 0; i < result.n_records; ++i)
      problem.lik.y[i] = tables.detection.z[i];
    problem.layout =
        LatentLayout::make(spec, spec.include_gear_effect, result.mesh.n_vertices());
    std::vector<int> rows(result.n_records);
    for (int i = 0; i < result.n_records; ++i) rows[i] = i;
    problem.design = build_design(index, rows, problem.layout, projection);
    problem.hspace =
        HyperSpace::for_submodel(false, spec.include_gear_effect, spec.variant);
    problem.priors = settings.priors;
    problem.fem = fem;
    problem.base = settings.start;
    problem.beta_prior_variance = settings.beta_prior_variance;
    result.detection = solve_submodel(problem, settings.inference, settings.start,
                                      Rng::derive(settings.seed, 1));
  }

  // abundance submodel over the positive records
  {
    SubmodelProblem problem;
    problem.lik.family = ObsLikelihood::Family::gaussian;
    problem.lik.y.resize(result.n_positive);
    for (int i = 0; i < result.n_positive; ++i)
      problem.lik.y[i] = tables.abundance.log_value[i];
    problem.layout =
        LatentLayout::make(spec, spec.include_gear_effect, result.mesh.n_vertices());
    problem.design = build_design(index, tables.abundance.record_index,
                                  problem.layout, projection);
    problem.hspace =
        HyperSpace::for_submodel(true, spec.include_gear_effect, spec.variant);
    problem.priors = settings.priors;
    problem.fem = fem;
    problem.base = settings.start;
    problem.beta_prior_variance = settings.beta_prior_variance;
    result.abundance = solve_submodel(problem, settings.inference, settings.start,
                                      Rng::derive(settings.seed, 2));
  }

  result.waic_total = result.detection.waic.waic + result.abundance.waic.waic;
  for (const auto& w : result.detection.warnings)
    result.warnings.push_back("detection: " + w);
  for (const auto& w : result.abundance.warnings)
    result.warnings.push_back("abundance: " + w);
  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace surveyfuse
