#ifndef MSPEM_GLM_HPP
#define MSPEM_GLM_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mspem/basis.hpp"

namespace mspem {

enum class Family { poisson_log, binomial_logit };

/// One penalized GLM problem. `penalty` may be empty (dim 0) for an
/// unpenalized fit; otherwise its dimension must match the number of
/// columns of `design`. Offsets apply to the Poisson family only.
struct GlmSpec {
    Family family = Family::poisson_log;
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    Eigen::VectorXd offset;   // empty -> all zero
    Eigen::VectorXd weights;  // empty -> all one
    PenaltyBlock penalty;     // dim 0 -> unpenalized
    double alpha = 0.0;
};

struct FitResult {
    Eigen::VectorXd coefficients;
    bool converged = false;
    int iterations = 0;
    double penalized_loglik = 0.0;
    double loglik = 0.0;  // unpenalized, at the solution
    double edf = 0.0;
    double aic = 0.0;  // -2*loglik + 2*edf (unpenalized log-likelihood)
    Eigen::MatrixXd covariance;  // inverse penalized Fisher information
    std::vector<double> trace;   // penalized log-likelihood per iteration
};

/// IRLS fit of a weighted, offset-aware, ridge-penalized GLM. Each step
/// solves (X'WX + alpha*S) beta = X'Wz with step-halving whenever the
/// penalized objective would decrease. Converges when the relative change
/// in the penalized log-likelihood drops below 1e-9 (at most 100 steps).
/// Throws std::runtime_error on non-convergence (message carries the trace),
/// a singular system, or detected separation in the logit family.
FitResult fit_glm(const GlmSpec& spec);

/// Effective degrees of freedom: trace of (X'WX + alpha*S)^-1 X'WX at the
/// fitted coefficients.
double edf(const GlmSpec& spec, const FitResult& fit);

/// Linear predictor (offset included) for the spec's design at `beta`.
Eigen::VectorXd linear_predictor(const GlmSpec& spec, const Eigen::VectorXd& beta);

/// Mean response mu for the spec's family at `beta`.
Eigen::VectorXd fitted_mean(const GlmSpec& spec, const Eigen::VectorXd& beta);

/// Weighted unpenalized log-likelihood of the spec at `beta`.
double glm_loglik(const GlmSpec& spec, const Eigen::VectorXd& beta);

/// Penalized score vector X'(w*(y - mu)) - alpha*S*beta.
Eigen::VectorXd glm_score(const GlmSpec& spec, const Eigen::VectorXd& beta);

struct CvResult {
    double alpha = 0.0;
    std::vector<double> grid;
    std::vector<double> mean_deviance;  // per grid value, mean held-out deviance per row
};

/// Grouped K-fold cross-validation over an alpha grid. Groups (players) are
/// kept intact: distinct group keys are sorted and dealt round-robin to
/// folds, so the partition is deterministic. The chosen alpha minimizes the
/// mean held-out Poisson/binomial deviance; near-ties (relative 1e-9) resolve
/// to the largest alpha. Throws if there are fewer groups than folds.
CvResult grouped_cv_alpha(const GlmSpec& spec, const std::vector<std::string>& groups, int folds,
                          const std::vector<double>& grid);

/// Default CV grid {1e-3, ..., 1e3}, log-spaced by decades.
std::vector<double> default_alpha_grid();

}  // namespace mspem

#endif
