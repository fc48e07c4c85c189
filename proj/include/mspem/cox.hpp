#ifndef MSPEM_COX_HPP
#define MSPEM_COX_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mspem/survdata.hpp"

namespace mspem {

/// Default covariate list mirroring the baseline hazard-ratio table.
std::vector<std::string> default_cox_covariates(bool include_tier);

struct CoxFit {
    std::vector<std::string> covariates;
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd hazard_ratio;  // exp(beta)
    Eigen::VectorXd ci_low;        // exp(beta - 1.96 se)
    Eigen::VectorXd ci_high;
    Eigen::VectorXd p_value;
    double log_partial_lik = 0.0;
    int iterations = 0;
    int n_events = 0;
};

/// Andersen-Gill Cox fit on (t_start, t_stop] risk sets with Breslow tie
/// handling; Newton-Raphson with step-halving. Throws when there are no
/// events or the partial likelihood is monotone (separation).
CoxFit cox_fit(std::span<const CountingRecord> records,
               const std::vector<std::string>& covariates);

struct SchoenfeldResult {
    std::vector<std::string> covariates;
    std::vector<std::optional<double>> chi2;     // absent for degenerate covariates
    std::vector<std::optional<double>> p_value;  // chi-square(1)
};

/// Grambsch-Therneau proportional-hazards score test: scaled Schoenfeld
/// residuals against event time (identity transform), chi-square(1) per
/// covariate. Requires at least 3 events.
SchoenfeldResult schoenfeld_test(const CoxFit& fit, std::span<const CountingRecord> records);

struct EvalueReport {
    double hr = 1.0;
    double evalue_point = 1.0;
    double evalue_ci = 1.0;
};

/// E-value for a hazard ratio and one CI bound: E = h + sqrt(h(h-1)) with
/// h = max(HR, 1/HR); the CI E-value uses the bound nearer 1 and returns 1
/// when the interval crosses 1. Throws on non-positive inputs.
EvalueReport evalue(double hr, double ci_bound);

}  // namespace mspem

#endif
