#ifndef MSPEM_MSPEM_HPP
#define MSPEM_MSPEM_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mspem/glm.hpp"
#include "mspem/survdata.hpp"
#include "mspem/wce.hpp"

namespace mspem {

enum class DesignKind {
    pamm,      // baseline smooth + rest-days smooth + tensor interaction + linear terms
    pamm_wce,  // baseline smooth + WCE features + linear terms
};

enum class AlphaMode { cv, fixed };

struct MspemConfig {
    DesignKind kind = DesignKind::pamm_wce;
    int j_intervals = 20;
    int baseline_bases = 8;
    int rest_bases = 6;
    int tensor_marginal_bases = 4;  // per margin (4 x 4 = 16 columns)
    int lags = 10;
    int wce_bases = 5;
    std::vector<std::string> linear_covariates = {"age", "bmi", "home"};
    AlphaMode alpha_mode = AlphaMode::cv;
    double fixed_alpha = 0.1;
    int cv_folds = 5;
    std::vector<double> cv_grid;  // empty -> default grid
};

/// Assembled PED design with its bases, penalty layout and per-column names.
struct ModelDesign {
    MspemConfig config;
    CutPoints cuts;
    std::vector<PedRow> ped;
    std::vector<int> record_of_row;   // CountingRecord index per PED row
    std::vector<std::string> groups;  // player_id per PED row
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    Eigen::VectorXd offset;
    PenaltyBlock penalty;
    std::vector<std::string> column_names;

    // Column block layout: [intercept][f0][f1][f2][wce][linear]
    int f0_offset = -1;
    int f1_offset = -1;
    int f2_offset = -1;
    int wce_offset = -1;
    int linear_offset = -1;

    std::optional<SplineBasis> f0_basis;
    std::optional<SplineBasis> f1_basis;
    std::optional<SplineBasis> f2_t_basis;
    std::optional<SplineBasis> f2_r_basis;
    std::optional<SplineBasis> lag_basis;

    /// Reference covariate values used by hazard_surface: continuous columns
    /// at sample medians, indicator columns at the mode.
    Eigen::VectorXd reference_linear;
    Eigen::VectorXd reference_wce;
};

/// Builds the PED rows, chooses quantile knots from the observed data, and
/// assembles the penalized design. Per-player lag features cover the
/// player's preceding played games. Throws when records are empty or carry
/// no events (cut points need event-time quantiles).
ModelDesign build_design(std::span<const CountingRecord> records, const MspemConfig& config);

struct MspemFit {
    ModelDesign design;
    FitResult fit;
    double alpha = 0.0;
    bool alpha_from_cv = false;
    std::vector<double> cv_grid;
    std::vector<double> cv_deviance;
    std::optional<WeightFunction> weight_function;  // pamm_wce designs only
};

/// Fits the penalized Poisson PED model, optionally IPW-weighted. Weights
/// are per counting record (one per played game), broadcast unchanged to
/// that record's PED rows; pass std::nullopt for the naive fit. With unit
/// weights the objective reduces exactly to the unweighted fit.
MspemFit fit_mspem(std::span<const CountingRecord> records,
                   const std::optional<std::vector<double>>& record_weights,
                   const MspemConfig& config);

struct HazardSurface {
    std::vector<double> t_grid;
    std::vector<double> rest_grid;
    Eigen::MatrixXd log_hazard;  // t x rest
    Eigen::VectorXd reference_linear;
    Eigen::VectorXd reference_wce;
};

/// Predicted log-hazard eta over a cumulative-minutes x rest-days lattice
/// with all remaining covariates held at their reference values. Throws on
/// grid points outside the training domain.
HazardSurface hazard_surface(const MspemFit& fit, std::span<const double> t_grid,
                             std::span<const double> rest_grid);

/// Linear predictor (without offset) for each PED row of the fitted design.
Eigen::VectorXd predict_eta(const MspemFit& fit);

struct ComparisonResult {
    double w1_naive = 0.0;
    double w1_corrected = 0.0;
    std::optional<double> attenuation_pct;  // absent when w1_naive == 0
    std::vector<double> lags;
    std::vector<double> w_naive;
    std::vector<double> w_corrected;
    double aic_naive = 0.0;
    double aic_corrected = 0.0;
    double edf_naive = 0.0;
    double edf_corrected = 0.0;
};

/// Side-by-side weight functions and the lag-1 attenuation
/// 100 * (1 - |w_corr(1)| / |w_naive(1)|).
ComparisonResult compare(const MspemFit& naive, const MspemFit& corrected);

struct CalibrationRow {
    double mean_predicted = 0.0;
    double observed_rate = 0.0;
    int count = 0;
};

/// Per-game event probabilities 1 - exp(-sum_j mu_ij) split into prediction
/// deciles (equal-count bins in prediction order).
std::vector<CalibrationRow> calibration_deciles(const MspemFit& fit,
                                                std::span<const CountingRecord> records);

}  // namespace mspem

#endif
