#ifndef MSPEM_IPW_HPP
#define MSPEM_IPW_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mspem/glm.hpp"

namespace mspem {

/// One opportunity row of the selection dataset (played and rested games).
/// `consecutive_games` is deliberately absent: it is determined by the
/// play/rest decision itself.
struct SelectionRow {
    std::string player_id;
    int played = 0;
    double age = 0.0;
    double bmi = 0.0;
    double recent_load_7d = 0.0;
    double rest_days = 0.0;
    double b2b = 0.0;
};

enum class WeightScheme { stabilized, overlap };

/// Weights for the played rows that feed the outcome model.
struct WeightSet {
    WeightScheme scheme = WeightScheme::stabilized;
    double pi_bar = 0.0;
    std::vector<double> pi_hat;     // per played row
    std::vector<double> raw;        // before truncation
    std::vector<double> truncated;  // after truncation (what the fit uses)
    double trunc_low = 0.0;         // applied clamp bounds
    double trunc_high = 0.0;
};

struct Truncation {
    double low_pct = 1.0;
    double high_pct = 99.0;
};

struct BalanceRow {
    std::string covariate;
    double mean_played = 0.0;
    double mean_rested = 0.0;
    std::optional<double> smd_before;  // absent when the pooled SD is zero
    std::optional<double> smd_after;
};

struct BalanceReport {
    std::vector<BalanceRow> rows;
    double ess = 0.0;      // (sum w)^2 / sum w^2 over played rows
    double ess_pct = 0.0;  // 100 * ess / n_played
};

struct SelectionFit {
    FitResult fit;
    std::vector<double> pi_hat;  // per selection row, in input order
    double pi_bar = 0.0;         // marginal play rate
};

/// Unpenalized logistic regression of played on (1, age, bmi, recent_load_7d,
/// rest_days, b2b). Requires both classes present.
SelectionFit fit_selection(std::span<const SelectionRow> rows);

/// Stabilized weights pi_bar / pi_hat for played rows, clamped to the given
/// empirical percentiles of the raw weights. Throws a positivity error
/// (naming the row) on pi_hat <= 0 or >= 1.
WeightSet stabilized_weights(std::span<const double> pi_hat_played, double pi_bar,
                             Truncation trunc = {});

/// Overlap weights: 1 - pi_hat on played rows, pi_hat on rested rows. The
/// returned WeightSet carries the played-row weights (no truncation needed;
/// overlap weights are bounded in (0,1)).
WeightSet overlap_weights(std::span<const double> pi_hat, std::span<const int> played);

/// Effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

/// Balance table over the selection covariates. Before-weighting SMDs are
/// unweighted; after-weighting SMDs reweight the played group with `weights`
/// and the rested group with (1-pi_bar)/(1-pi_hat), truncated at the same
/// percentiles.
BalanceReport balance_report(std::span<const SelectionRow> rows,
                             std::span<const double> pi_hat, const WeightSet& weights,
                             Truncation trunc = {});

}  // namespace mspem

#endif
