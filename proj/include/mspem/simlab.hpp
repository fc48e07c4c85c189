#ifndef MSPEM_SIMLAB_HPP
#define MSPEM_SIMLAB_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mspem/rng.hpp"
#include "mspem/wce.hpp"

namespace mspem::sim {

/// Exponentially decaying true lag-weight function w(l) = scale * exp(-decay * l).
struct TrueWeight {
    double scale = 0.005;
    double decay = 0.2;

    double operator()(int lag) const;
};

/// One simulation cell: the healthy-worker data-generating process with a
/// latent AR(1) fitness process driving participation, minutes volume and
/// injury hazard.
struct ScenarioSpec {
    std::string name = "cell";
    int players = 500;
    int opportunities = 80;
    double rho = 0.95;     // AR(1) persistence of latent fitness
    double sigma_u = 0.3;  // innovation standard deviation
    double alpha_u = 2.0;  // fitness coefficient in the participation logit
    double gamma_u = 3.0;  // fitness coefficient in the minutes mean
    TrueWeight w_true;
    int lags = 10;
    int wce_bases = 5;
    bool recurrent = false;
    double injury_penalty = 1.0;
    double penalty_decay = 0.9;
    int replications = 50;
    uint64_t seed = 20240601;

    void validate() const;
};

/// One player-opportunity cell of a simulated panel.
struct SimObs {
    double u = 0.0;        // latent fitness after any recurrent penalty
    int played = 0;
    double minutes = 0.0;  // 0 when rested
    double wce_true = 0.0;
    int injury = 0;
    double pi_true = 0.0;  // participation probability used for the draw
};

struct SimPanel {
    int players = 0;
    int opportunities = 0;
    std::vector<double> ages;  // per player
    std::vector<SimObs> obs;   // row-major (player, opportunity)

    const SimObs& at(int player, int t) const {
        return obs[static_cast<size_t>(player) * static_cast<size_t>(opportunities) +
                   static_cast<size_t>(t)];
    }
    SimObs& at(int player, int t) {
        return obs[static_cast<size_t>(player) * static_cast<size_t>(opportunities) +
                   static_cast<size_t>(t)];
    }

    int total_events() const;
    int total_played() const;
    /// Events per game opportunity (players x opportunities).
    double event_rate() const;
    /// Events per played game.
    double event_rate_played() const;
};

/// Generates one panel. Latent fitness starts at its stationary distribution
/// N(0, sigma_u^2 / (1 - rho^2)); ages are uniform integers on {20..36}.
/// Participation: logit^-1(1.5 + alpha_u*U - 0.03*age). Minutes when played:
/// N(25 + gamma_u*U, 5^2) clipped to [10, 40]. Injury when played:
/// logit^-1(-3.5 - U + 0.03*age + WCE) with the true WCE accumulated over the
/// last `lags` opportunities (rested opportunities contribute 0 minutes).
/// With spec.recurrent, each injury at opportunity s subtracts
/// injury_penalty * penalty_decay^(t-s) from U at every later opportunity,
/// applied during generation so selection and hazard see the penalized U.
///
/// The random stream consumes a fixed number of draws per cell regardless of
/// outcomes, so panels generated from the same seed stay aligned when events
/// are overridden via `forced_injuries` (a testing hook: those (player, t)
/// cells are forced to played = injury = 1).
SimPanel simulate_panel(const ScenarioSpec& spec, uint64_t seed,
                        std::span<const std::pair<int, int>> forced_injuries = {});

enum class Estimator { naive, ipw_observed, ipw_misspecified, ipw_oracle };

std::string to_string(Estimator est);
Estimator estimator_from_string(const std::string& name);

/// One fitted replication for one estimator.
struct EstimateResult {
    std::vector<double> w_hat;  // at integer lags 1..L
    double bias = 0.0;          // mean over lags of w_hat - w_true
    double age_coef = 0.0;
    double mean_weight = 1.0;   // mean stabilized weight on fitted rows
    double ess_pct = 100.0;
};

/// Fits the unit-exposure Poisson GLM with the B-spline WCE on played rows
/// (lag features over the player's preceding played games), optionally
/// IPW-weighted per the estimator. The selection model for ipw_observed uses
/// (age, recent 7-opportunity load); ipw_misspecified uses age only;
/// ipw_oracle weights come from the true participation probabilities.
EstimateResult fit_estimator(const SimPanel& panel, const ScenarioSpec& spec, Estimator est);

struct BiasCell {
    std::string scenario;
    Estimator estimator = Estimator::naive;
    std::vector<double> mean_w_hat;    // per lag
    double mean_bias = 0.0;
    double sd_bias = 0.0;              // across replications
    double mean_age_coef = 0.0;
    double reversal_fraction = 0.0;    // fraction of replications with w_hat(1) < 0
    double mean_event_rate = 0.0;      // events per opportunity
    double mean_event_rate_played = 0.0;
    int replications = 0;
};

struct BiasReport {
    std::vector<BiasCell> cells;
    std::vector<uint64_t> replication_seeds;

    const BiasCell& cell(const std::string& scenario, Estimator est) const;
};

/// Monte Carlo sweep: every scenario x estimator combination, aggregated
/// over spec.replications independent panels (per-replication seeds come
/// from Rng::substream of the scenario seed).
BiasReport run_scenarios(std::span<const ScenarioSpec> specs,
                         std::span<const Estimator> estimators);

/// The four selection-strength cells (None, Weak, Moderate, Strong) sharing
/// the base spec's remaining parameters.
std::vector<ScenarioSpec> selection_strength_scenarios(const ScenarioSpec& base);

/// Flattens a panel into game-log rows matching the CSV ingestion schema
/// (one row per opportunity; played=0 rows carry zero minutes). Dates, home
/// indicators and BMI are synthesized deterministically so the rows satisfy
/// the full schema.
std::vector<GameRow> panel_to_game_rows(const SimPanel& panel);

}  // namespace mspem::sim

#endif
