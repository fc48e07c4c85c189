#include "mspem/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "mspem/ipw.hpp"
#include "mspem/stats.hpp"

namespace mspem::sim {

double TrueWeight::operator()(int lag) const { return scale * std::exp(-decay * lag); }

void ScenarioSpec::validate() const {
    if (players < 1 || opportunities < 1)
        throw std::invalid_argument("ScenarioSpec: players and opportunities must be positive");
    if (rho < 0.0 || rho >= 1.0) throw std::invalid_argument("ScenarioSpec: rho must lie in [0,1)");
    if (sigma_u <= 0.0) throw std::invalid_argument("ScenarioSpec: sigma_u must be positive");
    if (replications < 1) throw std::invalid_argument("ScenarioSpec: replications must be >= 1");
    if (lags < 1 || wce_bases < 4)
        throw std::invalid_argument("ScenarioSpec: need lags >= 1 and wce_bases >= 4");
}

int SimPanel::total_events() const {
    int n = 0;
    for (const auto& o : obs) n += o.injury;
    return n;
}

int SimPanel::total_played() const {
    int n = 0;
    for (const auto& o : obs) n += o.played;
    return n;
}

double SimPanel::event_rate() const {
    return static_cast<double>(total_events()) / static_cast<double>(obs.size());
}

double SimPanel::event_rate_played() const {
    const int played = total_played();
    return played == 0 ? 0.0 : static_cast<double>(total_events()) / played;
}

SimPanel simulate_panel(const ScenarioSpec& spec, uint64_t seed,
                        std::span<const std::pair<int, int>> forced_injuries) {
    spec.validate();
    std::set<std::pair<int, int>> forced(forced_injuries.begin(), forced_injuries.end());

    SimPanel panel;
    panel.players = spec.players;
    panel.opportunities = spec.opportunities;
    panel.ages.resize(static_cast<size_t>(spec.players));
    panel.obs.resize(static_cast<size_t>(spec.players) * static_cast<size_t>(spec.opportunities));

    Rng rng(seed);
    const double stationary_sd = spec.sigma_u / std::sqrt(1.0 - spec.rho * spec.rho);

    for (int i = 0; i < spec.players; ++i) {
        const double age = rng.uniform_int(20, 36);
        panel.ages[static_cast<size_t>(i)] = age;
        double u = rng.normal(0.0, stationary_sd);
        std::vector<int> injury_times;
        for (int t = 0; t < spec.opportunities; ++t) {
            if (t > 0) u = spec.rho * u + rng.normal(0.0, spec.sigma_u);
            // Fixed three draws per cell keeps seeded streams aligned across
            // counterfactual panels.
            const double u_play = rng.uniform();
            const double z_minutes = rng.normal();
            const double u_injury = rng.uniform();

            double u_eff = u;
            if (spec.recurrent) {
                for (int s : injury_times)
                    u_eff -= spec.injury_penalty * std::pow(spec.penalty_decay, t - s);
            }

            SimObs& cell = panel.at(i, t);
            cell.u = u_eff;
            cell.pi_true = logistic(1.5 + spec.alpha_u * u_eff - 0.03 * age);
            const bool force = forced.count({i, t}) > 0;
            cell.played = (u_play < cell.pi_true || force) ? 1 : 0;
            if (cell.played != 0) {
                cell.minutes = std::clamp(25.0 + spec.gamma_u * u_eff + 5.0 * z_minutes, 10.0, 40.0);
                double wce = 0.0;
                for (int l = 1; l <= spec.lags && t - l >= 0; ++l)
                    wce += spec.w_true(l) * panel.at(i, t - l).minutes;
                cell.wce_true = wce;
                const double p_injury = logistic(-3.5 - 1.0 * u_eff + 0.03 * age + wce);
                cell.injury = (u_injury < p_injury || force) ? 1 : 0;
                if (cell.injury != 0 && spec.recurrent) injury_times.push_back(t);
            }
        }
    }
    return panel;
}

std::string to_string(Estimator est) {
    switch (est) {
        case Estimator::naive: return "naive";
        case Estimator::ipw_observed: return "ipw_observed";
        case Estimator::ipw_misspecified: return "ipw_misspecified";
        case Estimator::ipw_oracle: return "ipw_oracle";
    }
    return "?";
}

Estimator estimator_from_string(const std::string& name) {
    if (name == "naive") return Estimator::naive;
    if (name == "ipw_observed") return Estimator::ipw_observed;
    if (name == "ipw_misspecified") return Estimator::ipw_misspecified;
    if (name == "ipw_oracle") return Estimator::ipw_oracle;
    throw std::invalid_argument("unknown estimator: " + name);
}

namespace {

/// Sum of minutes over the prior 7 opportunities (rested ones contribute 0).
double recent7(const SimPanel& panel, int player, int t) {
    double s = 0.0;
    for (int l = 1; l <= 7 && t - l >= 0; ++l) s += panel.at(player, t - l).minutes;
    return s;
}

struct OutcomeRows {
    Eigen::MatrixXd design;  // [1, age, z_1..z_K]
    Eigen::VectorXd response;
    std::vector<std::pair<int, int>> cells;  // (player, t) per row
};

/// Played rows with WCE features over the player's preceding played games
/// (lag 1 = most recent played game), zero-padded at career start.
OutcomeRows build_outcome_rows(const SimPanel& panel, const ScenarioSpec& spec,
                               const Eigen::MatrixXd& basis_matrix) {
    const int K = static_cast<int>(basis_matrix.cols());
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < panel.players; ++i)
        for (int t = 0; t < panel.opportunities; ++t)
            if (panel.at(i, t).played != 0) cells.emplace_back(i, t);

    OutcomeRows out;
    out.cells = cells;
    out.design.resize(static_cast<Eigen::Index>(cells.size()), 2 + K);
    out.response.resize(static_cast<Eigen::Index>(cells.size()));

    Eigen::Index r = 0;
    std::vector<double> played_minutes;
    int current_player = -1;
    for (const auto& [i, t] : cells) {
        if (i != current_player) {
            current_player = i;
            played_minutes.clear();
        }
        Eigen::VectorXd hist = Eigen::VectorXd::Zero(spec.lags);
        for (int l = 1; l <= spec.lags && l <= static_cast<int>(played_minutes.size()); ++l)
            hist[l - 1] = played_minutes[played_minutes.size() - static_cast<size_t>(l)];
        out.design(r, 0) = 1.0;
        out.design(r, 1) = panel.ages[static_cast<size_t>(i)];
        out.design.row(r).segment(2, K) = (basis_matrix.transpose() * hist).transpose();
        out.response[r] = panel.at(i, t).injury;
        played_minutes.push_back(panel.at(i, t).minutes);
        ++r;
    }
    return out;
}

/// Stabilized, truncated weights for the played rows under one estimator.
std::vector<double> estimator_weights(const SimPanel& panel, Estimator est,
                                      const std::vector<std::pair<int, int>>& played_cells) {
    const size_t n_all =
        static_cast<size_t>(panel.players) * static_cast<size_t>(panel.opportunities);
    Eigen::VectorXd response(static_cast<Eigen::Index>(n_all));
    int n_played = 0;

    std::vector<double> pi_all(n_all);
    if (est == Estimator::ipw_oracle) {
        size_t r = 0;
        for (int i = 0; i < panel.players; ++i)
            for (int t = 0; t < panel.opportunities; ++t, ++r) {
                pi_all[r] = panel.at(i, t).pi_true;
                n_played += panel.at(i, t).played;
            }
    } else {
        const int p = est == Estimator::ipw_misspecified ? 2 : 3;
        GlmSpec sel;
        sel.family = Family::binomial_logit;
        sel.design.resize(static_cast<Eigen::Index>(n_all), p);
        sel.response.resize(static_cast<Eigen::Index>(n_all));
        Eigen::Index r = 0;
        for (int i = 0; i < panel.players; ++i)
            for (int t = 0; t < panel.opportunities; ++t, ++r) {
                sel.design(r, 0) = 1.0;
                sel.design(r, 1) = panel.ages[static_cast<size_t>(i)];
                if (p == 3) sel.design(r, 2) = recent7(panel, i, t);
                sel.response[r] = panel.at(i, t).played;
                n_played += panel.at(i, t).played;
            }
        const FitResult fit = fit_glm(sel);
        const Eigen::VectorXd mu = fitted_mean(sel, fit.coefficients);
        for (size_t k = 0; k < n_all; ++k) pi_all[k] = mu[static_cast<Eigen::Index>(k)];
    }
    response.setZero();

    const double pi_bar = static_cast<double>(n_played) / static_cast<double>(n_all);
    std::vector<double> pi_played;
    pi_played.reserve(played_cells.size());
    for (const auto& [i, t] : played_cells)
        pi_played.push_back(pi_all[static_cast<size_t>(i) * static_cast<size_t>(panel.opportunities) +
                                   static_cast<size_t>(t)]);
    const WeightSet ws = stabilized_weights(pi_played, pi_bar, Truncation{1.0, 99.0});
    return ws.truncated;
}

}  // namespace

EstimateResult fit_estimator(const SimPanel& panel, const ScenarioSpec& spec, Estimator est) {
    const SplineBasis basis = make_lag_basis(spec.wce_bases, spec.lags);
    const Eigen::MatrixXd bmat = lag_basis_matrix(basis, spec.lags);
    OutcomeRows rows = build_outcome_rows(panel, spec, bmat);

    GlmSpec glm;
    glm.family = Family::poisson_log;
    glm.design = std::move(rows.design);
    glm.response = std::move(rows.response);

    EstimateResult result;
    if (est != Estimator::naive) {
        const std::vector<double> w = estimator_weights(panel, est, rows.cells);
        glm.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
        result.mean_weight = mean(w);
        result.ess_pct = 100.0 * effective_sample_size(w) / static_cast<double>(w.size());
    }

    const FitResult fit = fit_glm(glm);
    result.age_coef = fit.coefficients[1];
    const Eigen::VectorXd gamma = fit.coefficients.segment(2, spec.wce_bases);
    result.w_hat.resize(static_cast<size_t>(spec.lags));
    double bias_sum = 0.0;
    for (int l = 1; l <= spec.lags; ++l) {
        const double w = basis.row(static_cast<double>(l)).dot(gamma);
        result.w_hat[static_cast<size_t>(l - 1)] = w;
        bias_sum += w - spec.w_true(l);
    }
    result.bias = bias_sum / spec.lags;
    return result;
}

const BiasCell& BiasReport::cell(const std::string& scenario, Estimator est) const {
    for (const auto& c : cells)
        if (c.scenario == scenario && c.estimator == est) return c;
    throw std::out_of_range("BiasReport: no cell for scenario " + scenario);
}

BiasReport run_scenarios(std::span<const ScenarioSpec> specs,
                         std::span<const Estimator> estimators) {
    if (specs.empty() || estimators.empty())
        throw std::invalid_argument("run_scenarios: need at least one scenario and estimator");
    BiasReport report;
    for (const auto& spec : specs) {
        spec.validate();
        std::vector<BiasCell> cells(estimators.size());
        std::vector<std::vector<double>> biases(estimators.size());
        for (size_t e = 0; e < estimators.size(); ++e) {
            cells[e].scenario = spec.name;
            cells[e].estimator = estimators[e];
            cells[e].mean_w_hat.assign(static_cast<size_t>(spec.lags), 0.0);
            cells[e].replications = spec.replications;
        }
        for (int rep = 0; rep < spec.replications; ++rep) {
            const uint64_t rep_seed =
                spec.seed + 0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(rep) + 1);
            if (&spec == &specs.front()) report.replication_seeds.push_back(rep_seed);
            const SimPanel panel = simulate_panel(spec, rep_seed);
            const double rate = panel.event_rate();
            const double rate_played = panel.event_rate_played();
            for (size_t e = 0; e < estimators.size(); ++e) {
                const EstimateResult est = fit_estimator(panel, spec, estimators[e]);
                for (int l = 0; l < spec.lags; ++l)
                    cells[e].mean_w_hat[static_cast<size_t>(l)] += est.w_hat[static_cast<size_t>(l)];
                biases[e].push_back(est.bias);
                cells[e].mean_age_coef += est.age_coef;
                cells[e].mean_event_rate += rate;
                cells[e].mean_event_rate_played += rate_played;
                if (est.w_hat[0] < 0.0) cells[e].reversal_fraction += 1.0;
            }
        }
        const double r = spec.replications;
        for (size_t e = 0; e < estimators.size(); ++e) {
            for (auto& v : cells[e].mean_w_hat) v /= r;
            cells[e].mean_bias = mean(biases[e]);
            cells[e].sd_bias = std::sqrt(variance(biases[e]));
            cells[e].mean_age_coef /= r;
            cells[e].mean_event_rate /= r;
            cells[e].mean_event_rate_played /= r;
            cells[e].reversal_fraction /= r;
            report.cells.push_back(std::move(cells[e]));
        }
    }
    return report;
}

std::vector<GameRow> panel_to_game_rows(const SimPanel& panel) {
    std::vector<GameRow> rows;
    rows.reserve(panel.obs.size());
    for (int i = 0; i < panel.players; ++i) {
        int last_played = -1;
        int streak = 0;
        char id[16];
        std::snprintf(id, sizeof(id), "sim%04d", i);
        for (int t = 0; t < panel.opportunities; ++t) {
            const SimObs& o = panel.at(i, t);
            GameRow row;
            row.player_id = id;
            char date[24];
            std::snprintf(date, sizeof(date), "2024-%02d-%02d", 10 + t / 28, 1 + t % 28);
            row.game_date = date;
            row.game_index = t + 1;
            row.minutes = o.minutes;
            row.rest_days = last_played < 0 ? 3 : t - last_played;
            row.recent_load_7d = recent7(panel, i, t);
            streak = o.played != 0 && last_played == t - 1 ? streak + 1 : (o.played != 0 ? 1 : 0);
            row.consecutive_games = streak;
            row.home = t % 2;
            row.age = panel.ages[static_cast<size_t>(i)];
            row.bmi = 22.0 + 0.25 * (i % 25);
            row.event = o.injury;
            row.played = o.played;
            rows.push_back(std::move(row));
            if (o.played != 0) last_played = t;
        }
    }
    return rows;
}

std::vector<ScenarioSpec> selection_strength_scenarios(const ScenarioSpec& base) {
    const std::vector<std::tuple<std::string, double, double>> grid = {
        {"None", 0.0, 0.0}, {"Weak", 0.5, 1.0}, {"Moderate", 1.0, 2.0}, {"Strong", 2.0, 3.0}};
    std::vector<ScenarioSpec> out;
    for (const auto& [name, a, g] : grid) {
        ScenarioSpec spec = base;
        spec.name = name;
        spec.alpha_u = a;
        spec.gamma_u = g;
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace mspem::sim
