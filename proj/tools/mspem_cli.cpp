#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mspem/cluster.hpp"
#include "mspem/cox.hpp"
#include "mspem/io.hpp"
#include "mspem/ipw.hpp"
#include "mspem/mspem.hpp"
#include "mspem/simlab.hpp"
#include "mspem/stats.hpp"

using json = nlohmann::json;
using namespace mspem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct Flags {
    std::string config_path;
    std::string input;
    std::string roster;
    std::string tiers;
    std::string out;
    uint64_t seed = 20240601;
    std::string alpha = "cv";
    std::string weights = "none";
    std::string truncate = "1,99";
    std::string scenario;
    std::string k_range = "3..7";
    std::string design = "pamm_wce";
    bool emit_panel = false;
};

std::string default_out_dir() {
    const char* env = std::getenv("MSPEM_OUT_DIR");
    return env != nullptr ? env : "out";
}

/// Options absent from the command line fall back to the config file.
void merge_config(const CLI::App& cmd, Flags& flags) {
    if (flags.config_path.empty()) return;
    std::ifstream in(flags.config_path);
    if (!in) throw std::invalid_argument("cannot open config file " + flags.config_path);
    json cfg = json::parse(in, nullptr, true, true);
    auto take = [&](const char* flag, const char* key, auto& slot) {
        using T = std::decay_t<decltype(slot)>;
        const CLI::Option* opt = cmd.get_option_no_throw(flag);
        const bool given = opt != nullptr && opt->count() > 0;
        if (!given && cfg.contains(key)) slot = cfg.at(key).get<T>();
    };
    take("--input", "input", flags.input);
    take("--roster", "roster", flags.roster);
    take("--tiers", "tiers", flags.tiers);
    take("--out", "out", flags.out);
    take("--seed", "seed", flags.seed);
    take("--alpha", "alpha", flags.alpha);
    take("--weights", "weights", flags.weights);
    take("--truncate", "truncate", flags.truncate);
    take("--scenario", "scenario", flags.scenario);
    take("--k-range", "k_range", flags.k_range);
    take("--design", "design", flags.design);
}

std::string fmt(double v, int precision = 6) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

Truncation parse_truncation(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw std::invalid_argument("--truncate expects P1,P99 (e.g. 1,99)");
    Truncation t;
    t.low_pct = std::stod(text.substr(0, comma));
    t.high_pct = std::stod(text.substr(comma + 1));
    if (t.low_pct < 0 || t.high_pct > 100 || t.low_pct >= t.high_pct)
        throw std::invalid_argument("--truncate percentiles must satisfy 0 <= P1 < P99 <= 100");
    return t;
}

std::vector<int> parse_k_range(const std::string& text) {
    const auto dots = text.find("..");
    std::vector<int> out;
    if (dots == std::string::npos) {
        out.push_back(std::stoi(text));
        return out;
    }
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (lo < 2 || hi < lo) throw std::invalid_argument("--k-range expects LO..HI with 2 <= LO <= HI");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
}

void apply_alpha(const std::string& text, MspemConfig& config) {
    if (text == "cv") {
        config.alpha_mode = AlphaMode::cv;
        return;
    }
    if (text.rfind("fixed:", 0) == 0) {
        config.alpha_mode = AlphaMode::fixed;
        config.fixed_alpha = std::stod(text.substr(6));
        if (config.fixed_alpha <= 0.0)
            throw std::invalid_argument("--alpha fixed:X requires X > 0");
        return;
    }
    throw std::invalid_argument("--alpha expects 'cv' or 'fixed:X'");
}

std::string config_summary(const std::string& command, const Flags& flags) {
    std::ostringstream os;
    os << "command=" << command << " seed=" << flags.seed << " alpha=" << flags.alpha
       << " weights=" << flags.weights << " truncate=" << flags.truncate;
    if (!flags.scenario.empty()) os << " scenario=" << flags.scenario;
    if (!flags.input.empty()) os << " input=" << flags.input;
    if (!flags.design.empty()) os << " design=" << flags.design;
    return os.str();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct ScenarioFile {
    std::vector<sim::ScenarioSpec> cells;
    std::vector<sim::Estimator> estimators;
};

sim::ScenarioSpec spec_from_json(const json& j, sim::ScenarioSpec base) {
    auto take = [&](const char* key, auto& slot) {
        using T = std::decay_t<decltype(slot)>;
        if (j.contains(key)) slot = j.at(key).get<T>();
    };
    take("name", base.name);
    take("players", base.players);
    take("opportunities", base.opportunities);
    take("rho", base.rho);
    take("sigma_u", base.sigma_u);
    take("alpha_u", base.alpha_u);
    take("gamma_u", base.gamma_u);
    take("lags", base.lags);
    take("wce_bases", base.wce_bases);
    take("recurrent", base.recurrent);
    take("injury_penalty", base.injury_penalty);
    take("penalty_decay", base.penalty_decay);
    take("replications", base.replications);
    take("seed", base.seed);
    if (j.contains("weight_scale")) base.w_true.scale = j.at("weight_scale").get<double>();
    if (j.contains("weight_decay")) base.w_true.decay = j.at("weight_decay").get<double>();
    return base;
}

ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file " + path);
    json j = json::parse(in, nullptr, true, true);

    ScenarioFile out;
    const sim::ScenarioSpec base = spec_from_json(j, sim::ScenarioSpec{});
    if (j.contains("cells")) {
        for (const auto& cell : j.at("cells")) out.cells.push_back(spec_from_json(cell, base));
    } else {
        out.cells.push_back(base);
    }
    if (j.contains("estimators")) {
        for (const auto& name : j.at("estimators"))
            out.estimators.push_back(sim::estimator_from_string(name.get<std::string>()));
    } else {
        out.estimators = {sim::Estimator::naive, sim::Estimator::ipw_observed};
    }
    for (auto& cell : out.cells) cell.validate();
    return out;
}

int cmd_simulate(const Flags& flags) {
    if (flags.scenario.empty())
        throw std::invalid_argument("simulate requires --scenario PATH (JSON)");
    ScenarioFile scenario = load_scenario(flags.scenario);
    for (auto& cell : scenario.cells)
        if (cell.seed == sim::ScenarioSpec{}.seed) cell.seed = flags.seed;

    const OutputWriter writer(flags.out, flags.seed, config_summary("simulate", flags));
    const sim::BiasReport report = sim::run_scenarios(scenario.cells, scenario.estimators);

    std::vector<std::string> bias_rows;
    std::vector<std::string> wf_rows;
    for (const auto& cell : report.cells) {
        const sim::ScenarioSpec* spec = nullptr;
        for (const auto& s : scenario.cells)
            if (s.name == cell.scenario) spec = &s;
        std::ostringstream row;
        row << cell.scenario << "," << spec->alpha_u << "," << spec->gamma_u << ","
            << to_string(cell.estimator) << "," << fmt(cell.mean_bias) << ","
            << fmt(cell.sd_bias) << "," << fmt(100.0 * cell.mean_event_rate, 4) << ","
            << fmt(100.0 * cell.mean_event_rate_played, 4) << "," << fmt(cell.mean_age_coef)
            << "," << fmt(cell.reversal_fraction) << "," << cell.replications;
        bias_rows.push_back(row.str());
        for (size_t l = 0; l < cell.mean_w_hat.size(); ++l) {
            std::ostringstream wf;
            wf << cell.scenario << "," << to_string(cell.estimator) << "," << (l + 1) << ","
               << fmt(cell.mean_w_hat[l]) << "," << fmt(spec->w_true(static_cast<int>(l) + 1));
            wf_rows.push_back(wf.str());
        }
    }
    writer.write_csv("bias_table.csv",
                     "scenario,alpha_u,gamma_u,estimator,mean_bias,sd_bias,event_rate_pct,"
                     "event_rate_played_pct,mean_age_coef,reversal_fraction,replications",
                     bias_rows);
    writer.write_csv("weight_functions.csv", "scenario,estimator,lag,mean_w_hat,w_true", wf_rows);

    std::vector<std::string> seed_rows;
    for (size_t r = 0; r < report.replication_seeds.size(); ++r)
        seed_rows.push_back(std::to_string(r + 1) + "," +
                            std::to_string(report.replication_seeds[r]));
    writer.write_csv("replication_seeds.csv", "replication,stream_seed", seed_rows);

    if (flags.emit_panel) {
        const sim::SimPanel panel =
            sim::simulate_panel(scenario.cells.front(), report.replication_seeds.front());
        const auto rows = sim::panel_to_game_rows(panel);
        std::vector<std::string> played_rows, roster_rows;
        const std::string header =
            "player_id,game_date,game_index,minutes,rest_days,recent_load_7d,consecutive_games,"
            "home,age,bmi,event,played";
        for (const auto& r : rows) {
            std::ostringstream os;
            os << r.player_id << "," << r.game_date << "," << r.game_index << ","
               << fmt(r.minutes, 4) << "," << r.rest_days << "," << fmt(r.recent_load_7d, 4)
               << "," << r.consecutive_games << "," << r.home << "," << fmt(r.age, 4) << ","
               << fmt(r.bmi, 4) << "," << r.event << "," << r.played;
            roster_rows.push_back(os.str());
            if (r.played != 0) played_rows.push_back(os.str());
        }
        writer.write_csv("panel_games.csv", header, played_rows);
        writer.write_csv("panel_roster.csv", header, roster_rows);
    }
    std::cout << "simulate: wrote bias_table.csv (" << bias_rows.size() << " cells) to "
              << writer.dir() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct LoadedData {
    std::vector<GameRow> games;             // played rows
    std::vector<GameRow> roster;            // played + missed rows
    std::vector<CountingRecord> records;
};

LoadedData load_games(const Flags& flags, bool need_roster) {
    if (flags.input.empty()) throw std::invalid_argument("missing --input games CSV");
    LoadedData data;
    data.games = read_game_rows(flags.input);
    if (!flags.roster.empty()) {
        data.roster = read_game_rows(flags.roster);
    } else if (need_roster) {
        throw std::invalid_argument("--weights stabilized/overlap requires --roster CSV");
    }
    data.records = build_counting_records(data.games);
    if (!flags.tiers.empty()) {
        const auto tiers = read_tier_csv(flags.tiers);
        for (auto& rec : data.records) {
            const auto it = tiers.find(rec.player_id);
            if (it == tiers.end()) continue;
            if (it->second == "HighUsageStar") rec.tier = Tier::high_usage_star;
            else if (it->second == "StartingRole") rec.tier = Tier::starting_role;
            else if (it->second == "Rotation") rec.tier = Tier::rotation;
            else rec.tier = Tier::reserve;
        }
    }
    return data;
}

std::vector<SelectionRow> selection_rows(const std::vector<GameRow>& roster) {
    std::vector<SelectionRow> rows;
    rows.reserve(roster.size());
    for (const auto& g : roster) {
        SelectionRow r;
        r.player_id = g.player_id;
        r.played = g.played;
        r.age = g.age;
        r.bmi = g.bmi;
        r.recent_load_7d = g.recent_load_7d;
        r.rest_days = g.rest_days;
        r.b2b = g.rest_days <= 1 ? 1.0 : 0.0;
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Per-played-game stabilized or overlap weights; returns the weight set and
/// the records' weights in record order.
struct FitWeights {
    WeightSet set;
    std::vector<double> per_record;
    std::optional<BalanceReport> balance;
};

FitWeights external_weights(const Flags& flags, const LoadedData& data,
                            const std::string& path) {
    const CsvTable table = read_csv(path);
    const int id_col = table.column("player_id");
    const int game_col = table.column("game_index");
    const int pi_col = table.column("pi_hat");
    if (id_col < 0 || game_col < 0 || pi_col < 0)
        throw std::invalid_argument(path + ": external propensities need player_id,game_index,pi_hat");
    std::map<std::pair<std::string, int>, double> pi;
    double pi_sum = 0.0;
    for (const auto& row : table.rows) {
        const double p = std::stod(row[static_cast<size_t>(pi_col)]);
        pi[{row[static_cast<size_t>(id_col)], std::stoi(row[static_cast<size_t>(game_col)])}] = p;
        pi_sum += p;
    }
    double pi_bar;
    if (!data.roster.empty()) {
        double played = 0.0;
        for (const auto& g : data.roster) played += g.played != 0 ? 1.0 : 0.0;
        pi_bar = played / static_cast<double>(data.roster.size());
    } else {
        pi_bar = pi_sum / static_cast<double>(table.rows.size());
    }

    std::vector<double> pi_played;
    pi_played.reserve(data.games.size());
    for (const auto& g : data.games) {
        const auto it = pi.find({g.player_id, g.game_index});
        if (it == pi.end())
            throw std::invalid_argument("external propensities missing row for " + g.player_id +
                                        " game " + std::to_string(g.game_index));
        pi_played.push_back(it->second);
    }
    FitWeights out;
    out.set = stabilized_weights(pi_played, pi_bar, parse_truncation(flags.truncate));
    out.per_record = out.set.truncated;
    return out;
}

FitWeights model_weights(const Flags& flags, const LoadedData& data) {
    const auto rows = selection_rows(data.roster);
    const SelectionFit sel = fit_selection(rows);
    const Truncation trunc = parse_truncation(flags.truncate);

    std::vector<double> pi_played;
    std::vector<int> played_flags;
    for (size_t i = 0; i < rows.size(); ++i) played_flags.push_back(rows[i].played);
    for (size_t i = 0; i < rows.size(); ++i)
        if (rows[i].played != 0) pi_played.push_back(sel.pi_hat[i]);
    if (pi_played.size() != data.games.size())
        throw std::invalid_argument("roster played rows do not match the games file");

    FitWeights out;
    if (flags.weights == "overlap") {
        out.set = overlap_weights(sel.pi_hat, played_flags);
    } else {
        out.set = stabilized_weights(pi_played, sel.pi_bar, trunc);
    }
    out.per_record = out.set.truncated;
    out.balance = balance_report(rows, sel.pi_hat, out.set, trunc);
    return out;
}

void write_fit_bundle(const OutputWriter& writer, const std::string& stem, const MspemFit& fit) {
    json j;
    j["design"] = fit.design.config.kind == DesignKind::pamm ? "pamm" : "pamm_wce";
    j["alpha"] = fit.alpha;
    j["alpha_from_cv"] = fit.alpha_from_cv;
    if (!fit.cv_grid.empty()) {
        j["cv_grid"] = fit.cv_grid;
        j["cv_mean_deviance"] = fit.cv_deviance;
    }
    j["aic"] = fit.fit.aic;
    j["aic_convention"] = "-2*unpenalized_loglik + 2*edf";
    j["edf"] = fit.fit.edf;
    j["loglik"] = fit.fit.loglik;
    j["penalized_loglik"] = fit.fit.penalized_loglik;
    j["converged"] = fit.fit.converged;
    j["iterations"] = fit.fit.iterations;
    j["n_ped_rows"] = fit.design.ped.size();
    j["cut_points"] = fit.design.cuts.bounds;
    json coeffs = json::object();
    for (size_t k = 0; k < fit.design.column_names.size(); ++k)
        coeffs[fit.design.column_names[k]] = fit.fit.coefficients[static_cast<Eigen::Index>(k)];
    j["coefficients"] = coeffs;
    writer.write_json(stem + ".json", j.dump(2) + "\n");
}

void write_surface(const OutputWriter& writer, const std::string& name, const MspemFit& fit) {
    const double t_hi = fit.design.cuts.bounds.back();
    std::vector<double> t_grid, r_grid;
    for (int i = 0; i <= 24; ++i) t_grid.push_back(t_hi * (0.02 + 0.96 * i / 24.0));
    for (int r = 0; r <= 8; ++r) r_grid.push_back(1.0 + r);
    if (fit.design.config.kind == DesignKind::pamm && fit.design.f1_basis) {
        const double r_lo = fit.design.f1_basis->domain_min();
        const double r_hi = fit.design.f1_basis->domain_max();
        r_grid.clear();
        for (int r = 0; r <= 8; ++r) r_grid.push_back(r_lo + (r_hi - r_lo) * r / 8.0);
    }
    const HazardSurface surf = hazard_surface(fit, t_grid, r_grid);
    std::vector<std::string> rows;
    for (size_t i = 0; i < surf.t_grid.size(); ++i)
        for (size_t j = 0; j < surf.rest_grid.size(); ++j) {
            std::ostringstream os;
            os << fmt(surf.t_grid[i]) << "," << fmt(surf.rest_grid[j]) << ","
               << fmt(surf.log_hazard(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            rows.push_back(os.str());
        }
    writer.write_csv(name, "t,rest_days,log_hazard", rows);
}

int cmd_fit(const Flags& flags) {
    const bool weighted = flags.weights != "none";
    const bool model_based = flags.weights == "stabilized" || flags.weights == "overlap";
    const bool external = flags.weights.rfind("external:", 0) == 0;
    if (weighted && !model_based && !external)
        throw std::invalid_argument("--weights expects none|stabilized|overlap|external:PATH");

    const LoadedData data = load_games(flags, model_based);

    MspemConfig config;
    config.kind = flags.design == "pamm" ? DesignKind::pamm : DesignKind::pamm_wce;
    apply_alpha(flags.alpha, config);

    const OutputWriter writer(flags.out, flags.seed, config_summary("fit", flags));

    const MspemFit naive = fit_mspem(data.records, std::nullopt, config);
    write_fit_bundle(writer, "fit_naive", naive);
    write_surface(writer, "surface_naive.csv", naive);

    if (!weighted) {
        if (config.kind == DesignKind::pamm_wce) {
            std::vector<std::string> rows;
            for (int l = 1; l <= config.lags; ++l) {
                std::ostringstream os;
                os << l << "," << fmt((*naive.weight_function)(l)) << ",";
                rows.push_back(os.str());
            }
            writer.write_csv("weight_function.csv", "lag,naive_w,corrected_w", rows);
        }
        std::cout << "fit: naive bundle written to " << writer.dir() << "\n";
        return 0;
    }

    const FitWeights fw = external ? external_weights(flags, data, flags.weights.substr(9))
                                   : model_weights(flags, data);
    const MspemFit corrected = fit_mspem(data.records, fw.per_record, config);
    write_fit_bundle(writer, "fit_mspem", corrected);
    write_surface(writer, "surface_mspem.csv", corrected);

    if (config.kind == DesignKind::pamm_wce) {
        const ComparisonResult cmp = compare(naive, corrected);
        std::vector<std::string> rows;
        for (size_t l = 0; l < cmp.lags.size(); ++l) {
            std::ostringstream os;
            os << cmp.lags[l] << "," << fmt(cmp.w_naive[l]) << "," << fmt(cmp.w_corrected[l]);
            rows.push_back(os.str());
        }
        writer.write_csv("weight_function.csv", "lag,naive_w,corrected_w", rows);

        const double n_played = static_cast<double>(data.games.size());
        const double ess = effective_sample_size(fw.per_record);
        std::ostringstream naive_row, corr_row;
        naive_row << "naive," << fmt(cmp.w1_naive) << ",," << fmt(n_played) << ",100";
        const std::string method = flags.weights == "overlap" ? "overlap"
                                   : external                 ? "external"
                                                              : "ipw_logistic";
        corr_row << method << "," << fmt(cmp.w1_corrected) << ","
                 << fmt(cmp.attenuation_pct.value_or(std::nan("")), 4) << "," << fmt(ess) << ","
                 << fmt(100.0 * ess / n_played, 4);
        writer.write_csv("comparison.csv", "method,w1,attenuation_pct,ess,ess_pct",
                         {naive_row.str(), corr_row.str()});
    }

    if (fw.balance) {
        std::vector<std::string> rows;
        for (const auto& b : fw.balance->rows) {
            std::ostringstream os;
            os << b.covariate << "," << fmt(b.mean_played) << "," << fmt(b.mean_rested) << ","
               << (b.smd_before ? fmt(*b.smd_before) : "") << ","
               << (b.smd_after ? fmt(*b.smd_after) : "");
            rows.push_back(os.str());
        }
        std::ostringstream ess_row;
        ess_row << "__ess__," << fmt(fw.balance->ess) << "," << fmt(fw.balance->ess_pct) << ",,";
        rows.push_back(ess_row.str());
        writer.write_csv("balance.csv", "covariate,mean_played,mean_rested,smd_before,smd_after",
                         rows);
    }
    std::cout << "fit: naive + corrected bundles written to " << writer.dir() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

int cmd_diagnose(const Flags& flags) {
    const LoadedData data = load_games(flags, false);
    const OutputWriter writer(flags.out, flags.seed, config_summary("diagnose", flags));

    const bool have_tiers = !flags.tiers.empty();
    const CoxFit cox = cox_fit(data.records, default_cox_covariates(have_tiers));
    std::vector<std::string> cox_rows;
    for (size_t j = 0; j < cox.covariates.size(); ++j) {
        std::ostringstream os;
        os << cox.covariates[j] << "," << fmt(cox.hazard_ratio[static_cast<Eigen::Index>(j)])
           << "," << fmt(cox.ci_low[static_cast<Eigen::Index>(j)]) << ","
           << fmt(cox.ci_high[static_cast<Eigen::Index>(j)]) << ","
           << fmt(cox.p_value[static_cast<Eigen::Index>(j)]);
        cox_rows.push_back(os.str());
    }
    writer.write_csv("cox_table.csv", "covariate,hr,ci_low,ci_high,p_value", cox_rows);

    const SchoenfeldResult sch = schoenfeld_test(cox, data.records);
    std::vector<std::string> sch_rows;
    for (size_t j = 0; j < sch.covariates.size(); ++j) {
        std::ostringstream os;
        os << sch.covariates[j] << "," << (sch.chi2[j] ? fmt(*sch.chi2[j]) : "") << ","
           << (sch.p_value[j] ? fmt(*sch.p_value[j]) : "");
        sch_rows.push_back(os.str());
    }
    writer.write_csv("schoenfeld.csv", "covariate,chi2,p_value", sch_rows);

    std::vector<std::string> ev_rows;
    for (size_t j = 0; j < cox.covariates.size(); ++j) {
        const double hr = cox.hazard_ratio[static_cast<Eigen::Index>(j)];
        const double lo = cox.ci_low[static_cast<Eigen::Index>(j)];
        const double hi = cox.ci_high[static_cast<Eigen::Index>(j)];
        std::ostringstream os;
        os << cox.covariates[j] << "," << fmt(hr) << ",";
        try {
            const EvalueReport ev = evalue(hr, hr < 1.0 ? hi : lo);
            os << fmt(ev.evalue_point, 4) << "," << fmt(ev.evalue_ci, 4);
        } catch (const std::invalid_argument&) {
            os << ",";  // degenerate covariate: no finite interval
        }
        ev_rows.push_back(os.str());
    }
    writer.write_csv("evalues.csv", "covariate,hr,evalue_point,evalue_ci", ev_rows);

    // Calibration of the naive PED fit at the requested alpha.
    MspemConfig config;
    config.kind = DesignKind::pamm_wce;
    apply_alpha(flags.alpha, config);
    const MspemFit fit = fit_mspem(data.records, std::nullopt, config);
    std::vector<std::string> cal_rows;
    const auto deciles = calibration_deciles(fit, data.records);
    for (size_t d = 0; d < deciles.size(); ++d) {
        std::ostringstream os;
        os << (d + 1) << "," << fmt(deciles[d].mean_predicted) << ","
           << fmt(deciles[d].observed_rate) << "," << deciles[d].count;
        cal_rows.push_back(os.str());
    }
    writer.write_csv("calibration.csv", "decile,mean_predicted,observed_rate,count", cal_rows);

    std::vector<std::string> km_rows;
    for (const auto& [gap, curve] : km_by_gap_type(data.records)) {
        for (size_t k = 0; k < curve.times.size(); ++k) {
            std::ostringstream os;
            os << to_string(gap) << "," << fmt(curve.times[k]) << "," << fmt(curve.survival[k])
               << "," << curve.at_risk[k] << "," << curve.events[k];
            km_rows.push_back(os.str());
        }
    }
    writer.write_csv("km_curves.csv", "gap_type,time,survival,at_risk,events", km_rows);

    std::cout << "diagnose: cox/schoenfeld/evalues/calibration/km bundles written to "
              << writer.dir() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

int cmd_cluster(const Flags& flags) {
    if (flags.input.empty()) throw std::invalid_argument("cluster requires --input features CSV");
    const PlayerFeatures features = read_player_features(flags.input);
    if (features.player_ids.empty()) throw std::invalid_argument("feature file has no rows");
    const std::vector<int> k_range = parse_k_range(flags.k_range);

    const OutputWriter writer(flags.out, flags.seed, config_summary("cluster", flags));
    const TierAssignment tiers = cluster_players(features, 0.85, k_range, flags.seed);

    std::vector<std::string> tier_rows;
    for (size_t i = 0; i < tiers.player_ids.size(); ++i)
        tier_rows.push_back(tiers.player_ids[i] + "," + tiers.tier_names[i]);
    writer.write_csv("tiers.csv", "player_id,tier", tier_rows);

    std::vector<std::string> sil_rows;
    for (const auto& [k, s] : tiers.silhouette_by_k) {
        std::ostringstream os;
        os << k << "," << fmt(s) << "," << (k == tiers.chosen_k ? 1 : 0);
        sil_rows.push_back(os.str());
    }
    writer.write_csv("silhouette.csv", "k,silhouette,chosen", sil_rows);

    json meta;
    meta["chosen_k"] = tiers.chosen_k;
    meta["pca_components"] = tiers.pca_components;
    writer.write_json("cluster_meta.json", meta.dump(2) + "\n");
    std::cout << "cluster: k=" << tiers.chosen_k << ", tiers written to " << writer.dir() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mspem: marginal structural piecewise-exponential workload-injury toolkit"};
    app.require_subcommand(1);

    Flags flags;
    flags.out = default_out_dir();

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
        cmd->add_option("--out", flags.out, "output directory");
        cmd->add_option("--seed", flags.seed, "root RNG seed");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run Monte Carlo scenario sweeps");
    add_common(simulate);
    simulate->add_option("--scenario", flags.scenario, "scenario JSON path");
    simulate->add_flag("--emit-panel", flags.emit_panel,
                       "also write one panel as games/roster CSVs");

    CLI::App* fit = app.add_subcommand("fit", "fit naive and IPW-corrected PED models");
    add_common(fit);
    fit->add_option("--input", flags.input, "counting-process games CSV");
    fit->add_option("--roster", flags.roster, "roster CSV with played=0 rows");
    fit->add_option("--tiers", flags.tiers, "player tier CSV (optional)");
    fit->add_option("--alpha", flags.alpha, "cv or fixed:X");
    fit->add_option("--weights", flags.weights, "none|stabilized|overlap|external:PATH");
    fit->add_option("--truncate", flags.truncate, "weight truncation percentiles P1,P99");
    fit->add_option("--design", flags.design, "pamm or pamm_wce");

    CLI::App* diagnose = app.add_subcommand("diagnose", "Cox table, PH tests, E-values, KM");
    add_common(diagnose);
    diagnose->add_option("--input", flags.input, "counting-process games CSV");
    diagnose->add_option("--tiers", flags.tiers, "player tier CSV (optional)");
    diagnose->add_option("--alpha", flags.alpha, "cv or fixed:X for the calibration fit");

    CLI::App* cluster = app.add_subcommand("cluster", "workload tier assignment");
    add_common(cluster);
    cluster->add_option("--input", flags.input, "per-player feature CSV");
    cluster->add_option("--k-range", flags.k_range, "k range LO..HI");

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = app.get_subcommands().front();
    try {
        merge_config(*active, flags);
        if (active == simulate) return cmd_simulate(flags);
        if (active == fit) return cmd_fit(flags);
        if (active == diagnose) return cmd_diagnose(flags);
        return cmd_cluster(flags);
    } catch (const std::invalid_argument& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::out_of_range& err) {
        std::cerr << "validation error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error& err) {
        const std::string what = err.what();
        // Schema and file problems are validation failures; solver problems
        // are numerical failures.
        const bool numerical = what.find("converge") != std::string::npos ||
                               what.find("singular") != std::string::npos ||
                               what.find("separat") != std::string::npos ||
                               what.find("positivity") != std::string::npos ||
                               what.find("monotone") != std::string::npos;
        std::cerr << (numerical ? "numerical error: " : "validation error: ") << what << "\n";
        return numerical ? kExitNumerical : kExitValidation;
    }
}
