// Acceptance harness: runs every release criterion end to end and prints one
// PASS/FAIL line per criterion. Returns nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mspem/basis.hpp"
#include "mspem/cluster.hpp"
#include "mspem/cox.hpp"
#include "mspem/glm.hpp"
#include "mspem/io.hpp"
#include "mspem/ipw.hpp"
#include "mspem/mspem.hpp"
#include "mspem/rng.hpp"
#include "mspem/simlab.hpp"
#include "mspem/survdata.hpp"
#include "mspem/wce.hpp"

using namespace mspem;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    std::string name;
    bool pass = true;
    std::vector<std::string> details;

    void expect(bool ok, const std::string& detail) {
        if (!ok) pass = false;
        details.push_back(std::string(ok ? "    ok   " : "    MISS ") + detail);
    }
};

std::vector<Criterion> g_criteria;

Criterion& criterion(const std::string& name) {
    g_criteria.push_back(Criterion{name});
    return g_criteria.back();
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(5);
    os << v;
    return os.str();
}

bool within(double value, double target, double tol) {
    return std::abs(value - target) <= tol;
}

struct Paths {
    std::string cli;
    std::string data_dir;
    std::string scenario_dir;
    std::string tmp_dir;
};

int run_cli(const Paths& paths, const std::string& args) {
    const std::string cmd = paths.cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::vector<std::string> file_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::string csv_header(const std::string& path) {
    for (const auto& line : file_lines(path))
        if (!line.empty() && line.front() != '#') return line;
    return "";
}

// ---------------------------------------------------------------------------
// Criteria 1-4 share one Monte Carlo sweep over the selection-strength grid.
// ---------------------------------------------------------------------------

void simulation_criteria(const sim::BiasReport& report) {
    const std::vector<std::string> cells = {"None", "Weak", "Moderate", "Strong"};
    const std::vector<double> naive_target = {-0.0008, -0.0040, -0.0055, -0.0057};
    const std::vector<double> ipw_target = {-0.0008, -0.0039, -0.0051, -0.0047};
    const std::vector<double> rate_target = {6.1, 5.5, 4.9, 3.9};

    Criterion& c1 = criterion("1 selection-strength bias table (50 replications)");
    for (size_t i = 0; i < cells.size(); ++i) {
        const auto& naive = report.cell(cells[i], sim::Estimator::naive);
        const auto& ipw = report.cell(cells[i], sim::Estimator::ipw_observed);
        c1.expect(within(naive.mean_bias, naive_target[i], 0.0015),
                  cells[i] + " naive bias " + num(naive.mean_bias) + " vs " +
                      num(naive_target[i]) + " +-0.0015");
        c1.expect(within(ipw.mean_bias, ipw_target[i], 0.0015),
                  cells[i] + " ipw bias " + num(ipw.mean_bias) + " vs " + num(ipw_target[i]) +
                      " +-0.0015");
        const double rate_pct = 100.0 * naive.mean_event_rate;
        c1.expect(within(rate_pct, rate_target[i], 1.0),
                  cells[i] + " event rate " + num(rate_pct) + "% vs " + num(rate_target[i]) +
                      "% +-1.0 (events per opportunity)");
    }

    Criterion& c2 = criterion("2 sign reversal under strong selection");
    const auto& strong = report.cell("Strong", sim::Estimator::naive);
    c2.expect(strong.mean_w_hat[0] >= -0.035 && strong.mean_w_hat[0] <= -0.012,
              "naive mean w(1) " + num(strong.mean_w_hat[0]) + " in [-0.035, -0.012]");
    c2.expect(strong.reversal_fraction >= 0.95,
              "reversal fraction " + num(strong.reversal_fraction) + " >= 0.95");
    const double w_true_1 = sim::TrueWeight{}(1);
    c2.expect(w_true_1 > 0.0, "true w(1) " + num(w_true_1) + " > 0");

    Criterion& c3 = criterion("3 no-selection recovery");
    const auto& none = report.cell("None", sim::Estimator::naive);
    c3.expect(within(none.mean_w_hat[0], 0.0041, 0.0015),
              "naive mean w(1) " + num(none.mean_w_hat[0]) + " vs 0.0041 +-0.0015");
    c3.expect(std::abs(none.mean_bias) <= 0.0015,
              "mean bias " + num(none.mean_bias) + " within +-0.0015");
    c3.expect(within(none.mean_age_coef, 0.030, 0.010),
              "age coefficient " + num(none.mean_age_coef) + " vs 0.030 +-0.010");

    Criterion& c4 = criterion("4 propensity misspecification stress test");
    const auto& mis = report.cell("Strong", sim::Estimator::ipw_misspecified);
    const auto& obs = report.cell("Strong", sim::Estimator::ipw_observed);
    c4.expect(std::abs(mis.mean_bias - strong.mean_bias) <= 0.0005,
              "age-only propensity bias " + num(mis.mean_bias) + " within 0.0005 of naive " +
                  num(strong.mean_bias));
    const double improvement =
        (std::abs(strong.mean_bias) - std::abs(obs.mean_bias)) / std::abs(strong.mean_bias);
    c4.expect(improvement >= 0.10,
              "correct propensity improves bias by " + num(100.0 * improvement) + "% (>= 10%)");
}

void recurrent_criterion() {
    sim::ScenarioSpec spec;
    spec.name = "Recurrent";
    spec.recurrent = true;
    const std::vector<sim::ScenarioSpec> cells{spec};
    const std::vector<sim::Estimator> ests{sim::Estimator::naive, sim::Estimator::ipw_observed};
    const sim::BiasReport report = sim::run_scenarios(cells, ests);

    Criterion& c5 = criterion("5 recurrent-event variant");
    const auto& naive = report.cell("Recurrent", sim::Estimator::naive);
    const auto& ipw = report.cell("Recurrent", sim::Estimator::ipw_observed);
    c5.expect(within(naive.mean_bias, -0.0054, 0.0015),
              "naive bias " + num(naive.mean_bias) + " vs -0.0054 +-0.0015");
    c5.expect(within(ipw.mean_bias, -0.0042, 0.0015),
              "ipw bias " + num(ipw.mean_bias) + " vs -0.0042 +-0.0015");
}

void evalue_criterion() {
    Criterion& c6 = criterion("6 e-value reference table");
    const auto t0 = std::chrono::steady_clock::now();
    const double e1 = evalue(0.993, 0.994).evalue_point;
    const double e2 = evalue(0.831, 0.919).evalue_point;
    const double e3 = evalue(0.832, 0.908).evalue_point;
    const double e4 = evalue(1.031, 1.139).evalue_point;
    const auto t1 = std::chrono::steady_clock::now();
    auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
    c6.expect(round2(e1) == 1.09, "0.993 -> " + num(round2(e1)) + " (1.09)");
    c6.expect(round2(e2) == 1.70, "0.831 -> " + num(round2(e2)) + " (1.70)");
    c6.expect(round2(e3) == 1.69, "0.832 -> " + num(round2(e3)) + " (1.69)");
    c6.expect(round2(e4) == 1.21, "1.031 -> " + num(round2(e4)) + " (1.21)");
    const double us =
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count() / 1000.0;
    c6.expect(us < 1000.0, "runtime " + num(us) + "us < 1ms");
}

// ---------------------------------------------------------------------------
// Criterion 7: GLM oracle equivalence.
// ---------------------------------------------------------------------------

void glm_criterion() {
    Criterion& c7 = criterion("7 GLM oracle equivalence");

    // Intercept-only closed form.
    {
        GlmSpec spec;
        spec.family = Family::poisson_log;
        spec.design = Eigen::MatrixXd::Ones(5, 1);
        spec.response.resize(5);
        spec.response << 2, 0, 1, 1, 0;
        spec.offset.resize(5);
        spec.offset << std::log(1.5), std::log(2.0), std::log(1.0), std::log(3.0), std::log(0.5);
        const FitResult fit = fit_glm(spec);
        const double expected = std::log(4.0 / 8.0);
        c7.expect(std::abs(fit.coefficients[0] - expected) < 1e-10,
                  "intercept closed form |" + num(fit.coefficients[0]) + " - " + num(expected) +
                      "| < 1e-10");
    }

    // Dense 2-coefficient grid oracle.
    {
        Rng rng(4242);
        const int n = 20;
        GlmSpec spec;
        spec.family = Family::poisson_log;
        spec.design.resize(n, 2);
        spec.response.resize(n);
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform(-1.0, 1.0);
            spec.design(i, 0) = 1.0;
            spec.design(i, 1) = x;
            const double mu = std::exp(-0.3 + 0.9 * x);
            double u = rng.uniform();
            int y = 0;
            double pmf = std::exp(-mu), cdf = pmf;
            while (u > cdf && y < 40) {
                ++y;
                pmf *= mu / y;
                cdf += pmf;
            }
            spec.response[i] = y;
        }
        std::vector<int> sizes{2};
        spec.penalty = ridge_penalty(sizes, std::vector<bool>{true});
        spec.alpha = 0.5;
        const FitResult fit = fit_glm(spec);

        auto objective = [&](double b0, double b1) {
            Eigen::VectorXd beta(2);
            beta << b0, b1;
            return glm_loglik(spec, beta) - 0.5 * spec.alpha * beta.squaredNorm();
        };
        double best0 = 0.0, best1 = 0.0, best = -1e300;
        for (double b0 = -2.0; b0 <= 2.0; b0 += 0.01)
            for (double b1 = -2.0; b1 <= 2.0; b1 += 0.01) {
                const double v = objective(b0, b1);
                if (v > best) { best = v; best0 = b0; best1 = b1; }
            }
        const double c0 = best0, c1 = best1;
        for (double b0 = c0 - 0.012; b0 <= c0 + 0.012; b0 += 1e-4)
            for (double b1 = c1 - 0.012; b1 <= c1 + 0.012; b1 += 1e-4) {
                const double v = objective(b0, b1);
                if (v > best) { best = v; best0 = b0; best1 = b1; }
            }
        c7.expect(std::abs(fit.coefficients[0] - best0) < 1e-4 &&
                      std::abs(fit.coefficients[1] - best1) < 1e-4,
                  "grid maximizer (" + num(best0) + "," + num(best1) + ") vs IRLS (" +
                      num(fit.coefficients[0]) + "," + num(fit.coefficients[1]) + ") within 1e-4");
    }

    // Analytic gradient vs central differences on random 5-coefficient data.
    {
        Rng rng(515);
        bool all_ok = true;
        double worst = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 50, p = 5;
            GlmSpec spec;
            spec.family = Family::poisson_log;
            spec.design.resize(n, p);
            spec.response.resize(n);
            spec.weights.resize(n);
            for (int i = 0; i < n; ++i) {
                spec.design(i, 0) = 1.0;
                for (int j = 1; j < p; ++j) spec.design(i, j) = rng.normal();
                spec.response[i] = rng.uniform_int(0, 4);
                spec.weights[i] = rng.uniform(0.5, 2.0);
            }
            std::vector<int> sizes{1, p - 1};
            spec.penalty = ridge_penalty(sizes, std::vector<bool>{false, true});
            spec.alpha = 0.8;
            Eigen::VectorXd beta(p);
            for (int j = 0; j < p; ++j) beta[j] = rng.uniform(-0.5, 0.5);
            const Eigen::VectorXd analytic = glm_score(spec, beta);
            for (int j = 0; j < p; ++j) {
                const double h = 1e-6;
                Eigen::VectorXd up = beta, dn = beta;
                up[j] += h;
                dn[j] -= h;
                auto pen = [&](const Eigen::VectorXd& b) {
                    return 0.5 * spec.alpha * b.dot(spec.penalty.matrix * b);
                };
                const double numeric =
                    ((glm_loglik(spec, up) - pen(up)) - (glm_loglik(spec, dn) - pen(dn))) /
                    (2.0 * h);
                const double rel =
                    std::abs(analytic[j] - numeric) / std::max(1.0, std::abs(numeric));
                worst = std::max(worst, rel);
                if (rel > 1e-5) all_ok = false;
            }
        }
        c7.expect(all_ok, "gradient matches finite differences, worst rel err " + num(worst));
    }
}

// ---------------------------------------------------------------------------
// Criterion 8: property suite.
// ---------------------------------------------------------------------------

void property_criterion() {
    Criterion& c8 = criterion("8 invariant property suite");

    {  // Partition of unity.
        const SplineBasis basis = SplineBasis::uniform(3, 8, 0.0, 10.0);
        Rng rng(1);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i)
            worst = std::max(worst, std::abs(basis.row(rng.uniform(0.0, 10.0)).sum() - 1.0));
        c8.expect(worst < 1e-10, "partition of unity, worst |sum-1| " + num(worst));
    }
    {  // PED exposure conservation.
        Rng rng(2);
        std::vector<CountingRecord> recs;
        for (int i = 0; i < 1000; ++i) {
            CountingRecord r;
            r.player_id = "p" + std::to_string(i % 50);
            r.t_start = rng.uniform(0.0, 800.0);
            r.t_stop = r.t_start + rng.uniform(0.5, 48.0);
            r.event = rng.bernoulli(0.25) ? 1 : 0;
            recs.push_back(r);
        }
        const CutPoints cuts = make_cutpoints(recs, 20);
        const auto rows = ped_transform(recs, cuts);
        std::vector<double> exp_sum(recs.size(), 0.0);
        for (const auto& row : rows) exp_sum[static_cast<size_t>(row.record_index)] += row.exposure;
        double worst = 0.0;
        for (size_t i = 0; i < recs.size(); ++i)
            worst = std::max(worst, std::abs(exp_sum[i] - (recs[i].t_stop - recs[i].t_start)));
        c8.expect(worst < 1e-9, "PED exposure conservation, worst gap " + num(worst));
    }
    {  // Unit-weight equivalence of the weighted objective.
        sim::ScenarioSpec spec;
        spec.players = 60;
        spec.opportunities = 40;
        const auto records =
            build_counting_records(sim::panel_to_game_rows(sim::simulate_panel(spec, 33)));
        MspemConfig config;
        config.j_intervals = 8;
        config.linear_covariates = {"age", "home"};
        config.alpha_mode = AlphaMode::fixed;
        config.fixed_alpha = 0.2;
        const MspemFit naive = fit_mspem(records, std::nullopt, config);
        const MspemFit unit = fit_mspem(records, std::vector<double>(records.size(), 1.0), config);
        const double gap =
            (naive.fit.coefficients - unit.fit.coefficients).lpNorm<Eigen::Infinity>();
        c8.expect(gap < 1e-10, "unit-weight fit equals unweighted fit, gap " + num(gap));
    }
    {  // WCE feature equivalence.
        Rng rng(3);
        const SplineBasis basis = make_lag_basis(5, 10);
        const Eigen::MatrixXd bmat = lag_basis_matrix(basis, 10);
        double worst = 0.0;
        for (int trial = 0; trial < 500; ++trial) {
            LagHistory hist;
            for (int l = 0; l < 10; ++l)
                hist.minutes_at_lag.push_back(rng.bernoulli(0.3) ? 0.0 : rng.uniform(10.0, 40.0));
            Eigen::VectorXd gamma(5);
            for (int k = 0; k < 5; ++k) gamma[k] = rng.normal(0.0, 0.02);
            const WeightFunction wf{gamma, basis};
            const double via = lag_feature_row(hist, bmat).dot(gamma);
            double direct = 0.0;
            for (int l = 1; l <= 10; ++l)
                direct += wf(l) * hist.minutes_at_lag[static_cast<size_t>(l - 1)];
            worst = std::max(worst, std::abs(via - direct));
        }
        c8.expect(worst < 1e-9, "WCE features equal direct lag sums, worst gap " + num(worst));
    }
    {  // ESS bound and truncation bounds.
        Rng rng(4);
        std::vector<double> w;
        for (int i = 0; i < 300; ++i) w.push_back(rng.uniform(0.2, 4.0));
        c8.expect(effective_sample_size(w) < 300.0, "ESS < n for non-constant weights");
        std::vector<double> cw(300, 1.7);
        c8.expect(std::abs(effective_sample_size(cw) - 300.0) < 1e-9,
                  "ESS = n for constant weights");
        std::vector<double> pi;
        for (int i = 0; i < 300; ++i) pi.push_back(rng.uniform(0.05, 0.95));
        const WeightSet ws = stabilized_weights(pi, 0.6);
        double raw_lo = 1e300, raw_hi = 0.0, t_lo = 1e300, t_hi = 0.0;
        for (double v : ws.raw) { raw_lo = std::min(raw_lo, v); raw_hi = std::max(raw_hi, v); }
        for (double v : ws.truncated) { t_lo = std::min(t_lo, v); t_hi = std::max(t_hi, v); }
        c8.expect(t_hi <= raw_hi && t_lo >= raw_lo, "truncation narrows the weight range");
    }
    {  // KM three-subject fixture.
        std::vector<CountingRecord> recs;
        for (int i = 0; i < 3; ++i) {
            CountingRecord r;
            r.player_id = "k" + std::to_string(i);
            r.t_start = 0.0;
            r.t_stop = i + 1.0;
            r.event = i < 2 ? 1 : 0;
            recs.push_back(r);
        }
        const KmCurve curve = km_fit(recs);
        const bool ok = curve.times.size() == 2 && std::abs(curve.survival[0] - 2.0 / 3.0) < 1e-12 &&
                        std::abs(curve.survival[1] - 1.0 / 3.0) < 1e-12;
        c8.expect(ok, "KM product-limit on the 3-subject fixture");
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: clustering pipeline.
// ---------------------------------------------------------------------------

void cluster_criterion() {
    Criterion& c9 = criterion("9 tier clustering pipeline");
    Rng rng(2025);
    PlayerFeatures pf;
    pf.feature_names = {"mean_minutes", "usage_rate", "games_played", "frac_30min"};
    const double c_min[4] = {35.0, 27.0, 17.0, 7.0};
    const double c_use[4] = {0.30, 0.22, 0.16, 0.10};
    const double c_gp[4] = {72.0, 62.0, 48.0, 25.0};
    const double c_f30[4] = {0.85, 0.40, 0.06, 0.01};
    pf.values.resize(160, 4);
    int id = 0;
    for (int b = 0; b < 4; ++b)
        for (int i = 0; i < 40; ++i, ++id) {
            pf.player_ids.push_back("p" + std::to_string(id));
            pf.games_played.push_back(id == 3 ? 6 : 60);  // one short-season star
            pf.values(id, 0) = c_min[b] + rng.normal(0.0, 0.8);
            pf.values(id, 1) = c_use[b] + rng.normal(0.0, 0.01);
            pf.values(id, 2) = c_gp[b] + rng.normal(0.0, 2.5);
            pf.values(id, 3) = c_f30[b] + rng.normal(0.0, 0.02);
        }

    const std::vector<int> k_range{3, 4, 5, 6, 7};
    const TierAssignment tiers = cluster_players(pf, 0.85, k_range, 77);
    c9.expect(tiers.chosen_k == 4, "silhouette selects k=4 (got " +
                                       std::to_string(tiers.chosen_k) + ")");
    c9.expect(tiers.tier_names[3] == "Reserve", "player with 6 games forced to Reserve");
    c9.expect(tiers.tier_names[0] == "HighUsageStar" && tiers.tier_names[159] == "Reserve",
              "tier order follows centroid minutes");

    const PcaResult pca = pca_reduce(pf.values, 0.85, pf.feature_names);
    double cum = 0.0;
    for (int j = 0; j < pca.components; ++j)
        cum += pca.explained_variance_ratio[static_cast<size_t>(j)];
    const double without_last =
        cum - pca.explained_variance_ratio[static_cast<size_t>(pca.components - 1)];
    c9.expect(cum >= 0.85 && without_last < 0.85,
              "PCA keeps >= 85% variance with the minimal component count (" +
                  std::to_string(pca.components) + ")");
}

// ---------------------------------------------------------------------------
// Criterion 10: CLI schema and shape checks on the bundled fixture.
// ---------------------------------------------------------------------------

void cli_criterion(const Paths& paths) {
    Criterion& c10 = criterion("10 CLI ingestion and table layouts on the bundled fixture");
    const std::string games = paths.data_dir + "/fixture_games.csv";
    const std::string roster = paths.data_dir + "/fixture_roster.csv";
    const std::string features = paths.data_dir + "/fixture_features.csv";
    const fs::path tmp = paths.tmp_dir;
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    {  // fit with stabilized weights: Table-4/5-layout files.
        const std::string out = (tmp / "fit").string();
        const int rc = run_cli(paths, "fit --input " + games + " --roster " + roster +
                                          " --out " + out + " --alpha fixed:0.1" +
                                          " --weights stabilized --seed 9");
        c10.expect(rc == 0, "fit exits 0 on the fixture");
        c10.expect(csv_header(out + "/comparison.csv") == "method,w1,attenuation_pct,ess,ess_pct",
                   "comparison.csv carries the sensitivity-table layout");
        c10.expect(csv_header(out + "/balance.csv") ==
                       "covariate,mean_played,mean_rested,smd_before,smd_after",
                   "balance.csv carries the balance-table layout");
        c10.expect(csv_header(out + "/weight_function.csv") == "lag,naive_w,corrected_w",
                   "weight_function.csv carries lag columns");
        c10.expect(csv_header(out + "/surface_mspem.csv") == "t,rest_days,log_hazard",
                   "surface grid columns");
        c10.expect(fs::exists(out + "/fit_naive.json") && fs::exists(out + "/fit_mspem.json"),
                   "fit bundles written");
    }
    {  // diagnose: Table-2/8 layouts.
        const std::string out = (tmp / "diag").string();
        const int rc = run_cli(paths, "diagnose --input " + games + " --out " + out +
                                          " --alpha fixed:0.1 --seed 9");
        c10.expect(rc == 0, "diagnose exits 0 on the fixture");
        c10.expect(csv_header(out + "/cox_table.csv") == "covariate,hr,ci_low,ci_high,p_value",
                   "cox_table.csv carries the hazard-ratio layout");
        c10.expect(csv_header(out + "/evalues.csv") == "covariate,hr,evalue_point,evalue_ci",
                   "evalues.csv carries the e-value layout");
        c10.expect(csv_header(out + "/schoenfeld.csv") == "covariate,chi2,p_value",
                   "schoenfeld.csv layout");
        c10.expect(csv_header(out + "/km_curves.csv") == "gap_type,time,survival,at_risk,events",
                   "km_curves.csv layout");
        c10.expect(csv_header(out + "/calibration.csv") ==
                       "decile,mean_predicted,observed_rate,count",
                   "calibration.csv layout");
    }
    {  // cluster on the features fixture.
        const std::string out = (tmp / "clu").string();
        const int rc = run_cli(paths, "cluster --input " + features + " --out " + out +
                                          " --k-range 3..7 --seed 11");
        c10.expect(rc == 0, "cluster exits 0 on the fixture");
        c10.expect(csv_header(out + "/tiers.csv") == "player_id,tier", "tiers.csv layout");
    }
    {  // simulate determinism: same seed, byte-identical bias table.
        const std::string out_a = (tmp / "sim_a").string();
        const std::string out_b = (tmp / "sim_b").string();
        const std::string scenario = paths.scenario_dir + "/demo_small.json";
        const int rc_a = run_cli(paths, "simulate --scenario " + scenario + " --out " + out_a);
        const int rc_b = run_cli(paths, "simulate --scenario " + scenario + " --out " + out_b);
        c10.expect(rc_a == 0 && rc_b == 0, "simulate exits 0 twice");
        const auto lines_a = file_lines(out_a + "/bias_table.csv");
        const auto lines_b = file_lines(out_b + "/bias_table.csv");
        c10.expect(!lines_a.empty() && lines_a == lines_b,
                   "repeated runs produce byte-identical bias tables");
        c10.expect(csv_header(out_a + "/bias_table.csv") ==
                       "scenario,alpha_u,gamma_u,estimator,mean_bias,sd_bias,event_rate_pct,"
                       "event_rate_played_pct,mean_age_coef,reversal_fraction,replications",
                   "bias_table.csv layout");
    }
    {  // schema violations are reported with row numbers and exit code 1.
        const std::string bad = (tmp / "bad.csv").string();
        std::ofstream out(bad);
        out << "player_id,game_date,game_index,minutes,rest_days,recent_load_7d,"
               "consecutive_games,home,age,bmi,event,played\n";
        out << "p1,2024-10-01,1,-5,2,100,1,1,25,24,0,1\n";
        out.close();
        const int rc = run_cli(paths, "fit --input " + bad + " --out " + (tmp / "bad_out").string());
        c10.expect(rc == 1, "schema violation exits with code 1");
    }
}

}  // namespace

int main(int argc, char** argv) {
    Paths paths;
    paths.cli = "tools/mspem";
    paths.data_dir = "data";
    paths.scenario_dir = "scenarios";
    paths.tmp_dir = "acceptance_tmp";
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--cli") paths.cli = argv[i + 1];
        else if (key == "--data") paths.data_dir = argv[i + 1];
        else if (key == "--scenarios") paths.scenario_dir = argv[i + 1];
        else if (key == "--tmp") paths.tmp_dir = argv[i + 1];
    }

    std::printf("running acceptance suite (Monte Carlo sections take ~1 minute)...\n");

    {  // Criteria 1-4 share the selection-strength sweep.
        const auto cells = sim::selection_strength_scenarios(sim::ScenarioSpec{});
        const std::vector<sim::Estimator> ests{
            sim::Estimator::naive, sim::Estimator::ipw_observed,
            sim::Estimator::ipw_misspecified, sim::Estimator::ipw_oracle};
        const sim::BiasReport report = sim::run_scenarios(cells, ests);
        simulation_criteria(report);
    }
    recurrent_criterion();
    evalue_criterion();
    glm_criterion();
    property_criterion();
    cluster_criterion();
    cli_criterion(paths);

    int failures = 0;
    for (const auto& c : g_criteria) {
        std::printf("[%s] criterion %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str());
        for (const auto& d : c.details) std::printf("%s\n", d.c_str());
        if (!c.pass) ++failures;
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", g_criteria.size() - failures,
                g_criteria.size());
    return failures == 0 ? 0 : 1;
}
