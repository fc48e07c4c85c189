#include "mspem/cox.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

std::vector<std::string> default_cox_covariates(bool include_tier) {
    std::vector<std::string> names = {"age",        "bmi",        "home",
                                      "recent_load_7d", "consecutive_games",
                                      "gap_short",  "gap_normal", "gap_extended",
                                      "phase_mid",  "phase_late"};
    if (include_tier) {
        names.push_back("tier_star");
        names.push_back("tier_starting");
        names.push_back("tier_rotation");
    }
    return names;
}

namespace {

struct CoxData {
    Eigen::MatrixXd x;              // n x p
    std::vector<double> start, stop;
    std::vector<int> event;
    std::vector<double> event_times;  // distinct, ascending
};

CoxData prepare(std::span<const CountingRecord> records,
                const std::vector<std::string>& covariates) {
    CoxData d;
    const Eigen::Index n = static_cast<Eigen::Index>(records.size());
    d.x.resize(n, static_cast<Eigen::Index>(covariates.size()));
    d.start.resize(records.size());
    d.stop.resize(records.size());
    d.event.resize(records.size());
    std::set<double> times;
    for (size_t i = 0; i < records.size(); ++i) {
        for (size_t j = 0; j < covariates.size(); ++j)
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                covariate_value(records[i], covariates[j]);
        d.start[i] = records[i].t_start;
        d.stop[i] = records[i].t_stop;
        d.event[i] = records[i].event;
        if (records[i].event != 0) times.insert(records[i].t_stop);
    }
    d.event_times.assign(times.begin(), times.end());
    return d;
}

/// Log partial likelihood, score and information at beta (Breslow ties).
void partial_lik(const CoxData& d, const Eigen::VectorXd& beta, double* loglik,
                 Eigen::VectorXd* score, Eigen::MatrixXd* info) {
    const Eigen::Index p = d.x.cols();
    const Eigen::VectorXd eta = d.x * beta;
    double ll = 0.0;
    if (score) score->setZero(p);
    if (info) info->setZero(p, p);
    for (double t : d.event_times) {
        double s0 = 0.0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
        int d_e = 0;
        double xsum_ll = 0.0;
        Eigen::VectorXd xsum = Eigen::VectorXd::Zero(p);
        for (size_t i = 0; i < d.stop.size(); ++i) {
            if (d.start[i] < t && t <= d.stop[i]) {
                const double w = std::exp(eta[static_cast<Eigen::Index>(i)]);
                s0 += w;
                s1 += w * d.x.row(static_cast<Eigen::Index>(i)).transpose();
                if (info)
                    s2 += w * d.x.row(static_cast<Eigen::Index>(i)).transpose() *
                          d.x.row(static_cast<Eigen::Index>(i));
            }
            if (d.event[i] != 0 && d.stop[i] == t) {
                ++d_e;
                xsum_ll += eta[static_cast<Eigen::Index>(i)];
                xsum += d.x.row(static_cast<Eigen::Index>(i)).transpose();
            }
        }
        if (d_e == 0 || s0 <= 0.0) continue;
        ll += xsum_ll - d_e * std::log(s0);
        const Eigen::VectorXd xbar = s1 / s0;
        if (score) *score += xsum - d_e * xbar;
        if (info) *info += d_e * (s2 / s0 - xbar * xbar.transpose());
    }
    if (loglik) *loglik = ll;
}

}  // namespace

CoxFit cox_fit(std::span<const CountingRecord> records,
               const std::vector<std::string>& covariates) {
    if (covariates.empty()) throw std::invalid_argument("cox_fit: no covariates");
    CoxData d = prepare(records, covariates);
    int n_events = 0;
    for (int e : d.event) n_events += e != 0 ? 1 : 0;
    if (n_events == 0) throw std::runtime_error("cox_fit: no events");

    const Eigen::Index p = d.x.cols();
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ll = 0.0;
    partial_lik(d, beta, &ll, nullptr, nullptr);

    CoxFit fit;
    fit.covariates = covariates;
    fit.n_events = n_events;
    constexpr int kMaxIter = 60;
    for (int iter = 1; iter <= kMaxIter; ++iter) {
        Eigen::VectorXd score(p);
        Eigen::MatrixXd info(p, p);
        partial_lik(d, beta, nullptr, &score, &info);

        // Degenerate covariates (zero risk-set variance) keep beta = 0.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(
            info + 1e-12 * Eigen::MatrixXd::Identity(p, p));
        Eigen::VectorXd step = ldlt.solve(score);
        if (!step.allFinite()) throw std::runtime_error("cox_fit: singular information matrix");

        double new_ll = 0.0;
        Eigen::VectorXd candidate;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            candidate = beta + step;
            partial_lik(d, candidate, &new_ll, nullptr, nullptr);
            if (std::isfinite(new_ll) && new_ll >= ll - 1e-12) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        fit.iterations = iter;
        if (!accepted) break;
        const double rel = std::abs(new_ll - ll) / (std::abs(ll) + 1.0);
        beta = candidate;
        ll = new_ll;
        if (rel < 1e-10) break;
    }
    // A monotone partial likelihood drives some coefficient toward infinity;
    // the flat asymptote can satisfy the relative tolerance first.
    if (beta.lpNorm<Eigen::Infinity>() > 15.0)
        throw std::runtime_error("cox_fit: monotone partial likelihood (separation)");

    Eigen::VectorXd score(p);
    Eigen::MatrixXd info(p, p);
    partial_lik(d, beta, &ll, &score, &info);

    fit.beta = beta;
    fit.log_partial_lik = ll;
    const Eigen::MatrixXd cov =
        Eigen::LDLT<Eigen::MatrixXd>(info + 1e-12 * Eigen::MatrixXd::Identity(p, p))
            .solve(Eigen::MatrixXd::Identity(p, p));
    fit.se.resize(p);
    fit.hazard_ratio.resize(p);
    fit.ci_low.resize(p);
    fit.ci_high.resize(p);
    fit.p_value.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.se[j] = std::sqrt(std::max(cov(j, j), 0.0));
        fit.hazard_ratio[j] = std::exp(beta[j]);
        fit.ci_low[j] = std::exp(beta[j] - 1.96 * fit.se[j]);
        fit.ci_high[j] = std::exp(beta[j] + 1.96 * fit.se[j]);
        fit.p_value[j] = fit.se[j] > 0.0 ? normal_pvalue(beta[j] / fit.se[j]) : 1.0;
    }
    return fit;
}

SchoenfeldResult schoenfeld_test(const CoxFit& fit, std::span<const CountingRecord> records) {
    CoxData d = prepare(records, fit.covariates);
    int n_events = 0;
    for (int e : d.event) n_events += e != 0 ? 1 : 0;
    if (n_events < 3) throw std::runtime_error("schoenfeld_test: needs at least 3 events");

    const Eigen::Index p = d.x.cols();
    const Eigen::VectorXd eta = d.x * fit.beta;

    // Per-event residuals s_i = x_i - xbar(t_i) and the averaged information.
    std::vector<double> g;                 // event times, one per event
    std::vector<Eigen::VectorXd> resid;    // one per event
    Eigen::MatrixXd vbar = Eigen::MatrixXd::Zero(p, p);
    for (double t : d.event_times) {
        double s0 = 0.0;
        Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
        for (size_t i = 0; i < d.stop.size(); ++i) {
            if (d.start[i] < t && t <= d.stop[i]) {
                const double w = std::exp(eta[static_cast<Eigen::Index>(i)]);
                s0 += w;
                s1 += w * d.x.row(static_cast<Eigen::Index>(i)).transpose();
                s2 += w * d.x.row(static_cast<Eigen::Index>(i)).transpose() *
                      d.x.row(static_cast<Eigen::Index>(i));
            }
        }
        if (s0 <= 0.0) continue;
        const Eigen::VectorXd xbar = s1 / s0;
        const Eigen::MatrixXd v = s2 / s0 - xbar * xbar.transpose();
        for (size_t i = 0; i < d.stop.size(); ++i) {
            if (d.event[i] != 0 && d.stop[i] == t) {
                g.push_back(t);
                resid.push_back(d.x.row(static_cast<Eigen::Index>(i)).transpose() - xbar);
                vbar += v;
            }
        }
    }
    const double n_ev = static_cast<double>(g.size());
    vbar /= n_ev;

    double gbar = 0.0;
    for (double t : g) gbar += t;
    gbar /= n_ev;
    double gss = 0.0;
    for (double t : g) gss += (t - gbar) * (t - gbar);

    SchoenfeldResult out;
    out.covariates = fit.covariates;
    out.chi2.resize(fit.covariates.size());
    out.p_value.resize(fit.covariates.size());
    for (Eigen::Index j = 0; j < p; ++j) {
        double u = 0.0;
        for (size_t e = 0; e < g.size(); ++e) u += (g[e] - gbar) * resid[e][j];
        // A covariate with no risk-set variance carries no test.
        double col_mean_sq = 0.0;
        for (size_t i = 0; i < d.stop.size(); ++i)
            col_mean_sq += d.x(static_cast<Eigen::Index>(i), j) * d.x(static_cast<Eigen::Index>(i), j);
        col_mean_sq /= static_cast<double>(d.stop.size());
        if (gss <= 0.0 || vbar(j, j) <= 1e-10 * (1.0 + col_mean_sq)) continue;
        const double chi2 = u * u / (vbar(j, j) * gss);
        out.chi2[static_cast<size_t>(j)] = chi2;
        out.p_value[static_cast<size_t>(j)] = chi2_sf_1df(chi2);
    }
    return out;
}

EvalueReport evalue(double hr, double ci_bound) {
    if (hr <= 0.0 || ci_bound <= 0.0)
        throw std::invalid_argument("evalue: hazard ratio and CI bound must be positive");
    auto point = [](double h) {
        const double r = h >= 1.0 ? h : 1.0 / h;
        return r + std::sqrt(r * (r - 1.0));
    };
    EvalueReport out;
    out.hr = hr;
    out.evalue_point = hr == 1.0 ? 1.0 : point(hr);
    // CI crossing 1 means no confounding is needed to explain the interval.
    const bool crosses = (hr < 1.0 && ci_bound >= 1.0) || (hr > 1.0 && ci_bound <= 1.0) || hr == 1.0;
    out.evalue_ci = crosses ? 1.0 : point(ci_bound);
    return out;
}

}  // namespace mspem
