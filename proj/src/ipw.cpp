#include "mspem/ipw.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

SelectionFit fit_selection(std::span<const SelectionRow> rows) {
    if (rows.empty()) throw std::invalid_argument("fit_selection: empty selection dataset");
    int n_played = 0;
    for (const auto& r : rows) n_played += r.played != 0 ? 1 : 0;
    if (n_played == 0 || n_played == static_cast<int>(rows.size()))
        throw std::runtime_error("fit_selection: both played and rested rows are required");

    GlmSpec spec;
    spec.family = Family::binomial_logit;
    spec.design.resize(static_cast<Eigen::Index>(rows.size()), 6);
    spec.response.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        spec.design.row(static_cast<Eigen::Index>(i)) << 1.0, r.age, r.bmi, r.recent_load_7d,
            r.rest_days, r.b2b;
        spec.response[static_cast<Eigen::Index>(i)] = r.played != 0 ? 1.0 : 0.0;
    }

    SelectionFit out;
    out.fit = fit_glm(spec);
    const Eigen::VectorXd mu = fitted_mean(spec, out.fit.coefficients);
    out.pi_hat.assign(mu.data(), mu.data() + mu.size());
    out.pi_bar = static_cast<double>(n_played) / static_cast<double>(rows.size());
    return out;
}

WeightSet stabilized_weights(std::span<const double> pi_hat_played, double pi_bar,
                             Truncation trunc) {
    if (pi_bar <= 0.0 || pi_bar >= 1.0)
        throw std::invalid_argument("stabilized_weights: pi_bar must lie in (0,1)");
    WeightSet ws;
    ws.scheme = WeightScheme::stabilized;
    ws.pi_bar = pi_bar;
    ws.pi_hat.assign(pi_hat_played.begin(), pi_hat_played.end());
    ws.raw.reserve(pi_hat_played.size());
    for (size_t i = 0; i < pi_hat_played.size(); ++i) {
        const double p = pi_hat_played[i];
        if (p <= 0.0) {
            std::ostringstream msg;
            msg << "stabilized_weights: positivity violation at played row " << i
                << " (pi_hat = " << p << ")";
            throw std::runtime_error(msg.str());
        }
        ws.raw.push_back(pi_bar / p);
    }
    ws.trunc_low = quantile(ws.raw, trunc.low_pct / 100.0);
    ws.trunc_high = quantile(ws.raw, trunc.high_pct / 100.0);
    ws.truncated.reserve(ws.raw.size());
    for (double w : ws.raw) ws.truncated.push_back(std::clamp(w, ws.trunc_low, ws.trunc_high));
    return ws;
}

WeightSet overlap_weights(std::span<const double> pi_hat, std::span<const int> played) {
    if (pi_hat.size() != played.size())
        throw std::invalid_argument("overlap_weights: pi_hat and played must align");
    WeightSet ws;
    ws.scheme = WeightScheme::overlap;
    double sum_played = 0.0;
    int n_played = 0;
    for (size_t i = 0; i < pi_hat.size(); ++i) {
        const double p = pi_hat[i];
        if (p <= 0.0 || p >= 1.0)
            throw std::runtime_error("overlap_weights: pi_hat must lie strictly in (0,1)");
        if (played[i] != 0) {
            ws.pi_hat.push_back(p);
            ws.raw.push_back(1.0 - p);
            sum_played += 1.0;
            ++n_played;
        }
    }
    (void)sum_played;
    if (n_played == 0) throw std::runtime_error("overlap_weights: no played rows");
    ws.truncated = ws.raw;  // already bounded in (0,1)
    ws.trunc_low = *std::min_element(ws.raw.begin(), ws.raw.end());
    ws.trunc_high = *std::max_element(ws.raw.begin(), ws.raw.end());
    ws.pi_bar = 0.0;
    return ws;
}

double effective_sample_size(std::span<const double> weights) {
    double s = 0.0, s2 = 0.0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    if (s2 == 0.0) return 0.0;
    return s * s / s2;
}

namespace {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments weighted_moments(std::span<const double> x, std::span<const double> w) {
    double sw = 0.0, sx = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
    }
    Moments m;
    m.mean = sx / sw;
    double sv = 0.0;
    for (size_t i = 0; i < x.size(); ++i) sv += w[i] * (x[i] - m.mean) * (x[i] - m.mean);
    m.var = sv / sw;
    return m;
}

std::optional<double> smd(const Moments& a, const Moments& b) {
    const double pooled = std::sqrt(0.5 * (a.var + b.var));
    if (pooled <= 0.0) return std::nullopt;
    return std::abs(a.mean - b.mean) / pooled;
}

}  // namespace

BalanceReport balance_report(std::span<const SelectionRow> rows, std::span<const double> pi_hat,
                             const WeightSet& weights, Truncation trunc) {
    if (rows.size() != pi_hat.size())
        throw std::invalid_argument("balance_report: rows and pi_hat must align");

    std::vector<size_t> played_idx, rested_idx;
    for (size_t i = 0; i < rows.size(); ++i)
        (rows[i].played != 0 ? played_idx : rested_idx).push_back(i);
    if (played_idx.size() != weights.truncated.size())
        throw std::invalid_argument("balance_report: weights do not match played rows");

    // Rested-group weights (1-pi_bar)/(1-pi_hat) under the stabilized scheme,
    // pi_hat under overlap; same truncation convention as the played side.
    std::vector<double> rested_w;
    rested_w.reserve(rested_idx.size());
    for (size_t i : rested_idx) {
        const double p = pi_hat[i];
        rested_w.push_back(weights.scheme == WeightScheme::overlap
                               ? p
                               : (1.0 - weights.pi_bar) / std::max(1.0 - p, 1e-12));
    }
    if (weights.scheme == WeightScheme::stabilized && !rested_w.empty()) {
        const double lo = quantile(rested_w, trunc.low_pct / 100.0);
        const double hi = quantile(rested_w, trunc.high_pct / 100.0);
        for (double& w : rested_w) w = std::clamp(w, lo, hi);
    }

    const std::vector<std::pair<std::string, double SelectionRow::*>> covs = {
        {"age", &SelectionRow::age},
        {"bmi", &SelectionRow::bmi},
        {"recent_load_7d", &SelectionRow::recent_load_7d},
        {"rest_days", &SelectionRow::rest_days},
        {"b2b", &SelectionRow::b2b},
    };

    BalanceReport report;
    const std::vector<double> unit_played(played_idx.size(), 1.0);
    const std::vector<double> unit_rested(rested_idx.size(), 1.0);
    for (const auto& [name, member] : covs) {
        std::vector<double> xp, xr;
        xp.reserve(played_idx.size());
        xr.reserve(rested_idx.size());
        for (size_t i : played_idx) xp.push_back(rows[i].*member);
        for (size_t i : rested_idx) xr.push_back(rows[i].*member);

        BalanceRow row;
        row.covariate = name;
        const Moments mp = weighted_moments(xp, unit_played);
        const Moments mr = xr.empty() ? Moments{} : weighted_moments(xr, unit_rested);
        row.mean_played = mp.mean;
        row.mean_rested = mr.mean;
        if (!xr.empty()) row.smd_before = smd(mp, mr);
        const Moments wp = weighted_moments(xp, weights.truncated);
        if (!xr.empty()) {
            const Moments wr = weighted_moments(xr, rested_w);
            row.smd_after = smd(wp, wr);
        }
        report.rows.push_back(std::move(row));
    }
    report.ess = effective_sample_size(weights.truncated);
    report.ess_pct = 100.0 * report.ess / static_cast<double>(played_idx.size());
    return report;
}

}  // namespace mspem
