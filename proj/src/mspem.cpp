#include "mspem/mspem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

namespace {

bool is_indicator(std::span<const double> values) {
    for (double v : values)
        if (v != 0.0 && v != 1.0) return false;
    return true;
}

double reference_value(std::span<const double> values) {
    if (is_indicator(values)) {
        double s = 0.0;
        for (double v : values) s += v;
        return s * 2.0 >= static_cast<double>(values.size()) ? 1.0 : 0.0;
    }
    return quantile(values, 0.5);
}

}  // namespace

ModelDesign build_design(std::span<const CountingRecord> records, const MspemConfig& config) {
    if (records.empty()) throw std::invalid_argument("build_design: no records");

    ModelDesign md;
    md.config = config;
    md.cuts = make_cutpoints(records, config.j_intervals);
    md.ped = ped_transform(records, md.cuts);
    const Eigen::Index n = static_cast<Eigen::Index>(md.ped.size());

    // Quantile knots from the observed covariates.
    std::vector<double> midpoints, rest_days, t_values;
    midpoints.reserve(md.ped.size());
    for (const auto& row : md.ped) midpoints.push_back(row.midpoint);
    for (const auto& rec : records) {
        rest_days.push_back(rec.rest_days);
        t_values.push_back(rec.t_stop);
    }
    const double t_max = md.cuts.bounds.back();
    md.f0_basis = SplineBasis::from_quantiles(3, config.baseline_bases, 0.0, t_max, midpoints);

    // Per-record WCE features over each player's ordered played games.
    Eigen::MatrixXd wce_features;
    if (config.kind == DesignKind::pamm_wce) {
        md.lag_basis = make_lag_basis(config.wce_bases, config.lags);
        wce_features.resize(static_cast<Eigen::Index>(records.size()), config.wce_bases);
        size_t start = 0;
        while (start < records.size()) {
            size_t end = start + 1;
            while (end < records.size() && records[end].player_id == records[start].player_id)
                ++end;
            const Eigen::MatrixXd z = build_lag_features(
                records.subspan(start, end - start), *md.lag_basis, config.lags);
            wce_features.middleRows(static_cast<Eigen::Index>(start),
                                    static_cast<Eigen::Index>(end - start)) = z;
            start = end;
        }
    } else {
        const double r_lo = *std::min_element(rest_days.begin(), rest_days.end());
        const double r_hi = *std::max_element(rest_days.begin(), rest_days.end());
        const double hi = r_hi > r_lo ? r_hi : r_lo + 1.0;
        md.f1_basis = SplineBasis::from_quantiles(3, config.rest_bases, r_lo, hi, rest_days);
        md.f2_t_basis = SplineBasis::from_quantiles(3, config.tensor_marginal_bases, 0.0, t_max,
                                                    midpoints);
        md.f2_r_basis = SplineBasis::from_quantiles(3, config.tensor_marginal_bases, r_lo, hi,
                                                    rest_days);
    }

    // Column layout and penalty blocks.
    std::vector<int> block_sizes{1};
    std::vector<bool> penalized{false};
    int col = 1;
    md.f0_offset = col;
    block_sizes.push_back(config.baseline_bases);
    penalized.push_back(true);
    col += config.baseline_bases;
    int f2_cols = 0;
    if (config.kind == DesignKind::pamm) {
        md.f1_offset = col;
        block_sizes.push_back(config.rest_bases);
        penalized.push_back(true);
        col += config.rest_bases;
        md.f2_offset = col;
        f2_cols = config.tensor_marginal_bases * config.tensor_marginal_bases;
        block_sizes.push_back(f2_cols);
        penalized.push_back(true);
        col += f2_cols;
    } else {
        md.wce_offset = col;
        block_sizes.push_back(config.wce_bases);
        penalized.push_back(true);
        col += config.wce_bases;
    }
    md.linear_offset = col;
    const int n_linear = static_cast<int>(config.linear_covariates.size());
    if (n_linear > 0) {
        block_sizes.push_back(n_linear);
        penalized.push_back(false);
        col += n_linear;
    }
    md.penalty = ridge_penalty(block_sizes, penalized);

    md.design.setZero(n, col);
    md.response.resize(n);
    md.offset.resize(n);
    md.groups.resize(md.ped.size());
    md.record_of_row.resize(md.ped.size());

    md.column_names.push_back("intercept");
    for (int k = 0; k < config.baseline_bases; ++k)
        md.column_names.push_back("f0_b" + std::to_string(k + 1));
    if (config.kind == DesignKind::pamm) {
        for (int k = 0; k < config.rest_bases; ++k)
            md.column_names.push_back("f1_b" + std::to_string(k + 1));
        for (int a = 0; a < config.tensor_marginal_bases; ++a)
            for (int b = 0; b < config.tensor_marginal_bases; ++b)
                md.column_names.push_back("f2_b" + std::to_string(a + 1) + "_" +
                                          std::to_string(b + 1));
    } else {
        for (int k = 0; k < config.wce_bases; ++k)
            md.column_names.push_back("wce_b" + std::to_string(k + 1));
    }
    for (const auto& name : config.linear_covariates) md.column_names.push_back(name);

    for (Eigen::Index r = 0; r < n; ++r) {
        const PedRow& row = md.ped[static_cast<size_t>(r)];
        const CountingRecord& rec = records[static_cast<size_t>(row.record_index)];
        md.groups[static_cast<size_t>(r)] = row.player_id;
        md.record_of_row[static_cast<size_t>(r)] = row.record_index;
        md.response[r] = row.event;
        md.offset[r] = row.offset;
        md.design(r, 0) = 1.0;
        md.design.row(r).segment(md.f0_offset, config.baseline_bases) =
            md.f0_basis->row(row.midpoint);
        if (config.kind == DesignKind::pamm) {
            md.design.row(r).segment(md.f1_offset, config.rest_bases) =
                md.f1_basis->row(rec.rest_days);
            const Eigen::RowVectorXd bt = md.f2_t_basis->row(row.midpoint);
            const Eigen::RowVectorXd br = md.f2_r_basis->row(rec.rest_days);
            for (int a = 0; a < config.tensor_marginal_bases; ++a)
                for (int b = 0; b < config.tensor_marginal_bases; ++b)
                    md.design(r, md.f2_offset + a * config.tensor_marginal_bases + b) =
                        bt[a] * br[b];
        } else {
            md.design.row(r).segment(md.wce_offset, config.wce_bases) =
                wce_features.row(row.record_index);
        }
        for (int j = 0; j < n_linear; ++j)
            md.design(r, md.linear_offset + j) =
                covariate_value(rec, config.linear_covariates[j]);
    }

    // Reference covariates for surface evaluation.
    if (n_linear > 0) {
        md.reference_linear.resize(n_linear);
        for (int j = 0; j < n_linear; ++j) {
            std::vector<double> colv(md.design.col(md.linear_offset + j).data(),
                                     md.design.col(md.linear_offset + j).data() + n);
            md.reference_linear[j] = reference_value(colv);
        }
    }
    if (config.kind == DesignKind::pamm_wce) {
        md.reference_wce.resize(config.wce_bases);
        for (int k = 0; k < config.wce_bases; ++k) {
            std::vector<double> colv(md.design.col(md.wce_offset + k).data(),
                                     md.design.col(md.wce_offset + k).data() + n);
            md.reference_wce[k] = quantile(colv, 0.5);
        }
    }
    return md;
}

MspemFit fit_mspem(std::span<const CountingRecord> records,
                   const std::optional<std::vector<double>>& record_weights,
                   const MspemConfig& config) {
    MspemFit out;
    out.design = build_design(records, config);
    ModelDesign& md = out.design;

    GlmSpec spec;
    spec.family = Family::poisson_log;
    spec.design = md.design;
    spec.response = md.response;
    spec.offset = md.offset;
    spec.penalty = md.penalty;
    if (record_weights) {
        if (record_weights->size() != records.size())
            throw std::invalid_argument("fit_mspem: one weight per counting record required");
        spec.weights.resize(md.design.rows());
        for (Eigen::Index r = 0; r < md.design.rows(); ++r)
            spec.weights[r] = (*record_weights)[static_cast<size_t>(
                md.record_of_row[static_cast<size_t>(r)])];
    }

    if (config.alpha_mode == AlphaMode::fixed) {
        out.alpha = config.fixed_alpha;
        out.alpha_from_cv = false;
    } else {
        const std::vector<double> grid =
            config.cv_grid.empty() ? default_alpha_grid() : config.cv_grid;
        const CvResult cv = grouped_cv_alpha(spec, md.groups, config.cv_folds, grid);
        out.alpha = cv.alpha;
        out.alpha_from_cv = true;
        out.cv_grid = cv.grid;
        out.cv_deviance = cv.mean_deviance;
    }
    spec.alpha = out.alpha;
    out.fit = fit_glm(spec);

    if (config.kind == DesignKind::pamm_wce) {
        out.weight_function = WeightFunction{
            out.fit.coefficients.segment(md.wce_offset, config.wce_bases), *md.lag_basis};
    }
    return out;
}

Eigen::VectorXd predict_eta(const MspemFit& fit) {
    return fit.design.design * fit.fit.coefficients;
}

HazardSurface hazard_surface(const MspemFit& fit, std::span<const double> t_grid,
                             std::span<const double> rest_grid) {
    const ModelDesign& md = fit.design;
    const MspemConfig& cfg = md.config;
    HazardSurface surf;
    surf.t_grid.assign(t_grid.begin(), t_grid.end());
    surf.rest_grid.assign(rest_grid.begin(), rest_grid.end());
    surf.reference_linear = md.reference_linear;
    surf.reference_wce = md.reference_wce;
    surf.log_hazard.resize(static_cast<Eigen::Index>(t_grid.size()),
                           static_cast<Eigen::Index>(rest_grid.size()));

    Eigen::VectorXd row = Eigen::VectorXd::Zero(md.design.cols());
    for (size_t ti = 0; ti < t_grid.size(); ++ti) {
        for (size_t ri = 0; ri < rest_grid.size(); ++ri) {
            row.setZero();
            row[0] = 1.0;
            row.segment(md.f0_offset, cfg.baseline_bases) =
                md.f0_basis->row(t_grid[ti]).transpose();
            if (cfg.kind == DesignKind::pamm) {
                row.segment(md.f1_offset, cfg.rest_bases) =
                    md.f1_basis->row(rest_grid[ri]).transpose();
                const Eigen::RowVectorXd bt = md.f2_t_basis->row(t_grid[ti]);
                const Eigen::RowVectorXd br = md.f2_r_basis->row(rest_grid[ri]);
                for (int a = 0; a < cfg.tensor_marginal_bases; ++a)
                    for (int b = 0; b < cfg.tensor_marginal_bases; ++b)
                        row[md.f2_offset + a * cfg.tensor_marginal_bases + b] = bt[a] * br[b];
            } else if (md.wce_offset >= 0) {
                row.segment(md.wce_offset, cfg.wce_bases) = md.reference_wce;
            }
            if (md.linear_offset >= 0 && md.reference_linear.size() > 0)
                row.segment(md.linear_offset, md.reference_linear.size()) = md.reference_linear;
            surf.log_hazard(static_cast<Eigen::Index>(ti), static_cast<Eigen::Index>(ri)) =
                row.dot(fit.fit.coefficients);
        }
    }
    return surf;
}

ComparisonResult compare(const MspemFit& naive, const MspemFit& corrected) {
    if (!naive.weight_function || !corrected.weight_function)
        throw std::invalid_argument("compare: both fits must carry a WCE weight function");
    const int lags = naive.design.config.lags;
    ComparisonResult out;
    out.w1_naive = (*naive.weight_function)(1.0);
    out.w1_corrected = (*corrected.weight_function)(1.0);
    if (out.w1_naive != 0.0)
        out.attenuation_pct = 100.0 * (1.0 - std::abs(out.w1_corrected) / std::abs(out.w1_naive));
    for (int l = 1; l <= lags; ++l) {
        out.lags.push_back(l);
        out.w_naive.push_back((*naive.weight_function)(l));
        out.w_corrected.push_back((*corrected.weight_function)(l));
    }
    out.aic_naive = naive.fit.aic;
    out.aic_corrected = corrected.fit.aic;
    out.edf_naive = naive.fit.edf;
    out.edf_corrected = corrected.fit.edf;
    return out;
}

std::vector<CalibrationRow> calibration_deciles(const MspemFit& fit,
                                                std::span<const CountingRecord> records) {
    const ModelDesign& md = fit.design;
    const Eigen::VectorXd eta = predict_eta(fit);

    // Cumulative hazard per record; event probability 1 - exp(-Lambda).
    std::vector<double> cumhaz(records.size(), 0.0);
    for (Eigen::Index r = 0; r < eta.size(); ++r)
        cumhaz[static_cast<size_t>(md.record_of_row[static_cast<size_t>(r)])] +=
            std::exp(md.offset[r] + eta[r]);

    std::vector<std::pair<double, int>> scored;  // (p_hat, event)
    scored.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i)
        scored.emplace_back(1.0 - std::exp(-cumhaz[i]), records[i].event);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CalibrationRow> rows;
    const size_t n = scored.size();
    for (int d = 0; d < 10; ++d) {
        const size_t lo = n * static_cast<size_t>(d) / 10;
        const size_t hi = n * static_cast<size_t>(d + 1) / 10;
        if (hi <= lo) continue;
        CalibrationRow row;
        row.count = static_cast<int>(hi - lo);
        for (size_t i = lo; i < hi; ++i) {
            row.mean_predicted += scored[i].first;
            row.observed_rate += scored[i].second;
        }
        row.mean_predicted /= row.count;
        row.observed_rate /= row.count;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mspem
