#include "mspem/wce.hpp"

#include <stdexcept>

namespace mspem {

SplineBasis make_lag_basis(int num_bases, int lags) {
    if (lags < 1) throw std::invalid_argument("make_lag_basis: need at least one lag");
    return SplineBasis::uniform(3, num_bases, 1.0, static_cast<double>(lags));
}

Eigen::MatrixXd lag_basis_matrix(const SplineBasis& basis, int lags) {
    std::vector<double> grid(static_cast<size_t>(lags));
    for (int l = 1; l <= lags; ++l) grid[static_cast<size_t>(l - 1)] = l;
    return eval_basis(basis, grid);
}

std::vector<LagHistory> lag_histories(std::span<const CountingRecord> player_records, int lags) {
    for (size_t i = 1; i < player_records.size(); ++i) {
        if (player_records[i].player_id != player_records[i - 1].player_id ||
            player_records[i].t_start < player_records[i - 1].t_stop - 1e-9)
            throw std::invalid_argument(
                "lag_histories: records must be one player's games in play order");
    }
    std::vector<LagHistory> out;
    out.reserve(player_records.size());
    for (size_t i = 0; i < player_records.size(); ++i) {
        LagHistory h;
        h.minutes_at_lag.assign(static_cast<size_t>(lags), 0.0);
        for (int l = 1; l <= lags; ++l) {
            const int idx = static_cast<int>(i) - l;
            if (idx >= 0) h.minutes_at_lag[static_cast<size_t>(l - 1)] = player_records[static_cast<size_t>(idx)].minutes;
        }
        out.push_back(std::move(h));
    }
    return out;
}

Eigen::RowVectorXd lag_feature_row(const LagHistory& history, const Eigen::MatrixXd& basis_matrix) {
    if (history.lags() != basis_matrix.rows())
        throw std::invalid_argument("lag_feature_row: history length does not match basis matrix");
    Eigen::Map<const Eigen::VectorXd> m(history.minutes_at_lag.data(), history.lags());
    return (basis_matrix.transpose() * m).transpose();
}

Eigen::MatrixXd build_lag_features(std::span<const CountingRecord> player_records,
                                   const SplineBasis& basis, int lags) {
    const Eigen::MatrixXd bmat = lag_basis_matrix(basis, lags);
    const auto histories = lag_histories(player_records, lags);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(histories.size()), basis.num_bases());
    for (size_t i = 0; i < histories.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = lag_feature_row(histories[i], bmat);
    return out;
}

std::vector<double> eval_weight_function(const WeightFunction& wf, std::span<const double> lags) {
    std::vector<double> out;
    out.reserve(lags.size());
    for (double l : lags) out.push_back(wf(l));
    return out;
}

}  // namespace mspem
