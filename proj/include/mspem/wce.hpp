#ifndef MSPEM_WCE_HPP
#define MSPEM_WCE_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "mspem/basis.hpp"
#include "mspem/survdata.hpp"

namespace mspem {

/// Minutes at lags 1..L for one player-game; lag 1 is the immediately
/// preceding played game. Entries before the player's first game are 0.
struct LagHistory {
    std::vector<double> minutes_at_lag;
    int lags() const { return static_cast<int>(minutes_at_lag.size()); }
};

/// Smooth lag-weight function w(l) = sum_k gamma_k B_k(l) over [1, L].
struct WeightFunction {
    Eigen::VectorXd gamma;
    SplineBasis basis;

    double operator()(double lag) const { return basis.row(lag).dot(gamma); }
};

/// Cubic lag basis with K bases over [1, L]; interior knots equally spaced.
SplineBasis make_lag_basis(int num_bases, int lags);

/// L x K matrix of the basis evaluated at integer lags 1..L.
Eigen::MatrixXd lag_basis_matrix(const SplineBasis& basis, int lags);

/// Per-game lag histories for one player's records, which must be in play
/// order (ascending t_start). Throws on unordered input.
std::vector<LagHistory> lag_histories(std::span<const CountingRecord> player_records, int lags);

/// WCE feature rows z = B' m for one player's ordered records: an n x K
/// matrix whose inner product with gamma equals sum_l w(l) m(t-l).
Eigen::MatrixXd build_lag_features(std::span<const CountingRecord> player_records,
                                   const SplineBasis& basis, int lags);

/// Feature row for a single raw lag history.
Eigen::RowVectorXd lag_feature_row(const LagHistory& history, const Eigen::MatrixXd& basis_matrix);

/// w evaluated at each requested lag; throws on lags outside [1, L].
std::vector<double> eval_weight_function(const WeightFunction& wf, std::span<const double> lags);

}  // namespace mspem

#endif
