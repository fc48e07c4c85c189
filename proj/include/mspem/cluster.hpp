#ifndef MSPEM_CLUSTER_HPP
#define MSPEM_CLUSTER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mspem/survdata.hpp"

namespace mspem {

/// Per-player season summary features; the CSV header defines which columns
/// are present. `games_played` and `mean_minutes` (and `usage_rate` for tie
/// breaks) are looked up by name.
struct PlayerFeatures {
    std::vector<std::string> feature_names;
    std::vector<std::string> player_ids;
    std::vector<int> games_played;
    Eigen::MatrixXd values;  // players x features
};

struct PcaResult {
    Eigen::MatrixXd scores;  // rows x retained components
    int components = 0;
    std::vector<double> explained_variance_ratio;  // all components
    std::vector<std::string> dropped_columns;      // zero-variance features
};

/// Z-scores the feature matrix (dropping zero-variance columns with a note),
/// projects onto principal axes, and keeps the smallest component count
/// whose cumulative explained variance reaches `variance_target`.
PcaResult pca_reduce(const Eigen::MatrixXd& features, double variance_target,
                     std::span<const std::string> feature_names = {});

struct KmeansResult {
    std::vector<int> labels;
    int chosen_k = 0;
    Eigen::MatrixXd centroids;               // for chosen_k, in score space
    std::map<int, double> silhouette_by_k;
};

/// Lloyd's algorithm with k-means++ seeding and 10 restarts per k; picks the
/// k in `k_range` maximizing the mean silhouette (ties to the smaller k).
/// Throws when rows < max k or every restart yields an empty cluster.
KmeansResult kmeans_silhouette(const Eigen::MatrixXd& scores, std::span<const int> k_range,
                               uint64_t seed);

struct TierAssignment {
    std::vector<std::string> player_ids;
    std::vector<std::string> tier_names;  // per player
    int chosen_k = 0;
    std::map<int, double> silhouette_by_k;
    int pca_components = 0;
};

/// Ranks clusters by centroid mean minutes (descending; ties by centroid
/// usage rate, then cluster size) and maps the four-cluster case onto
/// HighUsageStar / StartingRole / Rotation / Reserve (generic Tier1..k
/// otherwise). Players with fewer than 10 games are always Reserve.
TierAssignment label_tiers(const KmeansResult& clusters, const PlayerFeatures& features,
                           std::span<const size_t> clustered_rows);

/// Full pipeline: filter to players with >= 10 games, z-score + PCA at the
/// variance target, k-means over k_range, tier labels.
TierAssignment cluster_players(const PlayerFeatures& features, double variance_target,
                               std::span<const int> k_range, uint64_t seed);

}  // namespace mspem

#endif
