#include "mspem/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mspem/rng.hpp"
#include "mspem/stats.hpp"

namespace mspem {

PcaResult pca_reduce(const Eigen::MatrixXd& features, double variance_target,
                     std::span<const std::string> feature_names) {
    if (features.rows() < 2) throw std::invalid_argument("pca_reduce: need at least 2 rows");
    if (variance_target <= 0.0 || variance_target > 1.0)
        throw std::invalid_argument("pca_reduce: variance target must lie in (0,1]");

    // Z-score, dropping zero-variance columns.
    std::vector<Eigen::Index> keep;
    PcaResult result;
    const Eigen::Index n = features.rows();
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
        const double m = features.col(j).mean();
        const double var = (features.col(j).array() - m).square().sum() / (n - 1);
        if (var > 1e-12) {
            keep.push_back(j);
        } else if (!feature_names.empty()) {
            result.dropped_columns.push_back(feature_names[static_cast<size_t>(j)]);
        } else {
            result.dropped_columns.push_back("col" + std::to_string(j));
        }
    }
    if (keep.empty()) throw std::runtime_error("pca_reduce: all features have zero variance");

    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
        const auto col = features.col(keep[k]);
        const double m = col.mean();
        const double sd = std::sqrt((col.array() - m).square().sum() / (n - 1));
        z.col(static_cast<Eigen::Index>(k)) = (col.array() - m) / sd;
    }

    const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    // Eigen returns ascending eigenvalues; flip to descending.
    const Eigen::Index p = cov.rows();
    Eigen::VectorXd lambda(p);
    Eigen::MatrixXd axes(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        lambda[j] = std::max(eig.eigenvalues()[p - 1 - j], 0.0);
        axes.col(j) = eig.eigenvectors().col(p - 1 - j);
        // Sign convention: largest-magnitude loading positive.
        Eigen::Index arg = 0;
        axes.col(j).cwiseAbs().maxCoeff(&arg);
        if (axes(arg, j) < 0.0) axes.col(j) = -axes.col(j);
    }
    const double total = lambda.sum();
    double cum = 0.0;
    int retained = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        result.explained_variance_ratio.push_back(lambda[j] / total);
        if (cum < variance_target * total - 1e-12) {
            cum += lambda[j];
            ++retained;
        }
    }
    result.components = std::max(retained, 1);
    result.scores = z * axes.leftCols(result.components);
    return result;
}

namespace {

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).squaredNorm();
}

struct LloydRun {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = std::numeric_limits<double>::infinity();
    bool valid = false;
};

LloydRun lloyd_once(const Eigen::MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    LloydRun run;
    run.centroids.resize(k, x.cols());

    // k-means++ seeding.
    std::vector<Eigen::Index> seeds;
    seeds.push_back(rng.uniform_int(0, static_cast<int>(n) - 1));
    Eigen::VectorXd d2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index s : seeds) best = std::min(best, sq_dist(x.row(i), x.row(s)));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) return run;  // fewer distinct points than clusters
        double target = rng.uniform() * total;
        Eigen::Index pick = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        seeds.push_back(pick);
    }
    for (int c = 0; c < k; ++c) run.centroids.row(c) = x.row(seeds[static_cast<size_t>(c)]);

    run.labels.assign(static_cast<size_t>(n), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(x.row(i), run.centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (run.labels[static_cast<size_t>(i)] != best) {
                run.labels[static_cast<size_t>(i)] = best;
                changed = true;
            }
        }
        std::vector<int> counts(static_cast<size_t>(k), 0);
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(run.labels[static_cast<size_t>(i)]) += x.row(i);
            ++counts[static_cast<size_t>(run.labels[static_cast<size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) return run;  // empty cluster: restart
            run.centroids.row(c) = sums.row(c) / counts[static_cast<size_t>(c)];
        }
        if (!changed) break;
    }
    run.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        run.inertia += sq_dist(x.row(i), run.centroids.row(run.labels[static_cast<size_t>(i)]));
    run.valid = true;
    return run;
}

double mean_silhouette(const Eigen::MatrixXd& x, const std::vector<int>& labels, int k) {
    const Eigen::Index n = x.rows();
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<size_t>(l)];

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> dist_sum(static_cast<size_t>(k), 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[static_cast<size_t>(labels[static_cast<size_t>(j)])] +=
                std::sqrt(sq_dist(x.row(i), x.row(j)));
        }
        const int own = labels[static_cast<size_t>(i)];
        if (counts[static_cast<size_t>(own)] <= 1) continue;  // singleton: s = 0
        const double a = dist_sum[static_cast<size_t>(own)] / (counts[static_cast<size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == own || counts[static_cast<size_t>(c)] == 0) continue;
            b = std::min(b, dist_sum[static_cast<size_t>(c)] / counts[static_cast<size_t>(c)]);
        }
        if (std::isfinite(b)) total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

}  // namespace

KmeansResult kmeans_silhouette(const Eigen::MatrixXd& scores, std::span<const int> k_range,
                               uint64_t seed) {
    if (k_range.empty()) throw std::invalid_argument("kmeans_silhouette: empty k range");
    const int max_k = *std::max_element(k_range.begin(), k_range.end());
    if (scores.rows() < max_k)
        throw std::invalid_argument("kmeans_silhouette: fewer rows than the largest k");

    constexpr int kRestarts = 10;
    KmeansResult result;
    double best_sil = -2.0;
    for (int k : k_range) {
        Rng rng = Rng::substream(seed, static_cast<uint64_t>(k));
        LloydRun best_run;
        for (int r = 0; r < kRestarts; ++r) {
            LloydRun run = lloyd_once(scores, k, rng);
            if (run.valid && run.inertia < best_run.inertia) best_run = std::move(run);
        }
        if (!best_run.valid)
            throw std::runtime_error("kmeans_silhouette: empty cluster after restart exhaustion (k=" +
                                     std::to_string(k) + ")");
        const double sil = mean_silhouette(scores, best_run.labels, k);
        result.silhouette_by_k[k] = sil;
        if (sil > best_sil + 1e-12) {  // strict improvement: ties keep the smaller k
            best_sil = sil;
            result.chosen_k = k;
            result.labels = best_run.labels;
            result.centroids = best_run.centroids;
        }
    }
    return result;
}

namespace {

Eigen::Index feature_index(const PlayerFeatures& features, const std::string& name) {
    for (size_t j = 0; j < features.feature_names.size(); ++j)
        if (features.feature_names[j] == name) return static_cast<Eigen::Index>(j);
    return -1;
}

}  // namespace

TierAssignment label_tiers(const KmeansResult& clusters, const PlayerFeatures& features,
                           std::span<const size_t> clustered_rows) {
    const int k = clusters.chosen_k;
    const Eigen::Index j_min = feature_index(features, "mean_minutes");
    const Eigen::Index j_usage = feature_index(features, "usage_rate");
    if (j_min < 0) throw std::invalid_argument("label_tiers: features need a mean_minutes column");

    // Cluster-level summaries on the raw (unstandardized) features.
    std::vector<double> minutes(static_cast<size_t>(k), 0.0), usage(static_cast<size_t>(k), 0.0);
    std::vector<int> size(static_cast<size_t>(k), 0);
    for (size_t r = 0; r < clustered_rows.size(); ++r) {
        const int c = clusters.labels[r];
        minutes[static_cast<size_t>(c)] +=
            features.values(static_cast<Eigen::Index>(clustered_rows[r]), j_min);
        if (j_usage >= 0)
            usage[static_cast<size_t>(c)] +=
                features.values(static_cast<Eigen::Index>(clustered_rows[r]), j_usage);
        ++size[static_cast<size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
        if (size[static_cast<size_t>(c)] > 0) {
            minutes[static_cast<size_t>(c)] /= size[static_cast<size_t>(c)];
            usage[static_cast<size_t>(c)] /= size[static_cast<size_t>(c)];
        }
    }

    std::vector<int> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto ai = static_cast<size_t>(a);
        const auto bi = static_cast<size_t>(b);
        if (minutes[ai] != minutes[bi]) return minutes[ai] > minutes[bi];
        if (usage[ai] != usage[bi]) return usage[ai] > usage[bi];
        if (size[ai] != size[bi]) return size[ai] > size[bi];
        return a < b;
    });

    std::vector<std::string> tier_of_cluster(static_cast<size_t>(k));
    if (k == 4) {
        const std::vector<std::string> names = {
            to_string(Tier::high_usage_star), to_string(Tier::starting_role),
            to_string(Tier::rotation), to_string(Tier::reserve)};
        for (int rank = 0; rank < k; ++rank)
            tier_of_cluster[static_cast<size_t>(order[static_cast<size_t>(rank)])] =
                names[static_cast<size_t>(rank)];
    } else {
        for (int rank = 0; rank < k; ++rank)
            tier_of_cluster[static_cast<size_t>(order[static_cast<size_t>(rank)])] =
                "Tier" + std::to_string(rank + 1);
    }

    TierAssignment out;
    out.chosen_k = k;
    out.silhouette_by_k = clusters.silhouette_by_k;
    out.player_ids = features.player_ids;
    out.tier_names.assign(features.player_ids.size(), to_string(Tier::reserve));
    for (size_t r = 0; r < clustered_rows.size(); ++r)
        out.tier_names[clustered_rows[r]] =
            tier_of_cluster[static_cast<size_t>(clusters.labels[r])];
    // Short-season players stay Reserve regardless of cluster.
    for (size_t i = 0; i < features.player_ids.size(); ++i)
        if (features.games_played[i] < 10) out.tier_names[i] = to_string(Tier::reserve);
    return out;
}

TierAssignment cluster_players(const PlayerFeatures& features, double variance_target,
                               std::span<const int> k_range, uint64_t seed) {
    std::vector<size_t> rows;
    for (size_t i = 0; i < features.player_ids.size(); ++i)
        if (features.games_played[i] >= 10) rows.push_back(i);
    const int max_k = k_range.empty() ? 0 : *std::max_element(k_range.begin(), k_range.end());
    if (static_cast<int>(rows.size()) < max_k)
        throw std::runtime_error("cluster_players: fewer than max-k players with >= 10 games");

    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), features.values.cols());
    for (size_t r = 0; r < rows.size(); ++r)
        sub.row(static_cast<Eigen::Index>(r)) = features.values.row(static_cast<Eigen::Index>(rows[r]));

    const PcaResult pca = pca_reduce(sub, variance_target, features.feature_names);
    const KmeansResult km = kmeans_silhouette(pca.scores, k_range, seed);
    TierAssignment out = label_tiers(km, features, rows);
    out.pca_components = pca.components;
    return out;
}

}  // namespace mspem
