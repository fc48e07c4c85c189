#include "mspem/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

SplineBasis::SplineBasis(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
    if (degree_ < 0) throw std::invalid_argument("SplineBasis: degree must be >= 0");
    if (static_cast<int>(knots_.size()) < 2 * (degree_ + 1))
        throw std::invalid_argument("SplineBasis: knot vector too short for degree");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
        throw std::invalid_argument("SplineBasis: knots must be non-decreasing");
    num_bases_ = static_cast<int>(knots_.size()) - degree_ - 1;
    if (knots_.front() >= knots_.back())
        throw std::invalid_argument("SplineBasis: degenerate domain");
}

SplineBasis SplineBasis::from_quantiles(int degree, int num_bases, double lo, double hi,
                                        std::span<const double> values) {
    if (num_bases < degree + 1)
        throw std::invalid_argument("SplineBasis: num_bases must be >= degree + 1");
    const int n_interior = num_bases - degree - 1;
    std::vector<double> knots;
    knots.insert(knots.end(), degree + 1, lo);
    if (n_interior > 0) {
        std::vector<double> sorted(values.begin(), values.end());
        std::sort(sorted.begin(), sorted.end());
        for (int q = 1; q <= n_interior; ++q) {
            double p = static_cast<double>(q) / (n_interior + 1);
            double k = sorted.empty() ? lo + p * (hi - lo) : quantile_sorted(sorted, p);
            knots.push_back(std::clamp(k, lo, hi));
        }
    }
    knots.insert(knots.end(), degree + 1, hi);
    return SplineBasis(degree, std::move(knots));
}

SplineBasis SplineBasis::uniform(int degree, int num_bases, double lo, double hi) {
    if (num_bases < degree + 1)
        throw std::invalid_argument("SplineBasis: num_bases must be >= degree + 1");
    const int n_interior = num_bases - degree - 1;
    std::vector<double> knots;
    knots.insert(knots.end(), degree + 1, lo);
    for (int q = 1; q <= n_interior; ++q)
        knots.push_back(lo + (hi - lo) * q / (n_interior + 1));
    knots.insert(knots.end(), degree + 1, hi);
    return SplineBasis(degree, std::move(knots));
}

Eigen::RowVectorXd SplineBasis::row(double x) const {
    if (x < domain_min() || x > domain_max()) {
        std::ostringstream msg;
        msg << "eval_basis: x = " << x << " outside basis domain [" << domain_min() << ", "
            << domain_max() << "]";
        throw std::domain_error(msg.str());
    }
    const int m = static_cast<int>(knots_.size()) - 1;  // number of degree-0 slots
    // Closed right end: treat the right boundary as belonging to the last
    // non-empty span.
    const bool right_edge = (x >= knots_.back());

    // Cox-de Boor, bottom up over the full knot vector; 0/0 terms are 0.
    std::vector<double> n_prev(m, 0.0);
    for (int j = 0; j < m; ++j) {
        if (right_edge) {
            if (knots_[j] < knots_[j + 1] && knots_[j + 1] >= knots_.back()) {
                n_prev[j] = 1.0;
                break;  // only the last non-empty span is occupied
            }
        } else if (knots_[j] <= x && x < knots_[j + 1]) {
            n_prev[j] = 1.0;
        }
    }
    std::vector<double> n_cur;
    for (int d = 1; d <= degree_; ++d) {
        n_cur.assign(m - d, 0.0);
        for (int j = 0; j < m - d; ++j) {
            double left = 0.0, right = 0.0;
            if (knots_[j + d] > knots_[j] && n_prev[j] != 0.0)
                left = (x - knots_[j]) / (knots_[j + d] - knots_[j]) * n_prev[j];
            if (knots_[j + d + 1] > knots_[j + 1] && n_prev[j + 1] != 0.0)
                right = (knots_[j + d + 1] - x) / (knots_[j + d + 1] - knots_[j + 1]) * n_prev[j + 1];
            n_cur[j] = left + right;
        }
        n_prev.swap(n_cur);
    }
    Eigen::RowVectorXd out(num_bases_);
    for (int k = 0; k < num_bases_; ++k) out[k] = n_prev[k];
    return out;
}

Eigen::MatrixXd eval_basis(const SplineBasis& basis, std::span<const double> x) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), basis.num_bases());
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = basis.row(x[static_cast<size_t>(i)]);
    return out;
}

Eigen::MatrixXd tensor_basis(const SplineBasis& bu, const SplineBasis& bv,
                             std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw std::invalid_argument("tensor_basis: u and v must have the same length");
    const int ku = bu.num_bases();
    const int kv = bv.num_bases();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(u.size()), ku * kv);
    for (size_t i = 0; i < u.size(); ++i) {
        const Eigen::RowVectorXd ru = bu.row(u[i]);
        const Eigen::RowVectorXd rv = bv.row(v[i]);
        for (int a = 0; a < ku; ++a)
            for (int b = 0; b < kv; ++b) out(static_cast<Eigen::Index>(i), a * kv + b) = ru[a] * rv[b];
    }
    return out;
}

PenaltyBlock ridge_penalty(std::span<const int> block_sizes, const std::vector<bool>& penalized) {
    if (block_sizes.size() != penalized.size())
        throw std::invalid_argument("ridge_penalty: block_sizes and penalized must have the same length");
    int dim = 0;
    for (int s : block_sizes) {
        if (s < 0) throw std::invalid_argument("ridge_penalty: negative block size");
        dim += s;
    }
    PenaltyBlock block;
    block.block_sizes.assign(block_sizes.begin(), block_sizes.end());
    block.penalized.assign(penalized.begin(), penalized.end());
    block.matrix = Eigen::MatrixXd::Zero(dim, dim);
    int offset = 0;
    for (size_t b = 0; b < block_sizes.size(); ++b) {
        if (penalized[b])
            block.matrix.block(offset, offset, block_sizes[b], block_sizes[b]).setIdentity();
        offset += block_sizes[b];
    }
    return block;
}

}  // namespace mspem
