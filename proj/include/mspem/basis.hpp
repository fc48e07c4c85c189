#ifndef MSPEM_BASIS_HPP
#define MSPEM_BASIS_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace mspem {

/// B-spline basis of a fixed degree over a knot vector in which the two
/// boundary knots are repeated degree+1 times. Evaluation is defined on the
/// closed interval [first boundary knot, last boundary knot]; evaluating
/// exactly at the right boundary returns the left-limit value, so the last
/// basis function is 1 there instead of 0.
class SplineBasis {
public:
    SplineBasis(int degree, std::vector<double> knots);

    /// Basis over [lo, hi] with num_bases functions. Interior knots are
    /// placed at equally spaced quantiles of `values` (type-7 interpolation);
    /// boundary knots sit at lo/hi. Requires num_bases >= degree + 1.
    static SplineBasis from_quantiles(int degree, int num_bases, double lo, double hi,
                                      std::span<const double> values);

    /// Equally spaced interior knots over [lo, hi].
    static SplineBasis uniform(int degree, int num_bases, double lo, double hi);

    int degree() const { return degree_; }
    int num_bases() const { return num_bases_; }
    double domain_min() const { return knots_.front(); }
    double domain_max() const { return knots_.back(); }
    const std::vector<double>& knots() const { return knots_; }

    /// Row of all basis values at x. Throws std::domain_error (naming x) if
    /// x lies outside the basis domain.
    Eigen::RowVectorXd row(double x) const;

private:
    int degree_;
    int num_bases_;
    std::vector<double> knots_;
};

/// Block-diagonal penalty matrix and the block layout it was built from.
/// S is symmetric positive semi-definite; unpenalized blocks contribute
/// zero rows/columns.
struct PenaltyBlock {
    std::vector<int> block_sizes;
    std::vector<bool> penalized;
    Eigen::MatrixXd matrix;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

/// Design matrix (|x| x K) with entry (i,k) = B_k(x_i) via the Cox-de Boor
/// recursion. Every row sums to 1 and entries lie in [0,1].
Eigen::MatrixXd eval_basis(const SplineBasis& basis, std::span<const double> x);

/// Tensor-product design: column (a,b) is B_a(u) * B_b(v), flattened
/// row-major in (a,b), i.e. column index a * Kv + b.
Eigen::MatrixXd tensor_basis(const SplineBasis& bu, const SplineBasis& bv,
                             std::span<const double> u, std::span<const double> v);

/// Ridge penalty: identity on penalized blocks, zero on unpenalized ones.
/// The result is idempotent (S*S = S).
PenaltyBlock ridge_penalty(std::span<const int> block_sizes, const std::vector<bool>& penalized);

}  // namespace mspem

#endif
