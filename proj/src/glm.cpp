#include "mspem/glm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

namespace {

constexpr int kMaxIterations = 100;
constexpr double kRelTol = 1e-9;

void check_spec(const GlmSpec& spec) {
    const Eigen::Index n = spec.design.rows();
    const Eigen::Index p = spec.design.cols();
    if (spec.response.size() != n)
        throw std::invalid_argument("fit_glm: response length does not match design rows");
    if (spec.offset.size() != 0 && spec.offset.size() != n)
        throw std::invalid_argument("fit_glm: offset length does not match design rows");
    if (spec.weights.size() != 0 && spec.weights.size() != n)
        throw std::invalid_argument("fit_glm: weights length does not match design rows");
    if (spec.weights.size() != 0 && (spec.weights.array() < 0.0).any())
        throw std::invalid_argument("fit_glm: negative observation weight");
    if (spec.penalty.dim() != 0 && spec.penalty.dim() != p)
        throw std::invalid_argument("fit_glm: penalty dimension does not match design columns");
    if (spec.alpha < 0.0) throw std::invalid_argument("fit_glm: alpha must be >= 0");
    if (spec.family == Family::binomial_logit && spec.offset.size() != 0)
        throw std::invalid_argument("fit_glm: offset is only supported for the Poisson family");
}

Eigen::VectorXd effective_offset(const GlmSpec& spec) {
    if (spec.offset.size() != 0) return spec.offset;
    return Eigen::VectorXd::Zero(spec.design.rows());
}

Eigen::VectorXd effective_weights(const GlmSpec& spec) {
    if (spec.weights.size() != 0) return spec.weights;
    return Eigen::VectorXd::Ones(spec.design.rows());
}

double penalty_term(const GlmSpec& spec, const Eigen::VectorXd& beta) {
    if (spec.penalty.dim() == 0 || spec.alpha == 0.0) return 0.0;
    return 0.5 * spec.alpha * beta.dot(spec.penalty.matrix * beta);
}

}  // namespace

Eigen::VectorXd linear_predictor(const GlmSpec& spec, const Eigen::VectorXd& beta) {
    return effective_offset(spec) + spec.design * beta;
}

Eigen::VectorXd fitted_mean(const GlmSpec& spec, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = linear_predictor(spec, beta);
    if (spec.family == Family::poisson_log) return eta.array().exp();
    return eta.unaryExpr([](double x) { return logistic(x); });
}

double glm_loglik(const GlmSpec& spec, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = linear_predictor(spec, beta);
    const Eigen::VectorXd w = effective_weights(spec);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double y = spec.response[i];
        if (spec.family == Family::poisson_log) {
            ll += w[i] * (y * eta[i] - std::exp(eta[i]) - std::lgamma(y + 1.0));
        } else {
            // y*eta - log(1 + e^eta), computed stably
            const double log1pe = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i]))
                                             : std::log1p(std::exp(eta[i]));
            ll += w[i] * (y * eta[i] - log1pe);
        }
    }
    return ll;
}

Eigen::VectorXd glm_score(const GlmSpec& spec, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd mu = fitted_mean(spec, beta);
    const Eigen::VectorXd w = effective_weights(spec);
    Eigen::VectorXd score =
        spec.design.transpose() * (w.array() * (spec.response - mu).array()).matrix();
    if (spec.penalty.dim() != 0 && spec.alpha > 0.0)
        score -= spec.alpha * (spec.penalty.matrix * beta);
    return score;
}

FitResult fit_glm(const GlmSpec& spec) {
    check_spec(spec);
    const Eigen::Index n = spec.design.rows();
    const Eigen::Index p = spec.design.cols();
    const Eigen::VectorXd off = effective_offset(spec);
    const Eigen::VectorXd w = effective_weights(spec);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double objective = glm_loglik(spec, beta) - penalty_term(spec, beta);

    FitResult result;
    result.trace.push_back(objective);

    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        const Eigen::VectorXd eta = off + spec.design * beta;
        Eigen::VectorXd mu(n), irls_w(n), z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (spec.family == Family::poisson_log) {
                mu[i] = std::exp(eta[i]);
                const double v = std::max(mu[i], 1e-12);
                irls_w[i] = w[i] * v;
                z[i] = (eta[i] - off[i]) + (spec.response[i] - mu[i]) / v;
            } else {
                mu[i] = logistic(eta[i]);
                const double v = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
                irls_w[i] = w[i] * v;
                z[i] = eta[i] + (spec.response[i] - mu[i]) / v;
            }
        }
        Eigen::MatrixXd info = spec.design.transpose() * irls_w.asDiagonal() * spec.design;
        if (spec.penalty.dim() != 0 && spec.alpha > 0.0) info += spec.alpha * spec.penalty.matrix;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        const Eigen::VectorXd rhs = spec.design.transpose() * (irls_w.array() * z.array()).matrix();
        Eigen::VectorXd proposal = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !proposal.allFinite() ||
            (info * proposal - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm())) {
            throw std::runtime_error(
                "fit_glm: singular penalized information matrix; consider a larger alpha");
        }

        // Step-halving keeps the penalized objective non-decreasing.
        Eigen::VectorXd step = proposal - beta;
        double candidate_obj = 0.0;
        Eigen::VectorXd candidate;
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            candidate = beta + step;
            candidate_obj = glm_loglik(spec, candidate) - penalty_term(spec, candidate);
            if (std::isfinite(candidate_obj) && candidate_obj >= objective - 1e-12) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.converged = true;  // no ascent direction left: at the optimum
            result.iterations = iter;
            break;
        }

        const double rel_change =
            std::abs(candidate_obj - objective) / (std::abs(objective) + 1.0);
        beta = candidate;
        objective = candidate_obj;
        result.trace.push_back(objective);
        result.iterations = iter;
        if (rel_change < kRelTol) {
            result.converged = true;
            break;
        }
        if (spec.family == Family::binomial_logit && beta.lpNorm<Eigen::Infinity>() > 1e3) {
            throw std::runtime_error(
                "fit_glm: coefficients diverging; data appear perfectly separated");
        }
    }

    if (!result.converged) {
        std::ostringstream msg;
        msg << "fit_glm: no convergence after " << kMaxIterations << " iterations; trace:";
        for (double v : result.trace) msg << " " << v;
        throw std::runtime_error(msg.str());
    }
    if (spec.family == Family::binomial_logit) {
        // Perfect separation: the likelihood climbs to ~0 while the log-odds
        // diverge, so "convergence" is an artifact of the asymptote.
        const Eigen::VectorXd eta = off + spec.design * beta;
        if (eta.lpNorm<Eigen::Infinity>() > 15.0 &&
            objective > -1e-6 * static_cast<double>(n)) {
            throw std::runtime_error(
                "fit_glm: coefficients diverging; data appear perfectly separated");
        }
    }

    result.coefficients = beta;
    result.penalized_loglik = objective;
    result.loglik = glm_loglik(spec, beta);

    // Penalized Fisher information at the solution; covariance and edf.
    const Eigen::VectorXd mu = fitted_mean(spec, beta);
    Eigen::VectorXd irls_w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        irls_w[i] = spec.family == Family::poisson_log ? w[i] * mu[i]
                                                       : w[i] * mu[i] * (1.0 - mu[i]);
    const Eigen::MatrixXd fisher = spec.design.transpose() * irls_w.asDiagonal() * spec.design;
    Eigen::MatrixXd penalized_fisher = fisher;
    if (spec.penalty.dim() != 0 && spec.alpha > 0.0)
        penalized_fisher += spec.alpha * spec.penalty.matrix;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(penalized_fisher);
    result.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    result.edf = (ldlt.solve(fisher)).trace();
    result.aic = -2.0 * result.loglik + 2.0 * result.edf;
    return result;
}

double edf(const GlmSpec& spec, const FitResult& fit) {
    if (!fit.converged) throw std::invalid_argument("edf: fit did not converge");
    const Eigen::VectorXd mu = fitted_mean(spec, fit.coefficients);
    const Eigen::VectorXd w = effective_weights(spec);
    Eigen::VectorXd irls_w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        irls_w[i] = spec.family == Family::poisson_log ? w[i] * mu[i]
                                                       : w[i] * mu[i] * (1.0 - mu[i]);
    const Eigen::MatrixXd fisher = spec.design.transpose() * irls_w.asDiagonal() * spec.design;
    Eigen::MatrixXd penalized_fisher = fisher;
    if (spec.penalty.dim() != 0 && spec.alpha > 0.0)
        penalized_fisher += spec.alpha * spec.penalty.matrix;
    return Eigen::LDLT<Eigen::MatrixXd>(penalized_fisher).solve(fisher).trace();
}

namespace {

double held_out_deviance(const GlmSpec& spec, const Eigen::VectorXd& beta,
                         const std::vector<Eigen::Index>& rows) {
    double dev = 0.0;
    for (Eigen::Index i : rows) {
        const double off = spec.offset.size() != 0 ? spec.offset[i] : 0.0;
        const double w = spec.weights.size() != 0 ? spec.weights[i] : 1.0;
        const double eta = off + spec.design.row(i) * beta;
        const double y = spec.response[i];
        if (spec.family == Family::poisson_log) {
            const double mu = std::exp(eta);
            const double term = y > 0.0 ? y * std::log(y / mu) - (y - mu) : mu;
            dev += 2.0 * w * term;
        } else {
            const double mu = logistic(eta);
            double term = 0.0;
            if (y > 0.0) term += y * std::log(y / std::max(mu, 1e-12));
            if (y < 1.0) term += (1.0 - y) * std::log((1.0 - y) / std::max(1.0 - mu, 1e-12));
            dev += 2.0 * w * term;
        }
    }
    return dev;
}

}  // namespace

CvResult grouped_cv_alpha(const GlmSpec& spec, const std::vector<std::string>& groups, int folds,
                          const std::vector<double>& grid) {
    if (folds < 2) throw std::invalid_argument("grouped_cv_alpha: need at least 2 folds");
    if (grid.empty()) throw std::invalid_argument("grouped_cv_alpha: empty alpha grid");
    if (static_cast<Eigen::Index>(groups.size()) != spec.design.rows())
        throw std::invalid_argument("grouped_cv_alpha: groups length does not match design rows");

    // Sorted distinct groups dealt round-robin: deterministic and keeps each
    // player's rows together.
    std::map<std::string, int> fold_of;
    for (const auto& g : groups) fold_of.emplace(g, 0);
    if (static_cast<int>(fold_of.size()) < folds)
        throw std::runtime_error("grouped_cv_alpha: fewer distinct groups than folds");
    {
        int f = 0;
        for (auto& [key, fold] : fold_of) {
            fold = f;
            f = (f + 1) % folds;
        }
    }

    std::vector<std::vector<Eigen::Index>> held(folds);
    for (Eigen::Index i = 0; i < spec.design.rows(); ++i)
        held[static_cast<size_t>(fold_of.at(groups[static_cast<size_t>(i)]))].push_back(i);

    CvResult cv;
    cv.grid = grid;
    cv.mean_deviance.assign(grid.size(), 0.0);

    Eigen::Index total_rows = spec.design.rows();
    for (size_t a = 0; a < grid.size(); ++a) {
        double dev_sum = 0.0;
        for (int f = 0; f < folds; ++f) {
            std::vector<Eigen::Index> train;
            train.reserve(static_cast<size_t>(total_rows) - held[static_cast<size_t>(f)].size());
            for (int g = 0; g < folds; ++g)
                if (g != f)
                    train.insert(train.end(), held[static_cast<size_t>(g)].begin(),
                                 held[static_cast<size_t>(g)].end());

            GlmSpec sub = spec;
            sub.alpha = grid[a];
            sub.design.resize(static_cast<Eigen::Index>(train.size()), spec.design.cols());
            sub.response.resize(static_cast<Eigen::Index>(train.size()));
            if (spec.offset.size() != 0) sub.offset.resize(static_cast<Eigen::Index>(train.size()));
            if (spec.weights.size() != 0) sub.weights.resize(static_cast<Eigen::Index>(train.size()));
            for (size_t r = 0; r < train.size(); ++r) {
                sub.design.row(static_cast<Eigen::Index>(r)) = spec.design.row(train[r]);
                sub.response[static_cast<Eigen::Index>(r)] = spec.response[train[r]];
                if (spec.offset.size() != 0) sub.offset[static_cast<Eigen::Index>(r)] = spec.offset[train[r]];
                if (spec.weights.size() != 0)
                    sub.weights[static_cast<Eigen::Index>(r)] = spec.weights[train[r]];
            }
            const FitResult fit = fit_glm(sub);
            dev_sum += held_out_deviance(spec, fit.coefficients, held[static_cast<size_t>(f)]);
        }
        cv.mean_deviance[a] = dev_sum / static_cast<double>(total_rows);
    }

    // Minimum deviance; near-ties resolve to the larger alpha.
    size_t best = 0;
    for (size_t a = 1; a < grid.size(); ++a)
        if (cv.mean_deviance[a] < cv.mean_deviance[best]) best = a;
    const double tol = std::abs(cv.mean_deviance[best]) * 1e-9 + 1e-12;
    for (size_t a = 0; a < grid.size(); ++a)
        if (cv.mean_deviance[a] <= cv.mean_deviance[best] + tol && grid[a] > grid[best]) best = a;
    cv.alpha = grid[best];
    return cv;
}

std::vector<double> default_alpha_grid() {
    return {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
}

}  // namespace mspem
