#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgb/kernel.hpp"
#include "cgb/linalg.hpp"

namespace cgb {

struct PosteriorQueryResult {
    double mean = 0.0;
    double variance = 0.0;
};

// Distinct actions with play counts and reward sums. Repeated plays of the
// same action are summarized by (count, sum): m plays with noise variance
// lambda are equivalent to one play of the average with variance lambda/m.
class AggregatedDataset {
public:
    AggregatedDataset(KernelSpec kernel, double lambda) : kernel_(kernel), lambda_(lambda) {
        kernel_.validate();
        if (!(lambda_ > 0.0)) throw std::invalid_argument("lambda must be positive");
    }

    // Merges with an existing action only on exact coordinate equality.
    void add(const Point& x, double reward) { add_aggregate(x, 1, reward); }

    void add_aggregate(const Point& x, std::int64_t count, double reward_sum) {
        if (count < 1) throw std::invalid_argument("aggregated count must be >= 1");
        if (!actions_.empty() && x.size() != actions_.front().size())
            throw std::invalid_argument("AggregatedDataset: dimension mismatch");
        for (std::size_t i = 0; i < actions_.size(); ++i) {
            if (actions_[i] == x) {
                counts_[i] += count;
                sums_[i] += reward_sum;
                return;
            }
        }
        actions_.push_back(x);
        counts_.push_back(count);
        sums_.push_back(reward_sum);
    }

    static AggregatedDataset from_observations(KernelSpec kernel, double lambda, std::span<const Point> xs,
                                               std::span<const double> ys) {
        if (xs.size() != ys.size()) throw std::invalid_argument("from_observations: size mismatch");
        AggregatedDataset d(kernel, lambda);
        for (std::size_t i = 0; i < xs.size(); ++i) d.add(xs[i], ys[i]);
        return d;
    }

    [[nodiscard]] const KernelSpec& kernel() const noexcept { return kernel_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] std::span<const Point> actions() const noexcept { return actions_; }
    [[nodiscard]] std::span<const std::int64_t> counts() const noexcept { return counts_; }
    [[nodiscard]] std::span<const double> reward_sums() const noexcept { return sums_; }
    [[nodiscard]] std::size_t size() const noexcept { return actions_.size(); }
    [[nodiscard]] bool empty() const noexcept { return actions_.empty(); }

    [[nodiscard]] std::int64_t total_count() const noexcept {
        std::int64_t n = 0;
        for (auto c : counts_) n += c;
        return n;
    }

private:
    KernelSpec kernel_;
    double lambda_;
    std::vector<Point> actions_;
    std::vector<std::int64_t> counts_;
    std::vector<double> sums_;
};

namespace detail {

// Factorization of B = W K_d W + lambda I with W = diag(sqrt(u)). B is the
// symmetrically rescaled K_d + lambda U^{-1}, so for k_q = [k(x_i, q)]:
//   mean(q)     = k_q^T W B^{-1} W ybar
//   variance(q) = k(q,q) - k_q^T W B^{-1} W k_q
//   ln det(I + K_d U / lambda) = ln det B - d ln lambda.
class CountWeightedSystem {
public:
    CountWeightedSystem(const Eigen::MatrixXd& gram, const Eigen::VectorXd& counts, const Eigen::VectorXd& sums,
                        double lambda)
        : lambda_(lambda), w_(counts.array().sqrt().matrix()) {
        const auto d = gram.rows();
        if (d == 0) return;
        Eigen::MatrixXd b = w_.asDiagonal() * gram * w_.asDiagonal();
        b.diagonal().array() += lambda;
        llt_ = jittered_cholesky(b, "posterior system");
        // W ybar = S / sqrt(u)
        const Eigen::VectorXd wy = (sums.array() / w_.array()).matrix();
        alpha_ = w_.asDiagonal() * llt_.solve(wy);
        log_det_ = llt_log_det(llt_) - static_cast<double>(d) * std::log(lambda);
    }

    [[nodiscard]] Eigen::Index size() const noexcept { return w_.size(); }

    [[nodiscard]] double mean(const Eigen::VectorXd& k_q) const {
        if (size() == 0) return 0.0;
        return k_q.dot(alpha_);
    }

    [[nodiscard]] double variance(const Eigen::VectorXd& k_q, double k_qq) const {
        if (size() == 0) return k_qq;
        const Eigen::VectorXd v = llt_.matrixL().solve((w_.array() * k_q.array()).matrix());
        return std::clamp(k_qq - v.squaredNorm(), 0.0, std::max(k_qq, 0.0));
    }

    // Variances for each column of k_cols (d x m) against prior diagonal k_diag.
    [[nodiscard]] Eigen::VectorXd variances(const Eigen::MatrixXd& k_cols, const Eigen::VectorXd& k_diag) const {
        if (size() == 0) return k_diag;
        const Eigen::MatrixXd v = llt_.matrixL().solve(w_.asDiagonal() * k_cols);
        Eigen::VectorXd out = k_diag - v.colwise().squaredNorm().transpose();
        for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::clamp(out(i), 0.0, std::max(k_diag(i), 0.0));
        return out;
    }

    [[nodiscard]] const Eigen::VectorXd& mean_weights() const noexcept { return alpha_; }

    // ln det(I + lambda^{-1} U^{1/2} K_d U^{1/2}); zero when empty.
    [[nodiscard]] double log_det() const noexcept { return log_det_; }

    [[nodiscard]] const Eigen::LLT<Eigen::MatrixXd>& factor() const noexcept { return llt_; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return w_; }

private:
    double lambda_;
    Eigen::VectorXd w_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
    double log_det_ = 0.0;
};

inline Eigen::VectorXd to_vector(std::span<const std::int64_t> c) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = static_cast<double>(c[i]);
    return v;
}

inline Eigen::VectorXd to_vector(std::span<const double> c) {
    return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

}  // namespace detail

// Posterior of an AggregatedDataset, factorized once for repeated queries.
class Posterior {
public:
    explicit Posterior(const AggregatedDataset& data)
        : kernel_(data.kernel()),
          actions_(data.actions().begin(), data.actions().end()),
          system_(data.empty() ? Eigen::MatrixXd() : gram_matrix(data.kernel(), data.actions()),
                  detail::to_vector(data.counts()), detail::to_vector(data.reward_sums()), data.lambda()) {}

    [[nodiscard]] PosteriorQueryResult query(const Point& q) const {
        const double k_qq = kernel_eval(kernel_, q, q);
        if (actions_.empty()) return {0.0, k_qq};
        const Eigen::VectorXd k_q = kernel_column(kernel_, actions_, q);
        return {system_.mean(k_q), system_.variance(k_q, k_qq)};
    }

    [[nodiscard]] double log_det() const noexcept { return system_.log_det(); }

private:
    KernelSpec kernel_;
    std::vector<Point> actions_;
    detail::CountWeightedSystem system_;
};

// Posterior mean and variance, identical to evaluating the raw-observation
// formulas on the expanded dataset (each action repeated count times).
inline PosteriorQueryResult posterior_mean_var(const AggregatedDataset& data, const Point& query) {
    if (!data.empty() && query.size() != data.actions().front().size())
        throw std::invalid_argument("posterior_mean_var: query dimension mismatch");
    return Posterior(data).query(query);
}

// Robust mean: the raw-observation mean formula applied to the per-action
// averaged reward vector. In aggregated form the averaging is implicit, so
// this coincides with posterior_mean_var(...).mean.
inline double robust_mean(const AggregatedDataset& data, const Point& query) {
    return posterior_mean_var(data, query).mean;
}

// 1/2 ln det(I_t + K_t / lambda) of the expanded multiset.
inline double info_gain(const AggregatedDataset& data) {
    if (data.empty()) return 0.0;
    return 0.5 * Posterior(data).log_det();
}

// ln det(I_t + K_t / lambda); the quantity compared by the switching rule.
inline double log_det(const AggregatedDataset& data) { return 2.0 * info_gain(data); }

// Log-scale slack below which a determinant ratio counts as equal to eta.
inline constexpr double kSwitchTolerance = 1e-12;

// True iff det(current) > eta * det(anchor), compared in log space. Ratios
// within rounding of eta (e.g. the first pick with k(x,x) = lambda = 1,
// eta = 2) do not switch.
inline bool switch_test_log(double current_logdet, double anchor_logdet, double eta) {
    if (!(eta > 1.0)) throw std::invalid_argument("switch_test: eta must exceed 1");
    return current_logdet > std::log(eta) + anchor_logdet + kSwitchTolerance;
}

inline bool switch_test(const AggregatedDataset& current, double anchor_logdet, double eta) {
    return switch_test_log(log_det(current), anchor_logdet, eta);
}

// Posterior over a fixed finite domain whose Gram matrix is precomputed.
// Actions are domain indices; used inside the bandit loops.
class IndexedPosterior {
public:
    IndexedPosterior(const Eigen::MatrixXd& domain_gram, std::span<const std::size_t> indices,
                     std::span<const std::int64_t> counts, std::span<const double> sums, double lambda)
        : gram_(&domain_gram),
          indices_(indices.begin(), indices.end()),
          system_(sub_gram(domain_gram, indices), detail::to_vector(counts), detail::to_vector(sums), lambda) {}

    // Variance-only constructor (rewards irrelevant).
    IndexedPosterior(const Eigen::MatrixXd& domain_gram, std::span<const std::size_t> indices,
                     std::span<const std::int64_t> counts, double lambda)
        : IndexedPosterior(domain_gram, indices, counts, std::vector<double>(indices.size(), 0.0), lambda) {}

    [[nodiscard]] double mean_at(std::size_t x) const { return system_.mean(column(x)); }

    [[nodiscard]] double variance_at(std::size_t x) const {
        const auto xi = static_cast<Eigen::Index>(x);
        return system_.variance(column(x), (*gram_)(xi, xi));
    }

    [[nodiscard]] Eigen::VectorXd variances_at(std::span<const std::size_t> xs) const {
        Eigen::MatrixXd cols(static_cast<Eigen::Index>(indices_.size()), static_cast<Eigen::Index>(xs.size()));
        Eigen::VectorXd diag(static_cast<Eigen::Index>(xs.size()));
        for (std::size_t j = 0; j < xs.size(); ++j) {
            cols.col(static_cast<Eigen::Index>(j)) = column(xs[j]);
            diag(static_cast<Eigen::Index>(j)) = (*gram_)(static_cast<Eigen::Index>(xs[j]), static_cast<Eigen::Index>(xs[j]));
        }
        return system_.variances(cols, diag);
    }

    [[nodiscard]] double log_det() const noexcept { return system_.log_det(); }

private:
    static Eigen::MatrixXd sub_gram(const Eigen::MatrixXd& g, std::span<const std::size_t> idx) {
        const auto d = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd out(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                out(i, j) = g(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                              static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
        return out;
    }

    [[nodiscard]] Eigen::VectorXd column(std::size_t x) const {
        Eigen::VectorXd k(static_cast<Eigen::Index>(indices_.size()));
        for (std::size_t i = 0; i < indices_.size(); ++i)
            k(static_cast<Eigen::Index>(i)) = (*gram_)(static_cast<Eigen::Index>(indices_[i]), static_cast<Eigen::Index>(x));
        return k;
    }

    const Eigen::MatrixXd* gram_;
    std::vector<std::size_t> indices_;
    detail::CountWeightedSystem system_;
};

// Sequentially updated posterior over every point of a finite domain.
// Each observation is a rank-one update of the full posterior covariance;
// every `refresh_every` observations the state is rebuilt exactly from the
// aggregated counts and sums to cap floating-point drift.
class DomainPosterior {
public:
    DomainPosterior(const Eigen::MatrixXd& domain_gram, double lambda, int refresh_every = 512)
        : gram_(&domain_gram),
          lambda_(lambda),
          refresh_every_(refresh_every),
          mean_(Eigen::VectorXd::Zero(domain_gram.rows())),
          cov_(domain_gram),
          counts_(static_cast<std::size_t>(domain_gram.rows()), 0),
          sums_(static_cast<std::size_t>(domain_gram.rows()), 0.0) {
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    }

    void observe(std::size_t x, double y) {
        const auto xi = static_cast<Eigen::Index>(x);
        counts_[x] += 1;
        sums_[x] += y;
        ++total_;
        if (refresh_every_ > 0 && ++since_refresh_ >= refresh_every_) {
            refresh();
            return;
        }
        const Eigen::VectorXd s = cov_.col(xi);
        const double denom = s(xi) + lambda_;
        mean_ += s * ((y - mean_(xi)) / denom);
        cov_.noalias() -= (s / denom) * s.transpose();
    }

    // Rebuilds mean and covariance from the aggregated data.
    void refresh() {
        since_refresh_ = 0;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < counts_.size(); ++i)
            if (counts_[i] > 0) idx.push_back(i);
        if (idx.empty()) {
            mean_.setZero();
            cov_ = *gram_;
            return;
        }
        const auto d = static_cast<Eigen::Index>(idx.size());
        const auto n = gram_->rows();
        Eigen::MatrixXd k_dn(d, n);
        Eigen::VectorXd u(d), s(d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const auto ia = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]);
            k_dn.row(a) = gram_->row(ia);
            u(a) = static_cast<double>(counts_[idx[static_cast<std::size_t>(a)]]);
            s(a) = sums_[idx[static_cast<std::size_t>(a)]];
        }
        Eigen::MatrixXd k_dd(d, d);
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b)
                k_dd(a, b) = k_dn(a, static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
        const detail::CountWeightedSystem sys(k_dd, u, s, lambda_);
        mean_ = k_dn.transpose() * sys.mean_weights();
        const Eigen::MatrixXd a = sys.factor().matrixL().solve(sys.weights().asDiagonal() * k_dn);
        cov_ = *gram_;
        cov_.noalias() -= a.transpose() * a;
    }

    [[nodiscard]] double mean(std::size_t x) const { return mean_(static_cast<Eigen::Index>(x)); }

    [[nodiscard]] double variance(std::size_t x) const {
        const auto xi = static_cast<Eigen::Index>(x);
        return std::clamp(cov_(xi, xi), 0.0, std::max((*gram_)(xi, xi), 0.0));
    }

    [[nodiscard]] double stddev(std::size_t x) const { return std::sqrt(variance(x)); }
    [[nodiscard]] std::size_t size() const noexcept { return counts_.size(); }
    [[nodiscard]] std::int64_t total() const noexcept { return total_; }
    [[nodiscard]] std::span<const std::int64_t> counts() const noexcept { return counts_; }
    [[nodiscard]] std::span<const double> sums() const noexcept { return sums_; }

private:
    const Eigen::MatrixXd* gram_;
    double lambda_;
    int refresh_every_;
    int since_refresh_ = 0;
    std::int64_t total_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    std::vector<std::int64_t> counts_;
    std::vector<double> sums_;
};

}  // namespace cgb
