#pragma once

// Independent reference computations used by the tests. Everything here works
// on the raw (expanded) data with dense LU/QR solves and shares no code path
// with the library's aggregated Cholesky implementation.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <vector>

#include "cgb/kernel.hpp"

namespace oracle {

inline double se(double r, double l) { return std::exp(-r * r / (2.0 * l * l)); }

// 2^{1-nu}/Gamma(nu) (sqrt(2 nu) r/l)^nu K_nu(sqrt(2 nu) r/l), equal to 1 at r = 0.
inline double matern_bessel(double nu, double r, double l) {
    if (r == 0.0) return 1.0;
    const double z = std::sqrt(2.0 * nu) * r / l;
    return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(z, nu) * std::cyl_bessel_k(nu, z);
}

inline Eigen::MatrixXd raw_gram(const cgb::KernelSpec& k, const std::vector<Eigen::VectorXd>& xs) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cgb::kernel_eval(k, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
    return g;
}

struct MeanVar {
    double mean;
    double var;
};

// mu = k_t(q)^T (K_t + lambda I)^{-1} y,  sigma^2 = k(q,q) - k_t(q)^T (K_t + lambda I)^{-1} k_t(q)
inline MeanVar raw_posterior(const cgb::KernelSpec& k, const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys,
                             double lambda, const Eigen::VectorXd& q) {
    if (xs.empty()) return {0.0, cgb::kernel_eval(k, q, q)};
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd a = raw_gram(k, xs) + lambda * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd kq(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kq(i) = cgb::kernel_eval(k, xs[static_cast<std::size_t>(i)], q);
        y(i) = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    return {kq.dot(lu.solve(y)), cgb::kernel_eval(k, q, q) - kq.dot(lu.solve(kq))};
}

// 1/2 ln det(I + K_t / lambda) through the LU determinant.
inline double raw_info_gain(const cgb::KernelSpec& k, const std::vector<Eigen::VectorXd>& xs, double lambda) {
    if (xs.empty()) return 0.0;
    const auto n = static_cast<Eigen::Index>(xs.size());
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + raw_gram(k, xs) / lambda;
    return 0.5 * std::log(Eigen::FullPivLU<Eigen::MatrixXd>(a).determinant());
}

// Per-index averaged reward vector: entry i is the mean of all y_j with x_j = x_i.
inline std::vector<double> averaged_rewards(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = 0.0;
        int c = 0;
        for (std::size_t j = 0; j < xs.size(); ++j)
            if (xs[j] == xs[i]) {
                s += ys[j];
                ++c;
            }
        out[i] = s / c;
    }
    return out;
}

// Variance over a finite domain from raw index sequences, used to replay the
// selection loop independently.
inline Eigen::VectorXd raw_domain_variance(const Eigen::MatrixXd& gram, const std::vector<std::size_t>& seq, double lambda) {
    const auto n = gram.rows();
    if (seq.empty()) return gram.diagonal();
    const auto t = static_cast<Eigen::Index>(seq.size());
    Eigen::MatrixXd kt(t, t), kx(t, n);
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j < t; ++j)
            kt(i, j) = gram(static_cast<Eigen::Index>(seq[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(seq[static_cast<std::size_t>(j)]));
        kx.row(i) = gram.row(static_cast<Eigen::Index>(seq[static_cast<std::size_t>(i)]));
    }
    kt.diagonal().array() += lambda;
    const Eigen::MatrixXd sol = Eigen::FullPivLU<Eigen::MatrixXd>(kt).solve(kx);
    return gram.diagonal() - (kx.array() * sol.array()).colwise().sum().transpose().matrix();
}

inline double raw_domain_logdet(const Eigen::MatrixXd& gram, const std::vector<std::size_t>& seq, double lambda) {
    const auto t = static_cast<Eigen::Index>(seq.size());
    if (t == 0) return 0.0;
    Eigen::MatrixXd a(t, t);
    for (Eigen::Index i = 0; i < t; ++i)
        for (Eigen::Index j = 0; j < t; ++j)
            a(i, j) = gram(static_cast<Eigen::Index>(seq[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(seq[static_cast<std::size_t>(j)])) / lambda;
    a += Eigen::MatrixXd::Identity(t, t);
    return std::log(Eigen::FullPivLU<Eigen::MatrixXd>(a).determinant());
}

// Selection loop of the rare-switching batch, recomputed from raw sequences.
struct Selection {
    std::vector<std::size_t> seq;
    std::vector<long> switches;
};

inline Selection raw_select(const Eigen::MatrixXd& gram, const std::vector<std::size_t>& active, long l, double eta,
                            double lambda) {
    Selection s;
    Eigen::VectorXd cache = raw_domain_variance(gram, {}, lambda);
    double anchor = 0.0;
    for (long t = 1; t <= l; ++t) {
        std::size_t best = active.front();
        for (auto a : active)
            if (cache(static_cast<Eigen::Index>(a)) > cache(static_cast<Eigen::Index>(best))) best = a;
        s.seq.push_back(best);
        const double ld = raw_domain_logdet(gram, s.seq, lambda);
        if (ld > std::log(eta) + anchor + 1e-12) {
            anchor = ld;
            cache = raw_domain_variance(gram, s.seq, lambda);
            s.switches.push_back(t);
        }
    }
    return s;
}

// Least squares on every individual play: Gamma = sum_t x_t x_t^T, theta = Gamma^{-1} sum_t x_t y_t.
inline Eigen::VectorXd raw_normal_equations(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& ys) {
    const auto d = xs.front().size();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        g += xs[i] * xs[i].transpose();
        r += xs[i] * ys[i];
    }
    return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(g).solve(r);
}

}  // namespace oracle
