#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgb/adversary.hpp"
#include "cgb/environment.hpp"
#include "cgb/errors.hpp"
#include "cgb/kernel.hpp"

namespace cgb {

// Greedy interpolation basis over a finite domain. N_i(x) =
// sum_{j<=i} coeffs(i, j) k(x, s_j) with the centers s_j picked by maximal
// power function.
struct NewtonBasis {
    KernelSpec kernel;
    std::vector<std::size_t> center_index;  // into the domain
    std::vector<Point> centers;
    Eigen::MatrixXd coeffs;      // D x D lower triangular
    Eigen::MatrixXd values;      // |X| x D, values(x, i) = N_i(x)
    Eigen::VectorXd power2;      // P^2_D over the domain
    std::vector<double> p2_history;  // max P^2 after each added center
    double e = 0.0;

    [[nodiscard]] std::size_t dim() const noexcept { return centers.size(); }
};

// Pivot values below this are treated as already interpolated.
inline constexpr double kNewtonPivotFloor = 1e-13;

inline NewtonBasis newton_basis(const KernelSpec& kernel, const Domain& domain, double e) {
    if (!(e > 0.0)) throw std::invalid_argument("newton_basis: e must be positive");
    kernel.validate();
    const auto n = static_cast<Eigen::Index>(domain.size());
    NewtonBasis b;
    b.kernel = kernel;
    b.e = e;
    b.power2.resize(n);
    for (Eigen::Index x = 0; x < n; ++x) b.power2(x) = kernel_eval(kernel, domain[static_cast<std::size_t>(x)], domain[static_cast<std::size_t>(x)]);
    std::vector<Eigen::VectorXd> cols;
    while (static_cast<Eigen::Index>(cols.size()) < n) {
        Eigen::Index s = 0;
        for (Eigen::Index x = 1; x < n; ++x)
            if (b.power2(x) > b.power2(s)) s = x;
        const double pivot = b.power2(s);
        if (!cols.empty() && (pivot < e * e || pivot <= kNewtonPivotFloor)) break;
        if (!(pivot > 0.0)) throw NumericalError("newton_basis: non-positive pivot at the first center");
        const auto si = static_cast<std::size_t>(s);
        Eigen::VectorXd u(n);
        for (Eigen::Index x = 0; x < n; ++x) u(x) = kernel_eval(kernel, domain[static_cast<std::size_t>(x)], domain[si]);
        for (const auto& c : cols) u -= c(s) * c;
        u /= std::sqrt(pivot);
        b.power2 -= u.cwiseAbs2();
        b.power2 = b.power2.cwiseMax(0.0);
        b.power2(s) = 0.0;
        cols.push_back(std::move(u));
        b.center_index.push_back(si);
        b.centers.push_back(domain[si]);
        b.p2_history.push_back(b.power2.maxCoeff());
    }
    const auto d = static_cast<Eigen::Index>(cols.size());
    b.values.resize(n, d);
    for (Eigen::Index i = 0; i < d; ++i) b.values.col(i) = cols[static_cast<std::size_t>(i)];
    // V(i, j) = N_j(s_i) is lower triangular and k_S(x) = V N(x).
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) v(i, j) = b.values(static_cast<Eigen::Index>(b.center_index[static_cast<std::size_t>(i)]), j);
    b.coeffs = v.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
    return b;
}

// x~ = (N_1(x), ..., N_D(x)).
inline Eigen::VectorXd embed(const NewtonBasis& basis, const Point& x) {
    const auto d = static_cast<Eigen::Index>(basis.dim());
    Eigen::VectorXd k(d);
    for (Eigen::Index j = 0; j < d; ++j) k(j) = kernel_eval(basis.kernel, x, basis.centers[static_cast<std::size_t>(j)]);
    return basis.coeffs.triangularView<Eigen::Lower>() * k;
}

// m_0 = ceil(4 D (max(ln ln D, 0) + 18)).
inline std::int64_t initial_epoch_length(std::size_t D) {
    if (D < 1) throw std::invalid_argument("initial_epoch_length: D must be >= 1");
    const double d = static_cast<double>(D);
    const double lnln = D >= 2 ? std::log(std::log(d)) : 0.0;
    return static_cast<std::int64_t>(std::ceil(4.0 * d * (std::max(lnln, 0.0) + 18.0)));
}

struct Design {
    std::vector<double> weights;  // aligned with the action rows
    double max_g = 0.0;           // max_x x^T Gamma(zeta)^{-1} x
    int iterations = 0;
};

namespace detail {

inline Eigen::MatrixXd design_matrix(const Eigen::MatrixXd& actions, std::span<const double> w) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(actions.cols(), actions.cols());
    for (Eigen::Index i = 0; i < actions.rows(); ++i)
        if (w[static_cast<std::size_t>(i)] > 0.0)
            g.selfadjointView<Eigen::Lower>().rankUpdate(actions.row(i).transpose(), w[static_cast<std::size_t>(i)]);
    return g.selfadjointView<Eigen::Lower>();
}

// Leverage x^T Gamma^{-1} x for every action row.
inline Eigen::VectorXd leverages(const Eigen::MatrixXd& actions, std::span<const double> w, const char* what) {
    const Eigen::MatrixXd g = design_matrix(actions, w);
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 1e-12 * std::max(1.0, g.diagonal().maxCoeff()))
        throw NumericalError(std::string(what) + ": singular design matrix");
    const Eigen::MatrixXd z = llt.matrixL().solve(actions.transpose());
    return z.colwise().squaredNorm().transpose();
}

}  // namespace detail

// Approximate G-optimal design over the action rows (|A| x D): Frank-Wolfe
// with exact line search on log det Gamma, from uniform weights, until
// max leverage <= 2D. The support is then pruned to at most m0 points.
inline Design approx_design(const Eigen::MatrixXd& actions, std::int64_t m0, int max_iter = 10000) {
    const auto n = static_cast<std::size_t>(actions.rows());
    const double D = static_cast<double>(actions.cols());
    if (n == 0) throw std::invalid_argument("approx_design: empty action set");
    Design out;
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd g = detail::leverages(actions, out.weights, "approx_design");
    Eigen::Index k = 0;
    double gmax = g.maxCoeff(&k);
    while (gmax > 2.0 * D) {
        if (out.iterations >= max_iter)
            throw NumericalError("approx_design: leverage bound not met within " + std::to_string(max_iter) + " iterations");
        const double step = (gmax / D - 1.0) / (gmax - 1.0);
        for (auto& w : out.weights) w *= 1.0 - step;
        out.weights[static_cast<std::size_t>(k)] += step;
        ++out.iterations;
        g = detail::leverages(actions, out.weights, "approx_design");
        gmax = g.maxCoeff(&k);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (auto& w : out.weights)
        if (w < 1e-6) w = 0.0;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.weights[a] < out.weights[b]; });
    std::size_t support = static_cast<std::size_t>(std::count_if(out.weights.begin(), out.weights.end(), [](double w) { return w > 0.0; }));
    for (std::size_t i = 0; i < n && support > static_cast<std::size_t>(m0); ++i) {
        if (out.weights[order[i]] > 0.0) {
            out.weights[order[i]] = 0.0;
            --support;
        }
    }
    const double total = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (auto& w : out.weights) w /= total;
    out.max_g = detail::leverages(actions, out.weights, "approx_design (pruned)").maxCoeff();
    if (out.max_g > 2.0 * D * (1.0 + 1e-9))
        throw NumericalError("approx_design: pruned design violates the leverage bound");
    return out;
}

// theta = Gamma^{-1} sum_x x~ (reward sum at x), Gamma = sum_x u(x) x~ x~^T.
inline Eigen::VectorXd rpe_estimate(const Eigen::MatrixXd& actions, std::span<const std::int64_t> plays,
                                    std::span<const double> reward_sums) {
    if (plays.size() != static_cast<std::size_t>(actions.rows()) || reward_sums.size() != plays.size())
        throw std::invalid_argument("rpe_estimate: size mismatch");
    std::vector<double> u(plays.begin(), plays.end());
    const Eigen::MatrixXd gamma = detail::design_matrix(actions, u);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(actions.cols());
    for (Eigen::Index i = 0; i < actions.rows(); ++i) rhs += actions.row(i).transpose() * reward_sums[static_cast<std::size_t>(i)];
    Eigen::LLT<Eigen::MatrixXd> llt(gamma);
    if (llt.info() != Eigen::Success ||
        llt.matrixLLT().diagonal().minCoeff() <= 1e-12 * std::max(1.0, gamma.diagonal().maxCoeff()))
        throw NumericalError("rpe_estimate: singular design matrix");
    return llt.solve(rhs);
}

struct LinearElimParams {
    double Delta = 0.0;  // misspecification level
    double alpha = 0.1;
    double delta = 0.1;
    double C = 0.0;
};

// 4 Delta sqrt(D(1 + alpha m0)) + 4 sqrt((D/m_h) ln(1/delta)) + 4 C/(alpha m_h) sqrt(D(1 + alpha m0))
inline double rpe_threshold(const LinearElimParams& p, std::size_t D, std::int64_t m0, std::int64_t m_h) {
    const double d = static_cast<double>(D);
    const double spread = std::sqrt(d * (1.0 + p.alpha * static_cast<double>(m0)));
    const double mh = static_cast<double>(m_h);
    return 4.0 * p.Delta * spread + 4.0 * std::sqrt(d / mh * std::log(1.0 / p.delta)) +
           4.0 * p.C / (p.alpha * mh) * spread;
}

// Keeps row i iff max_j <theta, a_j - a_i> <= threshold.
inline std::vector<std::size_t> rpe_eliminate(const Eigen::MatrixXd& actions, std::span<const std::size_t> ids,
                                              const Eigen::VectorXd& theta, double threshold) {
    const Eigen::VectorXd score = actions * theta;
    const double best = score.maxCoeff();
    std::vector<std::size_t> keep;
    for (Eigen::Index i = 0; i < score.size(); ++i)
        if (best - score(i) <= threshold) keep.push_back(ids[static_cast<std::size_t>(i)]);
    return keep;
}

struct LinearEpochRecord {
    int h = 0;
    std::int64_t m_h = 0;
    std::size_t span_dim = 0;
    std::vector<std::size_t> active;
    std::vector<double> design;         // aligned with active
    double max_g = 0.0;
    std::size_t support_size = 0;
    std::vector<std::int64_t> plays;    // aligned with active
    Eigen::VectorXd theta;              // in embedding coordinates
    double threshold = 0.0;
    bool truncated = false;
    std::vector<std::size_t> active_after;
};

struct LinearResult {
    RegretTrace trace;
    std::vector<LinearEpochRecord> epochs;
    std::int64_t m0 = 0;
};

// Robust phased elimination over embedded actions (rows of `embedded`, one
// per domain index). Each epoch works in an orthonormal basis of the span of
// the surviving actions so the design stays nonsingular after eliminations.
inline LinearResult run_rpe_linear(const LinearElimParams& params, const Eigen::MatrixXd& embedded,
                                   const Environment& env, AttackLedger& ledger, Rng& noise, std::int64_t horizon) {
    if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(params.delta > 0.0 && params.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    const auto n = static_cast<std::size_t>(embedded.rows());
    const auto D = static_cast<std::size_t>(embedded.cols());
    LinearResult result;
    result.trace.algorithm = "rpe_linear";
    result.m0 = initial_epoch_length(D);
    Episode ep(env, ledger, noise, horizon, result.trace);
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::int64_t m_h = result.m0;
    for (int h = 0; !ep.done(); ++h, m_h *= 2) {
        LinearEpochRecord rec;
        rec.h = h;
        rec.m_h = m_h;
        rec.active = active;

        Eigen::MatrixXd a(static_cast<Eigen::Index>(active.size()), embedded.cols());
        for (std::size_t i = 0; i < active.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = embedded.row(static_cast<Eigen::Index>(active[i]));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
        const double top = eig.eigenvalues().maxCoeff();
        std::vector<Eigen::Index> keep_dirs;
        for (Eigen::Index j = 0; j < eig.eigenvalues().size(); ++j)
            if (eig.eigenvalues()(j) > 1e-10 * std::max(top, 1e-300)) keep_dirs.push_back(j);
        Eigen::MatrixXd q(embedded.cols(), static_cast<Eigen::Index>(keep_dirs.size()));
        for (std::size_t j = 0; j < keep_dirs.size(); ++j) q.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(keep_dirs[j]);
        rec.span_dim = keep_dirs.size();
        const Eigen::MatrixXd z = a * q;

        const Design design = approx_design(z, result.m0);
        rec.design = design.weights;
        rec.max_g = design.max_g;
        rec.plays.assign(active.size(), 0);
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (design.weights[i] <= 0.0) continue;
            ++rec.support_size;
            rec.plays[i] = static_cast<std::int64_t>(std::ceil(static_cast<double>(m_h) * std::max(design.weights[i], params.alpha)));
        }
        std::int64_t planned = 0;
        for (auto p : rec.plays) planned += p;
        result.trace.epoch_marks.push_back({h, ep.played() + 1, active.size(), rec.support_size, planned});

        const AlgorithmView view{LearnerKind::RpeLinear, active, false, false};
        std::vector<double> sums(active.size(), 0.0);
        for (std::size_t i = 0; i < active.size() && !rec.truncated; ++i)
            for (std::int64_t k = 0; k < rec.plays[i]; ++k) {
                if (ep.done()) {
                    rec.truncated = true;
                    break;
                }
                sums[i] += ep.play(active[i], view);
            }
        if (rec.truncated) {
            rec.active_after = active;
            result.epochs.push_back(std::move(rec));
            break;
        }

        const Eigen::VectorXd theta_z = rpe_estimate(z, rec.plays, sums);
        rec.theta = q * theta_z;
        rec.threshold = rpe_threshold(params, D, result.m0, m_h);
        const auto next = rpe_eliminate(z, active, theta_z, rec.threshold);
        rec.active_after = next;
        if (next.size() < active.size()) ledger.later_trigger_check({LearnerKind::RpeLinear, next, true, false});
        active = next;
        result.epochs.push_back(std::move(rec));
    }
    result.trace.final_active = active;
    return result;
}

// Embedded coordinates for every domain point.
inline Eigen::MatrixXd embed_domain(const NewtonBasis& basis) { return basis.values; }

}  // namespace cgb
