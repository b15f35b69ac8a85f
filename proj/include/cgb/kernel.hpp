#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgb {

using Point = Eigen::VectorXd;

enum class KernelFamily { Linear, SquaredExponential, Matern };

// Kernel family plus hyperparameters. Every supported family satisfies
// k(x, x') <= 1 on its admissible inputs (the unit ball for Linear).
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 1.0;
    double nu = 2.5;  // Matern only; one of 0.5, 1.5, 2.5

    static KernelSpec linear() { return {KernelFamily::Linear, 1.0, 2.5}; }
    static KernelSpec squared_exponential(double l) { return {KernelFamily::SquaredExponential, l, 2.5}; }
    static KernelSpec matern(double nu, double l) { return {KernelFamily::Matern, l, nu}; }

    void validate() const {
        if (family == KernelFamily::Linear) return;
        if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
            throw std::invalid_argument("kernel lengthscale must be positive");
        if (family == KernelFamily::Matern && nu != 0.5 && nu != 1.5 && nu != 2.5)
            throw std::invalid_argument("unsupported Matern smoothness nu=" + std::to_string(nu) +
                                        " (supported: 0.5, 1.5, 2.5)");
    }
};

inline std::string to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::Linear: return "linear";
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::Matern: return "matern";
    }
    return "?";
}

namespace detail {

// Linear-kernel inputs are the caller's responsibility to rescale.
inline void require_unit_ball(const Point& x) {
    if (x.squaredNorm() > 1.0 + 1e-12)
        throw std::domain_error("linear kernel input outside the unit ball (norm " +
                                std::to_string(x.norm()) + ")");
}

inline double matern_closed_form(double nu, double r_over_l) {
    if (nu == 0.5) return std::exp(-r_over_l);
    if (nu == 1.5) {
        const double a = std::sqrt(3.0) * r_over_l;
        return (1.0 + a) * std::exp(-a);
    }
    const double a = std::sqrt(5.0) * r_over_l;
    return (1.0 + a + a * a / 3.0) * std::exp(-a);
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const Point& x, const Point& y) {
    if (x.size() != y.size())
        throw std::invalid_argument("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()) + ")");
    spec.validate();
    switch (spec.family) {
        case KernelFamily::Linear:
            detail::require_unit_ball(x);
            detail::require_unit_ball(y);
            return x.dot(y);
        case KernelFamily::SquaredExponential: {
            const double d2 = (x - y).squaredNorm();
            return std::exp(-d2 / (2.0 * spec.lengthscale * spec.lengthscale));
        }
        case KernelFamily::Matern:
            return detail::matern_closed_form(spec.nu, (x - y).norm() / spec.lengthscale);
    }
    throw std::invalid_argument("kernel_eval: unknown kernel family");
}

inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const Point> pts) {
    if (pts.empty()) throw std::invalid_argument("gram_matrix: empty point list");
    spec.validate();
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = kernel_eval(spec, pts[i], pts[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel_eval(spec, pts[i], pts[j]);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Column vector [k(p_i, q)]_i.
inline Eigen::VectorXd kernel_column(const KernelSpec& spec, std::span<const Point> pts, const Point& q) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) out(static_cast<Eigen::Index>(i)) = kernel_eval(spec, pts[i], q);
    return out;
}

// Finite, ordered action set. The order is part of the contract: ties are
// always broken towards the lowest index.
class Domain {
public:
    Domain() = default;

    explicit Domain(std::vector<Point> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("domain must contain at least one point");
        dim_ = points_.front().size();
        for (const auto& p : points_)
            if (p.size() != dim_) throw std::invalid_argument("domain points have mixed dimensions");
        require_distinct();
    }

    // `res` evenly spaced values per axis over [lo, hi] (endpoints included),
    // enumerated with the last coordinate varying fastest.
    static Domain grid(double lo, double hi, int res, int dim) {
        if (res < 1 || dim < 1) throw std::invalid_argument("grid needs res >= 1 and dim >= 1");
        if (!(hi > lo) && res > 1) throw std::invalid_argument("grid needs hi > lo");
        std::vector<double> axis(static_cast<std::size_t>(res));
        for (int i = 0; i < res; ++i) axis[static_cast<std::size_t>(i)] = res == 1 ? lo : lo + (hi - lo) * i / (res - 1);
        std::size_t total = 1;
        for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(res);
        std::vector<Point> pts;
        pts.reserve(total);
        std::vector<int> digits(static_cast<std::size_t>(dim), 0);
        for (std::size_t n = 0; n < total; ++n) {
            Point p(dim);
            for (int d = 0; d < dim; ++d) p(d) = axis[static_cast<std::size_t>(digits[static_cast<std::size_t>(d)])];
            pts.push_back(std::move(p));
            for (int d = dim - 1; d >= 0; --d) {
                if (++digits[static_cast<std::size_t>(d)] < res) break;
                digits[static_cast<std::size_t>(d)] = 0;
            }
        }
        return Domain(std::move(pts));
    }

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return dim_; }
    [[nodiscard]] const Point& operator[](std::size_t i) const { return points_[i]; }
    [[nodiscard]] std::span<const Point> points() const noexcept { return points_; }

private:
    void require_distinct() const {
        std::vector<std::size_t> order(points_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto lex_less = [&](std::size_t a, std::size_t b) {
            const auto& pa = points_[a];
            const auto& pb = points_[b];
            for (Eigen::Index d = 0; d < dim_; ++d)
                if (pa(d) != pb(d)) return pa(d) < pb(d);
            return false;
        };
        std::sort(order.begin(), order.end(), lex_less);
        for (std::size_t i = 1; i < order.size(); ++i)
            if (points_[order[i]] == points_[order[i - 1]])
                throw std::invalid_argument("domain points must be pairwise distinct (indices " +
                                            std::to_string(order[i - 1]) + ", " + std::to_string(order[i]) + ")");
    }

    std::vector<Point> points_;
    Eigen::Index dim_ = 0;
};

inline Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const Domain& domain) {
    return gram_matrix(spec, domain.points());
}

}  // namespace cgb
