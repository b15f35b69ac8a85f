#include <gtest/gtest.h>

#include <random>

#include "cgb/linred.hpp"
#include "oracles.hpp"

using namespace cgb;

namespace {

Domain line_grid(int n, double lo, double hi) { return Domain::grid(lo, hi, n, 1); }

Eigen::MatrixXd random_unit_rows(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd a(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = g(rng);
        a.row(i) /= a.row(i).norm();
    }
    return a;
}

}  // namespace

TEST(Newton, TwoPointExample) {
    const Domain d(std::vector<Point>{Point::Constant(1, 0.0), Point::Constant(1, 1.0)});
    const auto b = newton_basis(KernelSpec::squared_exponential(1.0), d, 0.5);
    ASSERT_EQ(b.dim(), 2u);
    EXPECT_NEAR(b.p2_history[0], 1.0 - std::exp(-1.0), 1e-12);
    EXPECT_NEAR(b.p2_history[0], 0.63212, 1e-5);
    EXPECT_EQ(b.p2_history[1], 0.0);
    EXPECT_EQ(b.center_index, (std::vector<std::size_t>{0, 1}));
}

TEST(Newton, FirstCenterIsNormalized) {
    const auto d = line_grid(30, 0.0, 1.0);
    const auto b = newton_basis(KernelSpec::squared_exponential(0.3), d, 0.05);
    EXPECT_EQ(b.center_index[0], 0u);
    const Eigen::VectorXd e1 = embed(b, b.centers[0]);
    EXPECT_NEAR(e1(0), 1.0, 1e-12);
    EXPECT_NEAR(e1.tail(e1.size() - 1).norm(), 0.0, 1e-10);
}

TEST(Newton, InterpolationStructure) {
    const auto d = line_grid(50, -1.0, 1.0);
    const auto b = newton_basis(KernelSpec::matern(2.5, 0.4), d, 0.01);
    for (std::size_t i = 0; i < b.dim(); ++i) {
        const Eigen::VectorXd n_si = embed(b, b.centers[i]);
        for (std::size_t j = i + 1; j < b.dim(); ++j) EXPECT_NEAR(n_si(static_cast<Eigen::Index>(j)), 0.0, 1e-8);
        EXPECT_GT(n_si(static_cast<Eigen::Index>(i)), 0.0);
    }
    EXPECT_LT(b.power2.maxCoeff(), 0.01 * 0.01);
    EXPECT_GE(b.power2.minCoeff(), 0.0);
}

TEST(NewtonProperty, OrthonormalInTheRkhs) {
    const auto d = Domain::grid(0.0, 1.0, 8, 2);
    const auto k = KernelSpec::squared_exponential(0.35);
    const auto b = newton_basis(k, d, 1e-3);
    const Eigen::MatrixXd kss = gram_matrix(k, std::span<const Point>(b.centers));
    const Eigen::MatrixXd l = b.coeffs.triangularView<Eigen::Lower>();
    EXPECT_LT((l * kss * l.transpose() - Eigen::MatrixXd::Identity(l.rows(), l.cols())).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(NewtonProperty, PowerFunctionIsMonotone) {
    const auto d = line_grid(80, 0.0, 1.0);
    const auto k = KernelSpec::squared_exponential(0.1);
    const auto b = newton_basis(k, d, 1e-4);
    Eigen::VectorXd p2 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < b.dim(); ++i) {
        const Eigen::VectorXd next = p2 - b.values.col(static_cast<Eigen::Index>(i)).cwiseAbs2();
        EXPECT_LE((next - p2).maxCoeff(), 1e-15);
        EXPECT_GE(next.minCoeff(), -1e-10);
        p2 = next;
    }
    for (std::size_t i = 1; i < b.p2_history.size(); ++i) EXPECT_LE(b.p2_history[i], b.p2_history[i - 1] + 1e-15);
}

TEST(NewtonProperty, EmbeddingInnerProductApproachesKernel) {
    const auto d = line_grid(40, 0.0, 1.0);
    const auto k = KernelSpec::squared_exponential(0.3);
    const auto b = newton_basis(k, d, 1e-6);
    for (std::size_t i = 0; i < d.size(); i += 3)
        for (std::size_t j = 0; j < d.size(); j += 5) EXPECT_NEAR(embed(b, d[i]).dot(embed(b, d[j])), kernel_eval(k, d[i], d[j]), 1e-4);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_LE(embed(b, d[i]).squaredNorm(), 1.0 + 1e-12);
}

TEST(NewtonProperty, DimensionShrinksAsToleranceGrows) {
    const auto d = line_grid(200, 0.0, 1.0);
    const auto k = KernelSpec::squared_exponential(0.2);
    std::size_t prev = d.size();
    std::vector<std::size_t> dims;
    for (double e : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
        const auto b = newton_basis(k, d, e);
        dims.push_back(b.dim());
        EXPECT_LE(b.dim(), prev);
        prev = b.dim();
    }
    // D(e) / log(1/e)^1.5 stays bounded across four decades.
    const auto ratio = [](std::size_t D, double e) { return static_cast<double>(D) / std::pow(std::log(1.0 / e), 1.5); };
    EXPECT_LT(ratio(dims[0], 1e-5), 3.0 * ratio(dims[3], 1e-2));
}

TEST(Newton, EmbeddedValuesMatchEmbed) {
    const auto d = Domain::grid(0.0, 1.0, 6, 2);
    const auto b = newton_basis(KernelSpec::matern(1.5, 0.5), d, 0.05);
    for (std::size_t x = 0; x < d.size(); ++x)
        EXPECT_LT((embed(b, d[x]) - embed_domain(b).row(static_cast<Eigen::Index>(x)).transpose()).norm(), 1e-10);
    EXPECT_THROW(newton_basis(KernelSpec::squared_exponential(0.5), d, 0.0), std::invalid_argument);
}

TEST(InitialEpochLength, Values) {
    EXPECT_EQ(initial_epoch_length(1), 72);
    EXPECT_EQ(initial_epoch_length(2), 144);
    EXPECT_EQ(initial_epoch_length(3), 218);
    EXPECT_EQ(initial_epoch_length(4), 294);
    EXPECT_THROW(initial_epoch_length(0), std::invalid_argument);
}

TEST(Design, SingleAction) {
    Eigen::MatrixXd a(1, 1);
    a << 0.7;
    const auto z = approx_design(a, 72);
    EXPECT_EQ(z.weights, (std::vector<double>{1.0}));
    EXPECT_NEAR(z.max_g, 1.0, 1e-12);
}

TEST(Design, StandardBasisIsUniform) {
    for (int D = 1; D <= 6; ++D) {
        const auto z = approx_design(Eigen::MatrixXd::Identity(D, D), initial_epoch_length(static_cast<std::size_t>(D)));
        EXPECT_NEAR(z.max_g, D, 1e-10);
        for (double w : z.weights) EXPECT_NEAR(w, 1.0 / D, 1e-12);
    }
}

TEST(DesignProperty, RandomActionSetsMeetBothConstraints) {
    std::mt19937_64 rng(31);
    for (int inst = 0; inst < 50; ++inst) {
        const Eigen::MatrixXd a = random_unit_rows(rng, 20, 3);
        const std::int64_t m0 = initial_epoch_length(3);
        const auto z = approx_design(a, m0);
        const auto lev = detail::leverages(a, z.weights, "test");
        EXPECT_LE(lev.maxCoeff(), 6.0 * (1.0 + 1e-9));
        EXPECT_LE(std::count_if(z.weights.begin(), z.weights.end(), [](double w) { return w > 0.0; }), m0);
        EXPECT_NEAR(std::accumulate(z.weights.begin(), z.weights.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(DesignProperty, TightSupportCapEitherHoldsOrErrors) {
    std::mt19937_64 rng(32);
    for (int inst = 0; inst < 50; ++inst) {
        const Eigen::MatrixXd a = random_unit_rows(rng, 20, 3);
        try {
            const auto z = approx_design(a, 4);
            EXPECT_LE(z.max_g, 6.0 * (1.0 + 1e-9));
            EXPECT_LE(std::count_if(z.weights.begin(), z.weights.end(), [](double w) { return w > 0.0; }), 4);
        } catch (const NumericalError&) {
        }
    }
}

TEST(Design, RankDeficientActionsAreRejected) {
    Eigen::MatrixXd a(3, 2);
    a << 1, 0, 0.5, 0, -0.3, 0;
    EXPECT_THROW(approx_design(a, 10), NumericalError);
}

TEST(RpeEstimate, RepeatedSingleAction) {
    Eigen::MatrixXd a(1, 1);
    a << 1.0;
    const std::vector<std::int64_t> u{4};
    const std::vector<double> sums{1.0 + 1.0 + 1.0 + 3.0};
    EXPECT_NEAR(rpe_estimate(a, u, sums)(0), 1.5, 1e-15);
}

TEST(RpeEstimate, NoiselessLinearRewardsRecoverTheta) {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd a = random_unit_rows(rng, 12, 4);
    const Eigen::Vector4d theta(0.3, -0.2, 0.5, 0.1);
    std::vector<std::int64_t> u(12);
    std::vector<double> sums(12);
    for (int i = 0; i < 12; ++i) {
        u[static_cast<std::size_t>(i)] = 1 + i % 3;
        sums[static_cast<std::size_t>(i)] = static_cast<double>(u[static_cast<std::size_t>(i)]) * a.row(i).dot(theta);
    }
    EXPECT_LT((rpe_estimate(a, u, sums) - theta).norm(), 1e-8);
}

TEST(RpeEstimate, CorruptedPlayMatchesNormalEquations) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 0.1);
    const Eigen::MatrixXd a = random_unit_rows(rng, 6, 3);
    const std::vector<std::int64_t> u{3, 1, 4, 2, 2, 5};
    std::vector<double> sums(6, 0.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::int64_t k = 0; k < u[i]; ++k) {
            double y = 0.4 * a(static_cast<Eigen::Index>(i), 0) + g(rng);
            if (i == 2 && k == 1) y += -1.7;
            sums[i] += y;
            xs.push_back(a.row(static_cast<Eigen::Index>(i)).transpose());
            ys.push_back(y);
        }
    EXPECT_LT((rpe_estimate(a, u, sums) - oracle::raw_normal_equations(xs, ys)).norm(), 1e-10);
}

TEST(RpeEstimate, SingularDesignErrors) {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0, 2, 0;
    EXPECT_THROW(rpe_estimate(a, std::vector<std::int64_t>{1, 1}, std::vector<double>{0.0, 0.0}), NumericalError);
}

TEST(RpeThreshold, NoMisspecificationNoCorruption) {
    const LinearElimParams p{0.0, 0.1, 0.1, 0.0};
    const auto m0 = initial_epoch_length(1);
    EXPECT_NEAR(rpe_threshold(p, 1, m0, m0), 4.0 * std::sqrt(std::log(10.0) / static_cast<double>(m0)), 1e-15);
    const LinearElimParams q{0.01, 0.1, 0.1, 20.0};
    const double spread = std::sqrt(3.0 * (1.0 + 0.1 * 218.0));
    EXPECT_NEAR(rpe_threshold(q, 3, 218, 436), 4 * 0.01 * spread + 4 * std::sqrt(3.0 / 436 * std::log(10.0)) + 4 * 20.0 / (0.1 * 436) * spread,
                1e-12);
    const LinearElimParams tiny_alpha{0.0, 1e-12, 0.1, 1.0};
    EXPECT_GT(rpe_threshold(tiny_alpha, 3, 218, 218), 1e9);
}

TEST(RpeEliminate, KeepsWithinThreshold) {
    Eigen::MatrixXd a(3, 2);
    a << 1, 0, 0, 1, 0.6, 0.6;
    const Eigen::Vector2d theta(1.0, 0.2);
    const std::vector<std::size_t> ids{10, 11, 12};
    EXPECT_EQ(rpe_eliminate(a, ids, theta, 0.5), (std::vector<std::size_t>{10, 12}));
    EXPECT_EQ(rpe_eliminate(a, ids, theta, 0.0), (std::vector<std::size_t>{10}));
    EXPECT_EQ(rpe_eliminate(a, ids, theta, 10.0).size(), 3u);
}

TEST(RpeLinear, ExactLinearInstanceHasSublinearRegret) {
    std::mt19937_64 rng(15);
    const Eigen::MatrixXd a = random_unit_rows(rng, 20, 3) * 0.9;
    const Eigen::Vector3d theta(0.8, -0.3, 0.4);
    std::vector<double> f(20);
    for (int i = 0; i < 20; ++i) f[static_cast<std::size_t>(i)] = a.row(i).dot(theta);
    Environment env{GroundTruth::from_values(f), 0.02};
    AttackLedger ledger(AttackParams{}, f);
    Rng noise(1);
    const auto r = run_rpe_linear(LinearElimParams{0.0, 0.1, 0.1, 0.0}, a, env, ledger, noise, 2000);
    ASSERT_EQ(r.trace.rows.size(), 2000u);
    const double first = r.trace.rows[999].cum_regret, total = r.trace.cumulative_regret();
    EXPECT_LT(total - first, first);
    for (const auto& e : r.epochs) {
        EXPECT_LE(e.max_g, 2.0 * static_cast<double>(e.span_dim) + 1e-9);
        EXPECT_LE(e.support_size, static_cast<std::size_t>(r.m0));
    }
}
