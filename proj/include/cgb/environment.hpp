#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgb/adversary.hpp"
#include "cgb/kernel.hpp"
#include "cgb/linalg.hpp"
#include "cgb/rng.hpp"

namespace cgb {

enum class GroundTruthKind { GpSample, Analytic };

// Objective table over a domain. The argmax breaks ties towards the lowest
// index.
struct GroundTruth {
    GroundTruthKind kind = GroundTruthKind::Analytic;
    std::vector<double> values;
    std::size_t argmax_index = 0;
    double f_max = 0.0;
    // RKHS norm when known (analytic kernel combinations), NaN otherwise.
    double rkhs_norm = std::numeric_limits<double>::quiet_NaN();

    static GroundTruth from_values(std::vector<double> v, GroundTruthKind kind = GroundTruthKind::Analytic) {
        if (v.empty()) throw std::invalid_argument("ground truth table is empty");
        GroundTruth g;
        g.kind = kind;
        g.values = std::move(v);
        g.argmax_index = 0;
        for (std::size_t i = 1; i < g.values.size(); ++i)
            if (g.values[i] > g.values[g.argmax_index]) g.argmax_index = i;
        g.f_max = g.values[g.argmax_index];
        return g;
    }

    [[nodiscard]] double gap(std::size_t x) const { return f_max - values[x]; }
};

// One draw from N(0, K + 1e-10 I) over the domain.
inline GroundTruth sample_gp_function(const KernelSpec& kernel, const Domain& domain, std::uint64_t seed) {
    if (domain.size() > 10000) throw std::invalid_argument("sample_gp_function: domain larger than 1e4 points");
    Eigen::MatrixXd k = gram_matrix(kernel, domain);
    k.diagonal().array() += 1e-10;
    const auto llt = detail::jittered_cholesky(k, "sample_gp_function");
    Rng rng = make_stream(seed, 0, StreamRole::GpSample);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(domain.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const Eigen::VectorXd f = llt.matrixL() * z;
    return GroundTruth::from_values(std::vector<double>(f.data(), f.data() + f.size()), GroundTruthKind::GpSample);
}

// f = sum_j a_j k(., x_{anchor_j}), with its exact RKHS norm sqrt(a^T K_aa a).
inline GroundTruth rkhs_function(const KernelSpec& kernel, const Domain& domain, std::span<const std::size_t> anchors,
                                 std::span<const double> coeffs) {
    if (anchors.size() != coeffs.size() || anchors.empty())
        throw std::invalid_argument("rkhs_function: anchors/coefficients mismatch");
    std::vector<double> v(domain.size(), 0.0);
    for (std::size_t i = 0; i < domain.size(); ++i)
        for (std::size_t j = 0; j < anchors.size(); ++j) v[i] += coeffs[j] * kernel_eval(kernel, domain[i], domain[anchors[j]]);
    double norm2 = 0.0;
    for (std::size_t a = 0; a < anchors.size(); ++a)
        for (std::size_t b = 0; b < anchors.size(); ++b)
            norm2 += coeffs[a] * coeffs[b] * kernel_eval(kernel, domain[anchors[a]], domain[anchors[b]]);
    auto g = GroundTruth::from_values(std::move(v));
    g.rkhs_norm = std::sqrt(std::max(norm2, 0.0));
    return g;
}

// Random kernel combination over `n_anchors` distinct domain points, scaled
// to the requested RKHS norm.
inline GroundTruth random_rkhs_function(const KernelSpec& kernel, const Domain& domain, std::size_t n_anchors,
                                        double norm, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0, StreamRole::Instance);
    std::vector<std::size_t> all(domain.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min(n_anchors, domain.size()));
    std::sort(all.begin(), all.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> a(all.size());
    for (auto& c : a) c = normal(rng);
    const auto raw = rkhs_function(kernel, domain, all, a);
    const double scale = raw.rkhs_norm > 0.0 ? norm / raw.rkhs_norm : 0.0;
    for (auto& c : a) c *= scale;
    return rkhs_function(kernel, domain, all, a);
}

struct Environment {
    GroundTruth truth;
    double noise_sigma = 0.0;
};

struct Observation {
    double y = 0.0;        // f(x) + noise
    double c = 0.0;        // corruption
    double y_tilde = 0.0;  // y + c, what the learner sees
};

// y = f(x) + N(0, sigma^2); the adversary then adds c_t.
inline Observation observe(const Environment& env, AttackLedger& ledger, std::size_t x, std::int64_t t, Rng& rng,
                           const AlgorithmView& view) {
    if (x >= env.truth.values.size()) throw std::out_of_range("observe: action outside the domain");
    double eps = 0.0;
    if (env.noise_sigma > 0.0) eps = std::normal_distribution<double>(0.0, env.noise_sigma)(rng);
    Observation o;
    o.y = env.truth.values[x] + eps;
    o.c = ledger.corrupt(t, x, o.y, view);
    o.y_tilde = o.y + o.c;
    return o;
}

struct TraceRow {
    std::int64_t t = 0;
    std::size_t action = 0;
    double y = 0.0;  // observed (corrupted) reward
    double c = 0.0;
    double instant_regret = 0.0;
    double cum_regret = 0.0;
};

struct EpochMark {
    int h = 0;
    std::int64_t t_start = 0;
    std::size_t active_size = 0;
    std::size_t support_size = 0;
    std::int64_t epoch_len = 0;
};

struct RegretTrace {
    std::string algorithm;
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<TraceRow> rows;
    std::vector<EpochMark> epoch_marks;
    // Active set at termination (elimination methods); empty for UCB.
    std::vector<std::size_t> final_active;

    [[nodiscard]] double cumulative_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
};

// Drives one trial: noise, corruption and regret bookkeeping per play.
class Episode {
public:
    Episode(const Environment& env, AttackLedger& ledger, Rng& noise, std::int64_t horizon, RegretTrace& trace)
        : env_(&env), ledger_(&ledger), rng_(&noise), horizon_(horizon), trace_(&trace) {
        if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
        trace_->rows.reserve(static_cast<std::size_t>(horizon));
    }

    [[nodiscard]] bool done() const noexcept { return played_ >= horizon_; }
    [[nodiscard]] std::int64_t played() const noexcept { return played_; }
    [[nodiscard]] std::int64_t horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::int64_t remaining() const noexcept { return horizon_ - played_; }
    [[nodiscard]] AttackLedger& ledger() noexcept { return *ledger_; }
    [[nodiscard]] const Environment& environment() const noexcept { return *env_; }

    // Plays x, logs the round and returns the corrupted reward.
    double play(std::size_t x, const AlgorithmView& view) {
        if (done()) throw std::logic_error("Episode::play past the horizon");
        ++played_;
        const Observation o = observe(*env_, *ledger_, x, played_, *rng_, view);
        const double r = env_->truth.gap(x);
        cum_ += r;
        trace_->rows.push_back({played_, x, o.y_tilde, o.c, r, cum_});
        return o.y_tilde;
    }

private:
    const Environment* env_;
    AttackLedger* ledger_;
    Rng* rng_;
    std::int64_t horizon_;
    RegretTrace* trace_;
    std::int64_t played_ = 0;
    double cum_ = 0.0;
};

struct AggregateRow {
    std::int64_t t = 0;
    double mean_cum_regret = 0.0;
    double std_cum_regret = 0.0;
};

// Per-round mean and sample standard deviation (n-1; zero for one trial) of
// cumulative regret across traces, over the shortest trace length.
inline std::vector<AggregateRow> aggregate_traces(std::span<const RegretTrace> traces) {
    std::vector<AggregateRow> out;
    if (traces.empty()) return out;
    std::size_t len = traces.front().rows.size();
    for (const auto& tr : traces) len = std::min(len, tr.rows.size());
    out.reserve(len);
    const double n = static_cast<double>(traces.size());
    for (std::size_t i = 0; i < len; ++i) {
        double sum = 0.0;
        for (const auto& tr : traces) sum += tr.rows[i].cum_regret;
        const double mean = sum / n;
        double ss = 0.0;
        for (const auto& tr : traces) ss += (tr.rows[i].cum_regret - mean) * (tr.rows[i].cum_regret - mean);
        const double sd = traces.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        out.push_back({traces.front().rows[i].t, mean, sd});
    }
    return out;
}

}  // namespace cgb
