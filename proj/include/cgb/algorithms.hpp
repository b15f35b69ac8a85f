#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgb/adversary.hpp"
#include "cgb/environment.hpp"
#include "cgb/kernel.hpp"
#include "cgb/posterior.hpp"

namespace cgb {

enum class WidthMode { Theoretical, Practical };
enum class BetaMode { Constant, FiniteDomain, Adaptive, SqrtLog };

// Confidence multiplier schedule.
//   Constant:     beta = value
//   FiniteDomain: beta_h = B + (sigma/sqrt(lambda)) sqrt(2 ln(|X|/delta_h))
//   Adaptive:     beta_h = B + sigma sqrt(2 (gamma_bar + 1 + ln(1/delta_h)))
//   SqrtLog:      beta_t = value * sqrt(ln t), evaluated at t >= 2
// with delta_h = 6 delta / ((h+1)^2 pi^2). For the per-round UCB schedules
// the round index t plays the role of h+1.
struct BetaSchedule {
    BetaMode mode = BetaMode::Constant;
    double value = 4.0;
    double B = 1.0;
    double delta = 0.1;
    double noise_sigma = 0.02;
    double lambda = 1.0;
    std::size_t domain_size = 1;
    double gamma_bar = 0.0;

    [[nodiscard]] double epoch(int h) const { return at_index(static_cast<double>(h) + 1.0); }

    [[nodiscard]] double round(std::int64_t t) const {
        if (mode == BetaMode::SqrtLog) return value * std::sqrt(std::log(static_cast<double>(std::max<std::int64_t>(t, 2))));
        return at_index(static_cast<double>(std::max<std::int64_t>(t, 1)));
    }

private:
    [[nodiscard]] double at_index(double i) const {
        const double delta_i = 6.0 * delta / (i * i * std::numbers::pi * std::numbers::pi);
        switch (mode) {
            case BetaMode::Constant: return value;
            case BetaMode::FiniteDomain:
                return B + noise_sigma / std::sqrt(lambda) *
                               std::sqrt(2.0 * std::log(static_cast<double>(domain_size) / delta_i));
            case BetaMode::Adaptive: return B + noise_sigma * std::sqrt(2.0 * (gamma_bar + 1.0 + std::log(1.0 / delta_i)));
            case BetaMode::SqrtLog: return value * std::sqrt(std::log(std::max(i, 2.0)));
        }
        return value;
    }
};

struct ConfidenceConfig {
    BetaSchedule beta;
    WidthMode mode = WidthMode::Practical;
    double b = 0.1;
    double C = 0.0;  // corruption budget known to the learner
    double psi = 0.5;
    double eta = 2.0;
    double lambda = 1.0;

    void validate() const {
        if (!(eta > 1.0)) throw std::invalid_argument("eta must exceed 1");
        if (!(psi > 0.0)) throw std::invalid_argument("psi must be positive");
        if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
        if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("b must lie in (0, 1]");
        if (!(C >= 0.0)) throw std::invalid_argument("C must be >= 0");
    }
};

// Per-epoch state of the robust phased-elimination learner.
struct EpochState {
    int h = 0;
    std::int64_t l_h = 2;
    std::vector<std::size_t> active;         // X_h, ascending
    std::vector<std::size_t> selection_seq;  // x_1..x_{l_h}
    std::vector<std::size_t> support;        // S_h, ascending
    std::vector<std::int64_t> select_counts; // times each support entry was selected
    std::vector<double> xi;                  // aligned with support
    std::vector<std::int64_t> plays;         // u_h(x), aligned with support
    std::int64_t anchor_t = 0;               // t'
    double anchor_logdet = 0.0;
    double selection_logdet = 0.0;           // ln det(I + K/lambda) of the full selection
    std::vector<double> sigma_cache;         // sigma_{t'} over active
    std::vector<std::int64_t> switch_rounds;

    [[nodiscard]] std::int64_t epoch_len() const {
        std::int64_t n = 0;
        for (auto p : plays) n += p;
        return n;
    }
};

namespace detail {

// Index of the first maximum.
inline std::size_t first_argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

// Distinct indices with counts, kept in first-seen order.
struct CountedSelection {
    std::vector<std::size_t> idx;
    std::vector<std::int64_t> cnt;

    void add(std::size_t x) {
        for (std::size_t i = 0; i < idx.size(); ++i)
            if (idx[i] == x) {
                ++cnt[i];
                return;
            }
        idx.push_back(x);
        cnt.push_back(1);
    }
};

}  // namespace detail

// Rare-switching batch selection: l_h rounds of x_t = argmax_{X_h} sigma_{t'},
// refreshing sigma_{t'} only when det(I + K_t/lambda) exceeds eta times its
// value at the last switch.
inline void select_batch(const Eigen::MatrixXd& gram, double lambda, EpochState& state, double eta) {
    if (state.active.empty()) throw std::invalid_argument("select_batch: empty active set");
    state.selection_seq.clear();
    state.switch_rounds.clear();
    state.anchor_t = 0;
    state.anchor_logdet = 0.0;
    state.sigma_cache.resize(state.active.size());
    for (std::size_t j = 0; j < state.active.size(); ++j) {
        const auto a = static_cast<Eigen::Index>(state.active[j]);
        state.sigma_cache[j] = std::sqrt(std::max(gram(a, a), 0.0));
    }
    detail::CountedSelection sel;
    double logdet = 0.0;
    for (std::int64_t t = 1; t <= state.l_h; ++t) {
        const std::size_t x = state.active[detail::first_argmax(state.sigma_cache)];
        state.selection_seq.push_back(x);
        sel.add(x);
        const IndexedPosterior post(gram, sel.idx, sel.cnt, lambda);
        logdet = post.log_det();
        if (switch_test_log(logdet, state.anchor_logdet, eta)) {
            state.anchor_t = t;
            state.anchor_logdet = logdet;
            const Eigen::VectorXd var = post.variances_at(state.active);
            for (std::size_t j = 0; j < state.active.size(); ++j)
                state.sigma_cache[j] = std::sqrt(var(static_cast<Eigen::Index>(j)));
            state.switch_rounds.push_back(t);
        }
    }
    state.selection_logdet = logdet;

    // S_h and xi_h(x) = (#selections of x) / l_h
    std::vector<std::size_t> order(sel.idx.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sel.idx[a] < sel.idx[b]; });
    state.support.clear();
    state.select_counts.clear();
    state.xi.clear();
    for (auto o : order) {
        state.support.push_back(sel.idx[o]);
        state.select_counts.push_back(sel.cnt[o]);
        state.xi.push_back(static_cast<double>(sel.cnt[o]) / static_cast<double>(state.l_h));
    }
}

// u_h(x) = ceil(l_h * max{xi_h(x), psi}) for x in S_h.
inline std::vector<std::int64_t> allocate_plays(const EpochState& state, double psi) {
    std::vector<std::int64_t> u(state.support.size());
    const auto l = static_cast<double>(state.l_h);
    for (std::size_t i = 0; i < state.support.size(); ++i) {
        // l_h * xi_h(x) is the integer selection count; avoid re-multiplying the ratio.
        const double selected = state.select_counts.empty() ? l * state.xi[i] : static_cast<double>(state.select_counts[i]);
        u[i] = static_cast<std::int64_t>(std::ceil(std::max(selected, l * psi)));
    }
    return u;
}

// Confidence multiplier for the elimination rule.
//   Theoretical: beta_h + C sqrt(u_h) / (l_h psi lambda)
//   Practical:   beta_h + b C / sqrt(u_h)
inline double elimination_width(const ConfidenceConfig& cfg, int h, std::int64_t u_h, std::int64_t l_h) {
    if (u_h < 1) throw std::invalid_argument("elimination_width: u_h must be >= 1");
    const double beta = cfg.beta.epoch(h);
    const double u = static_cast<double>(u_h);
    if (cfg.mode == WidthMode::Theoretical) return beta + cfg.C * std::sqrt(u) / (static_cast<double>(l_h) * cfg.psi * cfg.lambda);
    return beta + cfg.b * cfg.C / std::sqrt(u);
}

// Keeps x iff mu(x) + w sigma(x) >= max_x' (mu(x') - w sigma(x')).
inline std::vector<std::size_t> eliminate(std::span<const std::size_t> active, std::span<const double> mu,
                                          std::span<const double> sigma, double w) {
    if (active.size() != mu.size() || active.size() != sigma.size())
        throw std::invalid_argument("eliminate: size mismatch");
    double best_lcb = -INFINITY;
    for (std::size_t i = 0; i < active.size(); ++i) best_lcb = std::max(best_lcb, mu[i] - w * sigma[i]);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < active.size(); ++i)
        if (mu[i] + w * sigma[i] >= best_lcb) keep.push_back(active[i]);
    return keep;
}

// Everything about one epoch that the invariant audit needs.
struct EpochRecord {
    EpochState state;
    std::int64_t t_start = 0;  // first round of the playback
    std::int64_t played = 0;   // plays actually made (less than epoch_len when truncated)
    bool truncated = false;
    std::vector<double> mean;   // robust mean over state.active
    std::vector<double> sigma;  // sigma^{(h)} over state.active
    double width = 0.0;
    std::vector<std::size_t> active_after;
};

struct RgpPeOptions {
    // Test hook replacing allocate_plays.
    std::function<std::vector<std::int64_t>(const EpochState&, double)> allocation;
};

struct RgpPeResult {
    RegretTrace trace;
    std::vector<EpochRecord> epochs;
};

// Robust GP phased elimination. Within an epoch, the posterior is built only
// from that epoch's plays; rewards at the same action are averaged.
inline RgpPeResult run_rgp_pe(const ConfidenceConfig& cfg, const Eigen::MatrixXd& gram, const Environment& env,
                              AttackLedger& ledger, Rng& noise, std::int64_t horizon, const RgpPeOptions& opts = {}) {
    cfg.validate();
    RgpPeResult result;
    result.trace.algorithm = "rgp_pe";
    Episode ep(env, ledger, noise, horizon, result.trace);

    std::vector<std::size_t> active(static_cast<std::size_t>(gram.rows()));
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::int64_t l = 2;
    for (int h = 0; !ep.done(); ++h, l *= 2) {
        EpochRecord rec;
        EpochState& st = rec.state;
        st.h = h;
        st.l_h = l;
        st.active = active;
        select_batch(gram, cfg.lambda, st, cfg.eta);
        st.plays = opts.allocation ? opts.allocation(st, cfg.psi) : allocate_plays(st, cfg.psi);
        rec.t_start = ep.played() + 1;
        result.trace.epoch_marks.push_back({h, rec.t_start, st.active.size(), st.support.size(), st.epoch_len()});

        const AlgorithmView view{LearnerKind::RgpPe, st.active, false, false};
        std::vector<double> sums(st.support.size(), 0.0);
        for (std::size_t i = 0; i < st.support.size() && !rec.truncated; ++i) {
            for (std::int64_t k = 0; k < st.plays[i]; ++k) {
                if (ep.done()) {
                    rec.truncated = true;
                    break;
                }
                sums[i] += ep.play(st.support[i], view);
                ++rec.played;
            }
        }
        if (rec.truncated) {
            rec.active_after = active;
            result.epochs.push_back(std::move(rec));
            break;
        }

        const IndexedPosterior post(gram, st.support, st.plays, sums, cfg.lambda);
        const Eigen::VectorXd var = post.variances_at(st.active);
        rec.mean.resize(st.active.size());
        rec.sigma.resize(st.active.size());
        for (std::size_t j = 0; j < st.active.size(); ++j) {
            rec.mean[j] = post.mean_at(st.active[j]);
            rec.sigma[j] = std::sqrt(var(static_cast<Eigen::Index>(j)));
        }
        rec.width = elimination_width(cfg, h, st.epoch_len(), l);
        active = eliminate(st.active, rec.mean, rec.sigma, rec.width);
        rec.active_after = active;
        if (active.size() < st.active.size())
            ledger.later_trigger_check({LearnerKind::RgpPe, active, true, false});
        result.epochs.push_back(std::move(rec));
    }
    result.trace.final_active = active;
    return result;
}

struct UcbConfig {
    BetaSchedule beta{BetaMode::SqrtLog, 0.5};
    WidthMode mode = WidthMode::Practical;
    double b = 0.1;
    double C = 0.0;
    double lambda = 1.0;
    int refresh_every = 512;
};

// Coefficient of sigma_{t-1} in the UCB: beta_t for GP-UCB; RGP-UCB adds
// C/sqrt(lambda) (theoretical) or b C/sqrt(lambda) (practical).
inline double ucb_coefficient(const UcbConfig& cfg, std::int64_t t, bool robust) {
    double c = cfg.beta.round(t);
    if (robust) c += (cfg.mode == WidthMode::Theoretical ? 1.0 : cfg.b) * cfg.C / std::sqrt(cfg.lambda);
    return c;
}

struct UcbResult {
    RegretTrace trace;
    std::vector<double> sigma_at_pick;  // sigma_{t-1}(x_t)
    double info_gain = 0.0;             // of the full played sequence
};

namespace detail {

inline UcbResult run_ucb(const UcbConfig& cfg, const Eigen::MatrixXd& gram, const Environment& env,
                         AttackLedger& ledger, Rng& noise, std::int64_t horizon, bool robust) {
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    UcbResult result;
    result.trace.algorithm = robust ? "rgp_ucb" : "gp_ucb";
    Episode ep(env, ledger, noise, horizon, result.trace);
    const auto n = static_cast<std::size_t>(gram.rows());
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const LearnerKind kind = robust ? LearnerKind::RgpUcb : LearnerKind::GpUcb;
    DomainPosterior post(gram, cfg.lambda, cfg.refresh_every);
    std::vector<double> score(n);
    result.sigma_at_pick.reserve(static_cast<std::size_t>(horizon));
    while (!ep.done()) {
        const std::int64_t t = ep.played() + 1;
        const double coef = ucb_coefficient(cfg, t, robust);
        for (std::size_t x = 0; x < n; ++x) score[x] = post.mean(x) + coef * post.stddev(x);
        const std::size_t pick = first_argmax(score);
        result.sigma_at_pick.push_back(post.stddev(pick));
        const double y = ep.play(pick, {kind, all, false, false});
        post.observe(pick, y);

        if (robust && !ledger.active() && ledger.params().trigger == AttackTrigger::Later) {
            const double c_next = ucb_coefficient(cfg, t + 1, robust);
            double min_ucb = INFINITY, max_lcb = -INFINITY;
            for (std::size_t x = 0; x < n; ++x) {
                const double m = post.mean(x), s = post.stddev(x);
                min_ucb = std::min(min_ucb, m + c_next * s);
                max_lcb = std::max(max_lcb, m - c_next * s);
            }
            ledger.later_trigger_check({kind, all, false, min_ucb < max_lcb});
        }
    }
    std::vector<std::size_t> idx;
    std::vector<std::int64_t> cnt;
    for (std::size_t x = 0; x < n; ++x)
        if (post.counts()[x] > 0) {
            idx.push_back(x);
            cnt.push_back(post.counts()[x]);
        }
    result.info_gain = idx.empty() ? 0.0 : 0.5 * IndexedPosterior(gram, idx, cnt, cfg.lambda).log_det();
    return result;
}

}  // namespace detail

// GP-UCB over all history: x_t = argmax mu_{t-1} + beta_t sigma_{t-1}.
inline UcbResult run_gp_ucb(const UcbConfig& cfg, const Eigen::MatrixXd& gram, const Environment& env,
                            AttackLedger& ledger, Rng& noise, std::int64_t horizon) {
    return detail::run_ucb(cfg, gram, env, ledger, noise, horizon, false);
}

// GP-UCB with the corruption-enlarged coefficient.
inline UcbResult run_rgp_ucb(const UcbConfig& cfg, const Eigen::MatrixXd& gram, const Environment& env,
                             AttackLedger& ledger, Rng& noise, std::int64_t horizon) {
    return detail::run_ucb(cfg, gram, env, ledger, noise, horizon, true);
}

// Realized information gain of the greedy max-variance sequence of length
// min(T, 5|X|). Stands in for the (intractable) maximum information gain.
inline double gamma_surrogate(const Eigen::MatrixXd& gram, double lambda, std::int64_t horizon) {
    const auto n = static_cast<std::size_t>(gram.rows());
    const std::int64_t len = std::min<std::int64_t>(horizon, 5 * static_cast<std::int64_t>(n));
    DomainPosterior post(gram, lambda, 256);
    std::vector<double> var(n);
    double gain = 0.0;
    for (std::int64_t i = 0; i < len; ++i) {
        for (std::size_t x = 0; x < n; ++x) var[x] = post.variance(x);
        const std::size_t pick = detail::first_argmax(var);
        gain += 0.5 * std::log1p(var[pick] / lambda);
        post.observe(pick, 0.0);
    }
    return gain;
}

inline double gamma_surrogate(const KernelSpec& kernel, const Domain& domain, double lambda, std::int64_t horizon) {
    return gamma_surrogate(gram_matrix(kernel, domain), lambda, horizon);
}

// psi = ln(eta) / (2 gamma_T), with the greedy surrogate for gamma_T.
inline double theoretical_psi(double eta, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("theoretical_psi: gamma must be positive");
    return std::log(eta) / (2.0 * gamma);
}

}  // namespace cgb
