#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgb {

enum class AttackType { None, Clipping, AggSub, TopK, Flip };
enum class AttackTrigger { Immediate, Later };

// Which learner the adversary is facing; the later trigger is defined only
// for the robust algorithms.
enum class LearnerKind { RgpPe, GpUcb, RgpUcb, RpeLinear };

inline std::string to_string(AttackType t) {
    switch (t) {
        case AttackType::None: return "none";
        case AttackType::Clipping: return "clipping";
        case AttackType::AggSub: return "aggsub";
        case AttackType::TopK: return "topk";
        case AttackType::Flip: return "flip";
    }
    return "?";
}

struct AttackParams {
    AttackType type = AttackType::None;
    double budget = 0.0;  // C
    double delta = 0.5;   // Clipping margin
    double h_max = 1.0;   // AggSub offset
    int top_k = 3;
    AttackTrigger trigger = AttackTrigger::Immediate;
    // region[i] is true when domain index i lies in R_target.
    std::vector<bool> region;
};

// What the adversary may observe about the learner in the current round.
struct AlgorithmView {
    LearnerKind learner = LearnerKind::GpUcb;
    // Actions still in play: the active set for elimination methods, the full
    // domain for the UCB family.
    std::span<const std::size_t> remaining;
    bool eliminated_any = false;
    bool ucb_below_max_lcb = false;
};

struct CorruptionRecord {
    std::int64_t t = 0;
    std::size_t action = 0;
    double desired = 0.0;
    double applied = 0.0;
};

// Clipped objective value at x: f(x) inside the region, otherwise
// min{f(x), f(x~*) - delta} with x~* the region maximizer.
inline double clipping_target(std::span<const double> f, const std::vector<bool>& region, double delta,
                              std::size_t x) {
    if (region.size() != f.size()) throw std::invalid_argument("clipping_target: region/table size mismatch");
    double region_max = -INFINITY;
    bool any = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (region[i]) {
            any = true;
            region_max = std::max(region_max, f[i]);
        }
    }
    if (!any) throw std::invalid_argument("clipping_target: empty target region");
    if (region[x]) return f[x];
    return std::min(f[x], region_max - delta);
}

// The K entries of `remaining` with the highest f, ties towards lower index.
inline std::vector<std::size_t> topk_set(std::span<const double> f, std::span<const std::size_t> remaining, int k) {
    if (k < 1) throw std::invalid_argument("topk_set: K must be >= 1");
    std::vector<std::size_t> r(remaining.begin(), remaining.end());
    const auto keep = std::min(r.size(), static_cast<std::size_t>(k));
    std::partial_sort(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(keep), r.end(),
                      [&](std::size_t a, std::size_t b) { return f[a] > f[b] || (f[a] == f[b] && a < b); });
    r.resize(keep);
    return r;
}

// Budgeted adversary for a single trial. Tracks the remaining budget, the
// unclamped demand and the per-round corruption log.
class AttackLedger {
public:
    AttackLedger(AttackParams params, std::vector<double> f_table)
        : params_(std::move(params)), f_(std::move(f_table)) {
        if (!(params_.budget >= 0.0) || !std::isfinite(params_.budget))
            throw std::invalid_argument("attack budget C must be finite and >= 0");
        if (params_.type == AttackType::Clipping || params_.type == AttackType::AggSub) {
            if (params_.region.size() != f_.size())
                throw std::invalid_argument("attack region must cover every domain index");
            if (std::none_of(params_.region.begin(), params_.region.end(), [](bool b) { return b; }))
                throw std::invalid_argument("attack region is empty");
        }
        if (params_.type == AttackType::TopK && params_.top_k < 1)
            throw std::invalid_argument("attack K must be >= 1");
        if (params_.type == AttackType::Clipping) {
            clipped_.resize(f_.size());
            for (std::size_t i = 0; i < f_.size(); ++i) clipped_[i] = clipping_target(f_, params_.region, params_.delta, i);
        }
        active_ = params_.trigger == AttackTrigger::Immediate;
    }

    // Corruption c_t for playing x with noisy reward y. Debits |c_t| and
    // clamps the final corruption so the total never exceeds the budget.
    double corrupt(std::int64_t t, std::size_t x, double y, const AlgorithmView& view) {
        if (!active_ || params_.type == AttackType::None) return 0.0;
        const double desired = desired_corruption(x, y, view);
        if (desired == 0.0) return 0.0;
        demand_ += std::abs(desired);
        double applied = 0.0;
        const double left = budget_remaining();
        if (left > 0.0) {
            if (std::abs(desired) >= left) {
                applied = std::copysign(left, desired);
                spent_ = params_.budget;
            } else {
                applied = desired;
                spent_ += std::abs(desired);
            }
        }
        if (applied != 0.0) log_.push_back({t, x, desired, applied});
        return applied;
    }

    // Activates a dormant (later) attack once the learner commits: an
    // elimination for the phased-elimination methods, or a UCB below the best
    // LCB for RGP-UCB. GP-UCB never triggers it.
    void later_trigger_check(const AlgorithmView& view) {
        if (active_ || params_.trigger != AttackTrigger::Later) return;
        switch (view.learner) {
            case LearnerKind::RgpPe:
            case LearnerKind::RpeLinear: active_ = view.eliminated_any; break;
            case LearnerKind::RgpUcb: active_ = view.ucb_below_max_lcb; break;
            case LearnerKind::GpUcb: break;
        }
    }

    [[nodiscard]] bool active() const noexcept { return active_; }
    [[nodiscard]] double budget() const noexcept { return params_.budget; }
    [[nodiscard]] double spent() const noexcept { return spent_; }
    [[nodiscard]] double budget_remaining() const noexcept { return std::max(0.0, params_.budget - spent_); }
    [[nodiscard]] double demand() const noexcept { return demand_; }
    [[nodiscard]] const std::vector<CorruptionRecord>& log() const noexcept { return log_; }
    [[nodiscard]] const AttackParams& params() const noexcept { return params_; }

private:
    [[nodiscard]] double desired_corruption(std::size_t x, double y, const AlgorithmView& view) const {
        switch (params_.type) {
            case AttackType::None: return 0.0;
            // Clipping and AggSub perturb the objective; noise passes through.
            case AttackType::Clipping: return clipped_[x] - f_[x];
            case AttackType::AggSub: return params_.region[x] ? 0.0 : -params_.h_max;
            // TopK and Flip dictate the observed outcome.
            case AttackType::TopK: {
                const auto top = topk_set(f_, view.remaining, params_.top_k);
                if (std::find(top.begin(), top.end(), x) == top.end()) return 0.0;
                return -1.0 - y;
            }
            case AttackType::Flip: return -f_[x] - y;
        }
        return 0.0;
    }

    AttackParams params_;
    std::vector<double> f_;
    std::vector<double> clipped_;
    bool active_ = true;
    double spent_ = 0.0;
    double demand_ = 0.0;
    std::vector<CorruptionRecord> log_;
};

}  // namespace cgb
