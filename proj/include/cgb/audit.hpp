#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cgb/algorithms.hpp"
#include "cgb/config.hpp"
#include "cgb/csv.hpp"
#include "cgb/linred.hpp"
#include "cgb/posterior.hpp"

namespace cgb {

// One invariant evaluation: pass iff lhs <= rhs. h = -1 marks run-level checks.
struct AuditRow {
    int trial = 0;
    int h = -1;
    std::string check;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
};

namespace audit_id {
inline constexpr const char* kEpochCount = "epoch_count";          // H <= log2 T
inline constexpr const char* kEpochLength = "epoch_length";        // u_h <= l_h (2 + psi |S_h|)
inline constexpr const char* kSwitchVariance = "switch_variance";  // sigma_t' <= sqrt(eta) sigma_t between switches
inline constexpr const char* kMaxVariance = "max_variance";        // max sigma^(h) <= sqrt(eta (2 lambda + 1) gamma / l_h)
inline constexpr const char* kSupportSize = "support_size";        // |S_h| <= (2 / ln eta) gamma
inline constexpr const char* kSigmaSum = "sigma_sum";              // sum sigma_{t-1}(x_t) <= sqrt((2 lambda + 1) T gamma)
inline constexpr const char* kDesignLeverage = "design_leverage";  // max leverage <= 2D
inline constexpr const char* kDesignSupport = "design_support";    // |supp| <= m_0
}  // namespace audit_id

namespace detail {

inline AuditRow audit_row(int trial, int h, const char* id, double lhs, double rhs) { return {trial, h, id, lhs, rhs, lhs <= rhs}; }

// Largest sigma_t'(x) - sqrt(eta) sigma_t(x) over rounds t that are not
// switches and over x in the active set.
inline double worst_switch_gap(const Eigen::MatrixXd& gram, double lambda, double eta, const EpochState& st) {
    CountedSelection sel;
    std::vector<double> anchor(st.active.size());
    for (std::size_t j = 0; j < st.active.size(); ++j) {
        const auto a = static_cast<Eigen::Index>(st.active[j]);
        anchor[j] = std::sqrt(std::max(gram(a, a), 0.0));
    }
    std::size_t next_switch = 0;
    double worst = -INFINITY;
    for (std::int64_t t = 1; t <= static_cast<std::int64_t>(st.selection_seq.size()); ++t) {
        sel.add(st.selection_seq[static_cast<std::size_t>(t - 1)]);
        const IndexedPosterior post(gram, sel.idx, sel.cnt, lambda);
        const Eigen::VectorXd var = post.variances_at(st.active);
        const bool is_switch = next_switch < st.switch_rounds.size() && st.switch_rounds[next_switch] == t;
        if (is_switch) {
            ++next_switch;
            for (std::size_t j = 0; j < st.active.size(); ++j) anchor[j] = std::sqrt(var(static_cast<Eigen::Index>(j)));
            continue;
        }
        for (std::size_t j = 0; j < st.active.size(); ++j)
            worst = std::max(worst, anchor[j] - std::sqrt(eta) * std::sqrt(var(static_cast<Eigen::Index>(j))));
    }
    return std::isfinite(worst) ? worst : 0.0;
}

}  // namespace detail

inline std::vector<AuditRow> audit_rgp_pe(const std::vector<EpochRecord>& epochs, const Eigen::MatrixXd& gram, double lambda,
                                          double eta, double psi, std::int64_t horizon, int trial = 0) {
    using namespace audit_id;
    std::vector<AuditRow> rows;
    for (const auto& rec : epochs) {
        const auto& st = rec.state;
        const double l = static_cast<double>(st.l_h);
        const double gamma = 0.5 * st.selection_logdet;
        const double support = static_cast<double>(st.support.size());
        rows.push_back(detail::audit_row(trial, st.h, kEpochLength, static_cast<double>(st.epoch_len()), l * (2.0 + psi * support)));
        rows.push_back(detail::audit_row(trial, st.h, kSwitchVariance, detail::worst_switch_gap(gram, lambda, eta, st), 1e-8));
        if (!rec.sigma.empty()) {
            const double smax = *std::max_element(rec.sigma.begin(), rec.sigma.end());
            rows.push_back(detail::audit_row(trial, st.h, kMaxVariance, smax, std::sqrt(eta * (2.0 * lambda + 1.0) * gamma / l)));
        }
        rows.push_back(detail::audit_row(trial, st.h, kSupportSize, support, 2.0 / std::log(eta) * gamma));
    }
    rows.push_back(detail::audit_row(trial, -1, kEpochCount, static_cast<double>(epochs.size()),
                                     std::log2(static_cast<double>(horizon))));
    return rows;
}

inline std::vector<AuditRow> audit_ucb(const std::vector<double>& sigma_at_pick, double info_gain, double lambda, int trial = 0) {
    double sum = 0.0;
    for (double s : sigma_at_pick) sum += s;
    const double T = static_cast<double>(sigma_at_pick.size());
    return {detail::audit_row(trial, -1, audit_id::kSigmaSum, sum, std::sqrt((2.0 * lambda + 1.0) * T * info_gain))};
}

inline std::vector<AuditRow> audit_linear(const std::vector<LinearEpochRecord>& epochs, std::int64_t m0, int trial = 0) {
    std::vector<AuditRow> rows;
    for (const auto& rec : epochs) {
        rows.push_back(detail::audit_row(trial, rec.h, audit_id::kDesignLeverage, rec.max_g, 2.0 * static_cast<double>(rec.span_dim)));
        rows.push_back(detail::audit_row(trial, rec.h, audit_id::kDesignSupport, static_cast<double>(rec.support_size),
                                         static_cast<double>(m0)));
    }
    return rows;
}

inline CsvTable audit_table(const std::vector<AuditRow>& rows) {
    using detail::format_double;
    CsvTable t{{"trial", "h", "lemma_id", "lhs", "rhs", "pass"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({std::to_string(r.trial), std::to_string(r.h), r.check, format_double(r.lhs), format_double(r.rhs),
                          r.pass ? "1" : "0"});
    return t;
}

inline std::vector<AuditRow> read_audit(const CsvTable& t) {
    const auto ck = t.column("trial"), ch = t.column("h"), ci = t.column("lemma_id"), cl = t.column("lhs"), cr = t.column("rhs"),
               cp = t.column("pass");
    std::vector<AuditRow> rows;
    for (const auto& r : t.rows)
        rows.push_back({static_cast<int>(detail::csv_int(r[ck])), static_cast<int>(detail::csv_int(r[ch])), r[ci],
                        detail::csv_double(r[cl]), detail::csv_double(r[cr]), r[cp] == "1"});
    return rows;
}

}  // namespace cgb
