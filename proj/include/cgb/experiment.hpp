#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cgb/adversary.hpp"
#include "cgb/algorithms.hpp"
#include "cgb/config.hpp"
#include "cgb/environment.hpp"
#include "cgb/kernel.hpp"
#include "cgb/linred.hpp"
#include "cgb/rng.hpp"

namespace cgb {

// Comma-separated coordinates, one point per line. Lines that do not start
// with a number (headers) are skipped.
inline std::vector<Point> read_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("domain.file", "cannot open '" + path + "'");
    std::vector<Point> pts;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (!(std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-' || t[0] == '+' || t[0] == '.')) continue;
        std::vector<double> v;
        std::stringstream ss(t);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(detail::parse_double("domain.file", detail::trim(cell)));
        pts.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    if (pts.empty()) throw ConfigError("domain.file", "no points in '" + path + "'");
    return pts;
}

// `count` points drawn uniformly from the unit ball in R^dim.
inline std::vector<Point> random_ball_points(int count, int dim, std::uint64_t seed) {
    Rng rng = make_stream(seed, 1, StreamRole::Instance);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Point> pts;
    for (int i = 0; i < count; ++i) {
        Point p(dim);
        for (int d = 0; d < dim; ++d) p(d) = normal(rng);
        const double r = std::pow(unif(rng), 1.0 / dim);
        pts.push_back(p * (r / p.norm()));
    }
    return pts;
}

// Target region membership. Grammar: "idx:i,j,k" lists domain indices;
// otherwise '&'-joined comparisons "xA<=xB", "xA>=0.3", "xA<xB", "xA>xB"
// with 1-based coordinates.
inline std::vector<bool> parse_region(const std::string& spec, const Domain& domain) {
    std::vector<bool> in(domain.size(), false);
    if (spec.rfind("idx:", 0) == 0) {
        std::stringstream ss(spec.substr(4));
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto i = detail::parse_int<std::size_t>("attack.region", detail::trim(cell));
            if (i >= domain.size()) throw ConfigError("attack.region", "index " + std::to_string(i) + " outside the domain");
            in[i] = true;
        }
        return in;
    }
    struct Cond {
        Eigen::Index lhs;
        std::string op;
        std::optional<Eigen::Index> rhs_coord;
        double rhs_value = 0.0;
    };
    const auto coord = [&](const std::string& s) -> Eigen::Index {
        if (s.size() < 2 || s[0] != 'x') throw ConfigError("attack.region", "expected a coordinate like x1, got '" + s + "'");
        const auto k = detail::parse_int<Eigen::Index>("attack.region", s.substr(1));
        if (k < 1 || k > domain.dim()) throw ConfigError("attack.region", "coordinate '" + s + "' out of range");
        return k - 1;
    };
    std::vector<Cond> conds;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, '&')) {
        const std::string p = detail::trim(part);
        std::string op;
        std::size_t at = std::string::npos;
        for (const char* cand : {"<=", ">=", "<", ">"}) {
            at = p.find(cand);
            if (at != std::string::npos) {
                op = cand;
                break;
            }
        }
        if (op.empty()) throw ConfigError("attack.region", "no comparison in '" + p + "'");
        Cond c{coord(detail::trim(p.substr(0, at))), op, std::nullopt, 0.0};
        const std::string rhs = detail::trim(p.substr(at + op.size()));
        if (!rhs.empty() && rhs[0] == 'x') c.rhs_coord = coord(rhs);
        else c.rhs_value = detail::parse_double("attack.region", rhs);
        conds.push_back(c);
    }
    for (std::size_t i = 0; i < domain.size(); ++i) {
        bool ok = true;
        for (const auto& c : conds) {
            const double a = domain[i](c.lhs);
            const double b = c.rhs_coord ? domain[i](*c.rhs_coord) : c.rhs_value;
            if (c.op == "<=") ok = ok && a <= b;
            else if (c.op == ">=") ok = ok && a >= b;
            else if (c.op == "<") ok = ok && a < b;
            else ok = ok && a > b;
        }
        in[i] = ok;
    }
    return in;
}

// Everything shared by the trials of one configuration.
struct Instance {
    Domain domain;
    Eigen::MatrixXd gram;
    Environment env;
    std::vector<bool> region;
    double gamma_hat = 0.0;  // greedy information-gain surrogate at horizon T
    double psi = 0.5;
    std::optional<NewtonBasis> basis;
    double Delta = 0.0;
};

inline double resolve_misspecification(const ExperimentConfig& c, Eigen::Index dim) {
    if (c.linred_Delta == "auto") return 1.0 / std::sqrt(static_cast<double>(c.T));
    if (c.linred_Delta == "matern") {
        const double nu = c.kernel.nu;
        return std::pow(static_cast<double>(c.T), -nu / (static_cast<double>(dim) + nu));
    }
    return detail::parse_double("linred.Delta", c.linred_Delta);
}

inline Instance build_instance(const ExperimentConfig& c) {
    validate(c);
    Instance inst;
    const std::uint64_t fseed = c.resolved_function_seed();
    switch (c.domain_kind) {
        case DomainKind::Grid: inst.domain = Domain::grid(c.domain_lo, c.domain_hi, c.domain_res, c.domain_dim); break;
        case DomainKind::File: inst.domain = Domain(read_points(c.domain_file)); break;
        case DomainKind::Ball: inst.domain = Domain(random_ball_points(c.domain_count, c.domain_dim, fseed)); break;
    }
    inst.gram = gram_matrix(c.kernel, inst.domain);
    inst.env.noise_sigma = c.noise_sigma;
    inst.env.truth = c.function_kind == FunctionKind::GpSample
                         ? sample_gp_function(c.kernel, inst.domain, fseed)
                         : random_rkhs_function(c.kernel, inst.domain, static_cast<std::size_t>(c.function_anchors),
                                                c.function_norm, fseed);
    if (!c.attack_region.empty()) inst.region = parse_region(c.attack_region, inst.domain);
    if (c.attack == AttackType::Clipping || c.attack == AttackType::AggSub) {
        if (std::none_of(inst.region.begin(), inst.region.end(), [](bool b) { return b; }))
            throw ConfigError("attack.region", "region contains no domain point");
    }
    const bool needs_gamma = c.algo == "rgp_pe" && (!c.psi || c.resolved_beta_mode() == BetaMode::Adaptive);
    if (needs_gamma || (c.algo != "rpe_linear" && c.resolved_beta_mode() == BetaMode::Adaptive))
        inst.gamma_hat = gamma_surrogate(inst.gram, c.lambda, c.T);
    inst.psi = c.psi ? *c.psi : (c.algo == "rgp_pe" ? theoretical_psi(c.eta, inst.gamma_hat) : 0.5);
    if (c.algo == "rpe_linear") {
        inst.Delta = resolve_misspecification(c, inst.domain.dim());
        const double e = c.newton_e ? *c.newton_e : inst.Delta / c.linred_B;
        // Delta = 0 asks for exact interpolation; the pivot floor ends the loop.
        inst.basis = newton_basis(c.kernel, inst.domain, e > 0.0 ? e : 1e-300);
    }
    return inst;
}

inline BetaSchedule make_beta(const ExperimentConfig& c, const Instance& inst) {
    BetaSchedule b;
    b.mode = c.resolved_beta_mode();
    b.value = c.resolved_beta_value();
    b.B = c.beta_B;
    b.delta = c.beta_delta;
    b.noise_sigma = c.noise_sigma;
    b.lambda = c.lambda;
    b.domain_size = inst.domain.size();
    b.gamma_bar = inst.gamma_hat;
    return b;
}

inline AttackParams make_attack(const ExperimentConfig& c, const Instance& inst) {
    AttackParams p;
    p.type = c.attack;
    p.budget = c.attack == AttackType::None ? 0.0 : c.attack_C;
    p.delta = c.attack_delta;
    p.h_max = c.attack_hmax;
    p.top_k = c.attack_K;
    p.trigger = c.attack_trigger;
    p.region = inst.region;
    return p;
}

struct TrialOutput {
    RegretTrace trace;
    std::vector<CorruptionRecord> corruption;
    double budget = 0.0;
    double spent = 0.0;
    double demand = 0.0;
    std::vector<EpochRecord> epochs;
    std::vector<LinearEpochRecord> linear_epochs;
    std::vector<double> sigma_at_pick;
    double info_gain = 0.0;
};

inline TrialOutput run_trial(const ExperimentConfig& c, const Instance& inst, int trial, const RgpPeOptions& pe_opts = {}) {
    TrialOutput out;
    AttackLedger ledger(make_attack(c, inst), inst.env.truth.values);
    Rng noise = make_stream(c.seed, static_cast<std::uint64_t>(trial), StreamRole::Noise);
    if (c.algo == "rgp_pe") {
        ConfidenceConfig cc;
        cc.beta = make_beta(c, inst);
        cc.mode = c.width;
        cc.b = c.b;
        cc.C = c.learner_C();
        cc.psi = inst.psi;
        cc.eta = c.eta;
        cc.lambda = c.lambda;
        auto r = run_rgp_pe(cc, inst.gram, inst.env, ledger, noise, c.T, pe_opts);
        out.trace = std::move(r.trace);
        out.epochs = std::move(r.epochs);
    } else if (c.algo == "gp_ucb" || c.algo == "rgp_ucb") {
        UcbConfig uc;
        uc.beta = make_beta(c, inst);
        uc.mode = c.width;
        uc.b = c.b;
        uc.C = c.learner_C();
        uc.lambda = c.lambda;
        auto r = c.algo == "gp_ucb" ? run_gp_ucb(uc, inst.gram, inst.env, ledger, noise, c.T)
                                    : run_rgp_ucb(uc, inst.gram, inst.env, ledger, noise, c.T);
        out.trace = std::move(r.trace);
        out.sigma_at_pick = std::move(r.sigma_at_pick);
        out.info_gain = r.info_gain;
    } else {
        LinearElimParams lp{inst.Delta, c.linred_alpha, c.linred_delta, c.learner_C()};
        auto r = run_rpe_linear(lp, embed_domain(*inst.basis), inst.env, ledger, noise, c.T);
        out.trace = std::move(r.trace);
        out.linear_epochs = std::move(r.epochs);
    }
    out.trace.trial = trial;
    out.trace.seed = c.seed;
    out.corruption = ledger.log();
    out.budget = ledger.budget();
    out.spent = ledger.spent();
    out.demand = ledger.demand();
    return out;
}

// CGB_THREADS caps the worker count; the default is one worker per trial.
inline int worker_count(int trials) {
    int n = trials;
    if (const char* env = std::getenv("CGB_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (const std::exception&) {
        }
    }
    return std::max(1, n);
}

// Runs every trial; results are indexed by trial, so the output does not
// depend on scheduling.
inline std::vector<TrialOutput> run_trials(const ExperimentConfig& c, const Instance& inst, const RgpPeOptions& pe_opts = {}) {
    std::vector<TrialOutput> out(static_cast<std::size_t>(c.trials));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto work = [&] {
        for (int k = next++; k < c.trials; k = next++) {
            try {
                out[static_cast<std::size_t>(k)] = run_trial(c, inst, k, pe_opts);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int workers = worker_count(c.trials);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace cgb
