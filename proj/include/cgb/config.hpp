#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgb/adversary.hpp"
#include "cgb/algorithms.hpp"
#include "cgb/errors.hpp"
#include "cgb/kernel.hpp"

namespace cgb {

enum class DomainKind { Grid, File, Ball };
enum class FunctionKind { GpSample, Rkhs };

struct ExperimentConfig {
    std::string algo = "rgp_pe";
    std::int64_t T = 1000;
    int trials = 1;
    std::uint64_t seed = 0;
    std::string out = "out";

    DomainKind domain_kind = DomainKind::Grid;
    double domain_lo = 0.0;
    double domain_hi = 1.0;
    int domain_res = 10;
    int domain_dim = 2;
    std::string domain_file;
    int domain_count = 20;

    KernelSpec kernel = KernelSpec::squared_exponential(0.5);

    FunctionKind function_kind = FunctionKind::GpSample;
    std::optional<std::uint64_t> function_seed;
    double function_norm = 1.0;
    int function_anchors = 10;
    double noise_sigma = 0.02;

    double lambda = 1.0;
    double eta = 2.0;
    std::optional<double> psi;  // nullopt: ln(eta) / (2 gamma)
    double b = 0.1;
    std::optional<double> C_known;  // nullopt: the attack budget
    WidthMode width = WidthMode::Practical;
    std::optional<BetaMode> beta_mode;  // nullopt: per-algorithm default
    std::optional<double> beta_value;
    double beta_B = 1.0;
    double beta_delta = 0.1;

    AttackType attack = AttackType::None;
    double attack_C = 0.0;
    double attack_delta = 0.5;
    double attack_hmax = 1.0;
    int attack_K = 3;
    std::string attack_region;
    AttackTrigger attack_trigger = AttackTrigger::Immediate;

    double linred_alpha = 0.1;
    double linred_delta = 0.1;
    std::string linred_Delta = "auto";  // auto | matern | number
    double linred_B = 1.0;
    std::optional<double> newton_e;

    [[nodiscard]] std::uint64_t resolved_function_seed() const { return function_seed.value_or(seed); }
    [[nodiscard]] double learner_C() const { return C_known.value_or(attack == AttackType::None ? 0.0 : attack_C); }

    [[nodiscard]] BetaMode resolved_beta_mode() const {
        if (beta_mode) return *beta_mode;
        return algo == "rgp_pe" ? BetaMode::Constant : BetaMode::SqrtLog;
    }
    [[nodiscard]] double resolved_beta_value() const {
        if (beta_value) return *beta_value;
        return resolved_beta_mode() == BetaMode::SqrtLog ? 0.5 : 4.0;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end || !std::isfinite(out)) throw ConfigError(key, "expected a real number, got '" + v + "'");
    return out;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
    Int out{};
    const auto* end = v.data() + v.size();
    const auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

// Shortest round-trip representation.
inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

inline AttackType parse_attack_type(const std::string& key, const std::string& v) {
    if (v == "none") return AttackType::None;
    if (v == "clipping") return AttackType::Clipping;
    if (v == "aggsub") return AttackType::AggSub;
    if (v == "topk") return AttackType::TopK;
    if (v == "flip") return AttackType::Flip;
    throw ConfigError(key, "unknown attack type '" + v + "' (none|clipping|aggsub|topk|flip)");
}

inline std::string to_string(BetaMode m) {
    switch (m) {
        case BetaMode::Constant: return "constant";
        case BetaMode::FiniteDomain: return "finite_domain";
        case BetaMode::Adaptive: return "adaptive";
        case BetaMode::SqrtLog: return "sqrt_log";
    }
    return "?";
}

// Resolved key/value view of a configuration, in a fixed order. Parsing the
// output of this function reproduces the same configuration.
inline std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentConfig& c) {
    using detail::format_double;
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("algo", c.algo);
    kv.emplace_back("T", std::to_string(c.T));
    kv.emplace_back("trials", std::to_string(c.trials));
    kv.emplace_back("seed", std::to_string(c.seed));
    kv.emplace_back("out", c.out);
    kv.emplace_back("domain.kind", c.domain_kind == DomainKind::Grid ? "grid" : c.domain_kind == DomainKind::File ? "file" : "ball");
    kv.emplace_back("domain.lo", format_double(c.domain_lo));
    kv.emplace_back("domain.hi", format_double(c.domain_hi));
    kv.emplace_back("domain.res", std::to_string(c.domain_res));
    kv.emplace_back("domain.dim", std::to_string(c.domain_dim));
    kv.emplace_back("domain.count", std::to_string(c.domain_count));
    if (!c.domain_file.empty()) kv.emplace_back("domain.file", c.domain_file);
    kv.emplace_back("kernel.family", to_string(c.kernel.family));
    kv.emplace_back("kernel.lengthscale", format_double(c.kernel.lengthscale));
    kv.emplace_back("kernel.nu", format_double(c.kernel.nu));
    kv.emplace_back("function.kind", c.function_kind == FunctionKind::GpSample ? "gp_sample" : "rkhs");
    kv.emplace_back("function.seed", std::to_string(c.resolved_function_seed()));
    kv.emplace_back("function.norm", format_double(c.function_norm));
    kv.emplace_back("function.anchors", std::to_string(c.function_anchors));
    kv.emplace_back("noise.sigma", format_double(c.noise_sigma));
    kv.emplace_back("lambda", format_double(c.lambda));
    kv.emplace_back("eta", format_double(c.eta));
    kv.emplace_back("psi", c.psi ? format_double(*c.psi) : "auto");
    kv.emplace_back("b", format_double(c.b));
    kv.emplace_back("C_known", format_double(c.learner_C()));
    kv.emplace_back("width.mode", c.width == WidthMode::Practical ? "practical" : "theoretical");
    kv.emplace_back("beta.mode", to_string(c.resolved_beta_mode()));
    kv.emplace_back("beta.value", format_double(c.resolved_beta_value()));
    kv.emplace_back("beta.B", format_double(c.beta_B));
    kv.emplace_back("beta.delta", format_double(c.beta_delta));
    kv.emplace_back("attack.type", to_string(c.attack));
    kv.emplace_back("attack.C", format_double(c.attack_C));
    kv.emplace_back("attack.delta", format_double(c.attack_delta));
    kv.emplace_back("attack.hmax", format_double(c.attack_hmax));
    kv.emplace_back("attack.K", std::to_string(c.attack_K));
    if (!c.attack_region.empty()) kv.emplace_back("attack.region", c.attack_region);
    kv.emplace_back("attack.trigger", c.attack_trigger == AttackTrigger::Immediate ? "immediate" : "later");
    kv.emplace_back("linred.alpha", format_double(c.linred_alpha));
    kv.emplace_back("linred.delta", format_double(c.linred_delta));
    kv.emplace_back("linred.Delta", c.linred_Delta);
    kv.emplace_back("linred.B", format_double(c.linred_B));
    if (c.newton_e) kv.emplace_back("newton.e", format_double(*c.newton_e));
    return kv;
}

inline void validate(const ExperimentConfig& c) {
    if (c.algo != "rgp_pe" && c.algo != "gp_ucb" && c.algo != "rgp_ucb" && c.algo != "rpe_linear")
        throw ConfigError("algo", "unknown algorithm '" + c.algo + "' (rgp_pe|gp_ucb|rgp_ucb|rpe_linear)");
    if (c.T < 2) throw ConfigError("T", "T must be >= 2");
    if (c.trials < 1) throw ConfigError("trials", "trials must be >= 1");
    if (c.domain_kind == DomainKind::Grid && (c.domain_res < 1 || c.domain_dim < 1 || !(c.domain_hi > c.domain_lo)))
        throw ConfigError("domain.res", "grid needs res >= 1, dim >= 1 and hi > lo");
    if (c.domain_kind == DomainKind::File && c.domain_file.empty()) throw ConfigError("domain.file", "missing point file");
    if (c.domain_kind == DomainKind::Ball && (c.domain_count < 1 || c.domain_dim < 1))
        throw ConfigError("domain.count", "ball domain needs count >= 1 and dim >= 1");
    try {
        c.kernel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kernel", e.what());
    }
    if (c.noise_sigma < 0.0) throw ConfigError("noise.sigma", "noise.sigma must be >= 0");
    if (!(c.lambda > 0.0)) throw ConfigError("lambda", "lambda must be positive");
    if (!(c.eta > 1.0)) throw ConfigError("eta", "eta must exceed 1");
    if (c.psi && !(*c.psi > 0.0)) throw ConfigError("psi", "psi must be positive");
    if (!(c.b > 0.0 && c.b <= 1.0)) throw ConfigError("b", "b must lie in (0, 1]");
    if (c.C_known && *c.C_known < 0.0) throw ConfigError("C_known", "C_known must be >= 0");
    if (c.attack_C < 0.0) throw ConfigError("attack.C", "attack.C must be >= 0");
    if (c.attack_K < 1) throw ConfigError("attack.K", "attack.K must be >= 1");
    if ((c.attack == AttackType::Clipping || c.attack == AttackType::AggSub) && c.attack_region.empty())
        throw ConfigError("attack.region", "clipping and aggsub attacks need attack.region");
    if (c.function_norm < 0.0) throw ConfigError("function.norm", "function.norm must be >= 0");
    if (c.function_anchors < 1) throw ConfigError("function.anchors", "function.anchors must be >= 1");
    if (!(c.linred_alpha > 0.0 && c.linred_alpha <= 1.0)) throw ConfigError("linred.alpha", "linred.alpha must lie in (0, 1]");
    if (!(c.linred_delta > 0.0 && c.linred_delta < 1.0)) throw ConfigError("linred.delta", "linred.delta must lie in (0, 1)");
    if (!(c.linred_B > 0.0)) throw ConfigError("linred.B", "linred.B must be positive");
    if (c.newton_e && !(*c.newton_e > 0.0)) throw ConfigError("newton.e", "newton.e must be positive");
    if (c.linred_Delta != "auto" && c.linred_Delta != "matern" && !(detail::parse_double("linred.Delta", c.linred_Delta) >= 0.0))
        throw ConfigError("linred.Delta", "linred.Delta must be auto, matern or a number >= 0");
}

inline ExperimentConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        const std::string key = detail::trim(std::string_view(t).substr(0, eq));
        const std::string val = detail::trim(std::string_view(t).substr(eq + 1));
        if (kv.count(key)) throw ConfigError(key, "duplicate key");
        kv[key] = val;
    }

    ExperimentConfig c;
    using detail::parse_double;
    const auto i64 = [](const std::string& k, const std::string& v) { return detail::parse_int<std::int64_t>(k, v); };
    const auto i32 = [](const std::string& k, const std::string& v) { return detail::parse_int<int>(k, v); };
    for (const auto& [k, v] : kv) {
        if (k == "algo") c.algo = v;
        else if (k == "T") c.T = i64(k, v);
        else if (k == "trials") c.trials = i32(k, v);
        else if (k == "seed") c.seed = detail::parse_int<std::uint64_t>(k, v);
        else if (k == "out") c.out = v;
        else if (k == "domain.kind") {
            if (v == "grid") c.domain_kind = DomainKind::Grid;
            else if (v == "file") c.domain_kind = DomainKind::File;
            else if (v == "ball") c.domain_kind = DomainKind::Ball;
            else throw ConfigError(k, "unknown domain kind '" + v + "' (grid|file|ball)");
        } else if (k == "domain.lo") c.domain_lo = parse_double(k, v);
        else if (k == "domain.hi") c.domain_hi = parse_double(k, v);
        else if (k == "domain.res") c.domain_res = i32(k, v);
        else if (k == "domain.dim") c.domain_dim = i32(k, v);
        else if (k == "domain.count") c.domain_count = i32(k, v);
        else if (k == "domain.file") {
            c.domain_file = v;
            if (!kv.count("domain.kind")) c.domain_kind = DomainKind::File;
        } else if (k == "kernel.family") {
            if (v == "se") c.kernel.family = KernelFamily::SquaredExponential;
            else if (v == "matern") c.kernel.family = KernelFamily::Matern;
            else if (v == "linear") c.kernel.family = KernelFamily::Linear;
            else throw ConfigError(k, "unknown kernel family '" + v + "' (se|matern|linear)");
        } else if (k == "kernel.lengthscale") c.kernel.lengthscale = parse_double(k, v);
        else if (k == "kernel.nu") c.kernel.nu = parse_double(k, v);
        else if (k == "function.kind") {
            if (v == "gp_sample") c.function_kind = FunctionKind::GpSample;
            else if (v == "rkhs") c.function_kind = FunctionKind::Rkhs;
            else throw ConfigError(k, "unknown function kind '" + v + "' (gp_sample|rkhs)");
        } else if (k == "function.seed") c.function_seed = detail::parse_int<std::uint64_t>(k, v);
        else if (k == "function.norm") c.function_norm = parse_double(k, v);
        else if (k == "function.anchors") c.function_anchors = i32(k, v);
        else if (k == "noise.sigma") c.noise_sigma = parse_double(k, v);
        else if (k == "lambda") c.lambda = parse_double(k, v);
        else if (k == "eta") c.eta = parse_double(k, v);
        else if (k == "psi") {
            if (v != "auto") c.psi = parse_double(k, v);
        } else if (k == "b") c.b = parse_double(k, v);
        else if (k == "C_known") c.C_known = parse_double(k, v);
        else if (k == "width.mode") {
            if (v == "practical") c.width = WidthMode::Practical;
            else if (v == "theoretical") c.width = WidthMode::Theoretical;
            else throw ConfigError(k, "unknown width mode '" + v + "' (practical|theoretical)");
        } else if (k == "beta.mode") {
            if (v == "constant") c.beta_mode = BetaMode::Constant;
            else if (v == "finite_domain") c.beta_mode = BetaMode::FiniteDomain;
            else if (v == "adaptive") c.beta_mode = BetaMode::Adaptive;
            else if (v == "sqrt_log") c.beta_mode = BetaMode::SqrtLog;
            else throw ConfigError(k, "unknown beta mode '" + v + "' (constant|finite_domain|adaptive|sqrt_log)");
        } else if (k == "beta.value") c.beta_value = parse_double(k, v);
        else if (k == "beta.B") c.beta_B = parse_double(k, v);
        else if (k == "beta.delta") c.beta_delta = parse_double(k, v);
        else if (k == "attack.type") c.attack = parse_attack_type(k, v);
        else if (k == "attack.C") c.attack_C = parse_double(k, v);
        else if (k == "attack.delta") c.attack_delta = parse_double(k, v);
        else if (k == "attack.hmax") c.attack_hmax = parse_double(k, v);
        else if (k == "attack.K") c.attack_K = i32(k, v);
        else if (k == "attack.region") c.attack_region = v;
        else if (k == "attack.trigger") {
            if (v == "immediate") c.attack_trigger = AttackTrigger::Immediate;
            else if (v == "later") c.attack_trigger = AttackTrigger::Later;
            else throw ConfigError(k, "unknown trigger '" + v + "' (immediate|later)");
        } else if (k == "linred.alpha") c.linred_alpha = parse_double(k, v);
        else if (k == "linred.delta") c.linred_delta = parse_double(k, v);
        else if (k == "linred.Delta") c.linred_Delta = v;
        else if (k == "linred.B") c.linred_B = parse_double(k, v);
        else if (k == "newton.e") c.newton_e = parse_double(k, v);
        else throw ConfigError(k, "unknown key");
    }
    validate(c);
    return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    return parse_config(in);
}

inline std::string format_config(const ExperimentConfig& c) {
    std::string s;
    for (const auto& [k, v] : to_key_values(c)) s += k + "=" + v + "\n";
    return s;
}

}  // namespace cgb
