#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cgb/audit.hpp"
#include "cgb/config.hpp"
#include "cgb/csv.hpp"
#include "cgb/errors.hpp"
#include "cgb/experiment.hpp"
#include "cgb/linred.hpp"
#include "cgb/plot.hpp"

#ifndef CGB_VERSION
#define CGB_VERSION "0.0.0"
#endif

namespace cgb {

enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitConfig = 2, kExitNumerical = 3 };

struct RunOptions {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
};

inline ExperimentConfig resolve_config(const RunOptions& opt) {
    ExperimentConfig c = load_config(opt.config_path);
    if (opt.out) c.out = *opt.out;
    if (opt.trials) c.trials = *opt.trials;
    if (opt.seed) c.seed = *opt.seed;
    validate(c);
    return c;
}

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << text;
}

struct RunArtifacts {
    ExperimentConfig config;
    Instance instance;
    std::vector<TrialOutput> trials;
};

inline RunArtifacts execute(const RunOptions& opt) {
    RunArtifacts a{resolve_config(opt), {}, {}};
    a.instance = build_instance(a.config);
    a.trials = run_trials(a.config, a.instance);
    return a;
}

inline void write_run(const RunArtifacts& a) {
    const std::filesystem::path dir(a.config.out);
    std::filesystem::create_directories(dir);
    std::vector<RegretTrace> traces;
    for (const auto& t : a.trials) {
        write_csv((dir / ("trace_" + std::to_string(t.trace.trial) + ".csv")).string(), trace_table(t.trace));
        traces.push_back(t.trace);
    }
    write_csv((dir / "aggregate.csv").string(), aggregate_table(aggregate_traces(traces)));
    if (a.config.algo == "rgp_pe" || a.config.algo == "rpe_linear") write_csv((dir / "epochs.csv").string(), epochs_table(traces));

    std::ostringstream m;
    m << "version=" << CGB_VERSION << '\n';
    m << format_config(a.config);
    m << "resolved.psi=" << format_double(a.instance.psi) << '\n';
    m << "resolved.gamma=" << format_double(a.instance.gamma_hat) << '\n';
    m << "resolved.f_max=" << format_double(a.instance.env.truth.f_max) << '\n';
    m << "resolved.argmax=" << a.instance.env.truth.argmax_index << '\n';
    if (a.instance.basis) m << "resolved.D=" << a.instance.basis->dim() << '\n';
    for (const auto& t : a.trials) {
        const std::string k = "trial." + std::to_string(t.trace.trial) + ".";
        m << k << "noise_seed=" << derive_seed(a.config.seed, static_cast<std::uint64_t>(t.trace.trial), StreamRole::Noise) << '\n';
        m << k << "cum_regret=" << format_double(t.trace.cumulative_regret()) << '\n';
        m << k << "corruption_spent=" << format_double(t.spent) << '\n';
        m << k << "corruption_demand=" << format_double(t.demand) << '\n';
    }
    m << "timestamp=" << utc_timestamp() << '\n';
    write_text(dir / "manifest.txt", m.str());
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CsvError& e) {
        err << "csv error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace detail

inline int cmd_run(const RunOptions& opt, std::ostream& err) {
    return detail::guarded(err, [&] {
        detail::write_run(detail::execute(opt));
        return static_cast<int>(kExitOk);
    });
}

// Runs the experiment, then evaluates the invariant checks for every trial.
inline int cmd_audit(const RunOptions& opt, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto a = detail::execute(opt);
        detail::write_run(a);
        std::vector<AuditRow> rows;
        for (const auto& t : a.trials) {
            std::vector<AuditRow> r;
            if (a.config.algo == "rgp_pe")
                r = audit_rgp_pe(t.epochs, a.instance.gram, a.config.lambda, a.config.eta, a.instance.psi, a.config.T, t.trace.trial);
            else if (a.config.algo == "rpe_linear")
                r = audit_linear(t.linear_epochs, initial_epoch_length(a.instance.basis->dim()), t.trace.trial);
            else
                r = audit_ucb(t.sigma_at_pick, t.info_gain, a.config.lambda, t.trace.trial);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        write_csv((std::filesystem::path(a.config.out) / "audit.csv").string(), audit_table(rows));
        int code = kExitOk;
        for (const auto& r : rows)
            if (!r.pass) {
                err << "violation: " << r.check << " (trial " << r.trial << ", h " << r.h << "): " << detail::format_double(r.lhs)
                    << " > " << detail::format_double(r.rhs) << '\n';
                code = kExitViolation;
            }
        return code;
    });
}

inline CsvTable newton_table(const NewtonBasis& b) {
    CsvTable t{{"iter", "center_index", "p2max"}, {}};
    for (std::size_t i = 0; i < b.dim(); ++i)
        t.rows.push_back({std::to_string(i + 1), std::to_string(b.center_index[i]), detail::format_double(b.p2_history[i])});
    return t;
}

// Builds the interpolation basis for the configured kernel and domain.
inline int cmd_newton(const RunOptions& opt, std::ostream& err) {
    return detail::guarded(err, [&] {
        ExperimentConfig c = resolve_config(opt);
        c.algo = "rpe_linear";
        const Instance inst = build_instance(c);
        std::filesystem::create_directories(c.out);
        write_csv((std::filesystem::path(c.out) / "newton.csv").string(), newton_table(*inst.basis));
        return static_cast<int>(kExitOk);
    });
}

inline int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_svg, std::ostream& err) {
    return detail::guarded(err, [&] {
        if (inputs.empty()) throw CsvError("no input CSV given");
        std::vector<PlotSeries> series;
        for (const auto& p : inputs) series.push_back({series_label(p), read_aggregate(read_csv(p))});
        detail::write_text(out_svg, render_svg(series));
        return static_cast<int>(kExitOk);
    });
}

}  // namespace cgb
