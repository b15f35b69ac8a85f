// Acceptance suite. Prints one PASS/FAIL line per criterion; exits nonzero if
// any requested criterion fails. Usage: cgb_acceptance [criterion...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cgb/audit.hpp"
#include "cgb/experiment.hpp"
#include "cgb/linred.hpp"
#include "cgb/posterior.hpp"
#include "oracles.hpp"

using namespace cgb;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

struct RawInstance {
    KernelSpec kernel;
    double lambda;
    std::vector<Point> xs;
    std::vector<double> ys;
    Point query;
};

// At most 30 observations over a pool of at most 6 points, so repeats are forced.
RawInstance random_instance(std::mt19937_64& rng, int index) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> pool_size(1, 6), count(1, 30), dim(1, 3);
    const int d = dim(rng);
    RawInstance r{index % 3 == 0 ? KernelSpec::matern(2.5, 0.7) : KernelSpec::squared_exponential(0.3 + 0.1 * (index % 5)),
                  0.05 + 0.2 * (index % 9), {}, {}, Point(d)};
    std::vector<Point> pool(static_cast<std::size_t>(pool_size(rng)));
    for (auto& p : pool) {
        p = Point(d);
        for (int i = 0; i < d; ++i) p(i) = 0.5 * u(rng);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        r.xs.push_back(pool[pick(rng)]);
        r.ys.push_back(u(rng));
    }
    for (int i = 0; i < d; ++i) r.query(i) = 0.6 * u(rng);
    return r;
}

Verdict oracle_equivalence() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const auto inst = random_instance(rng, i);
        const auto data = AggregatedDataset::from_observations(inst.kernel, inst.lambda, inst.xs, inst.ys);
        const auto got = posterior_mean_var(data, inst.query);
        const auto want = oracle::raw_posterior(inst.kernel, inst.xs, inst.ys, inst.lambda, inst.query);
        worst = std::max({worst, std::abs(got.mean - want.mean), std::abs(got.variance - want.var),
                          std::abs(info_gain(data) - oracle::raw_info_gain(inst.kernel, inst.xs, inst.lambda))});
    }
    return {worst <= 1e-8, "max abs diff " + fmt(worst) + " over 200 instances"};
}

Verdict averaging_identity() {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> corruption(0.0, 0.7);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        auto inst = random_instance(rng, i);
        for (auto& y : inst.ys) y += corruption(rng);
        const auto data = AggregatedDataset::from_observations(inst.kernel, inst.lambda, inst.xs, inst.ys);
        const double plain = oracle::raw_posterior(inst.kernel, inst.xs, inst.ys, inst.lambda, inst.query).mean;
        worst = std::max(worst, std::abs(robust_mean(data, inst.query) - plain));
    }
    return {worst <= 1e-9, "max abs diff " + fmt(worst) + " over 200 instances"};
}

ExperimentConfig f1_config() {
    ExperimentConfig c;
    c.domain_lo = -5.0;
    c.domain_hi = 5.0;
    c.domain_res = 10;
    c.domain_dim = 2;
    c.kernel = KernelSpec::squared_exponential(0.5);
    c.noise_sigma = 0.02;
    c.lambda = 1.0;
    c.eta = 2.0;
    c.psi = 0.5;
    c.b = 0.1;
    c.function_seed = 0;
    return c;
}

Verdict epoch_audit() {
    std::map<std::string, int> failures;
    std::size_t rows = 0;
    for (int run = 0; run < 20; ++run) {
        auto c = f1_config();
        c.algo = "rgp_pe";
        c.T = 4096;
        c.seed = static_cast<std::uint64_t>(run);
        c.function_seed = static_cast<std::uint64_t>(run);
        const auto inst = build_instance(c);
        const auto out = run_trial(c, inst, 0);
        for (const auto& r : audit_rgp_pe(out.epochs, inst.gram, c.lambda, c.eta, inst.psi, c.T, run)) {
            ++rows;
            if (!r.pass) ++failures[r.check];
        }
    }
    std::string detail = std::to_string(rows) + " checks over 20 runs";
    for (const auto& [id, n] : failures) detail += ", " + id + " failed " + std::to_string(n) + "x";
    return {failures.empty(), detail};
}

struct Sweep {
    std::string label;
    std::string algo;
    AttackType attack;
    int K;
    std::vector<TrialOutput> trials;
    std::size_t argmax = 0;
};

double last_quarter_slope(const std::vector<TrialOutput>& trials) {
    std::vector<RegretTrace> traces;
    for (const auto& t : trials) traces.push_back(t.trace);
    const auto agg = aggregate_traces(traces);
    const std::size_t T = agg.size(), q = T * 3 / 4;
    return (agg[T - 1].mean_cum_regret - agg[q - 1].mean_cum_regret) / static_cast<double>(T - q);
}

double mean_final_regret(const std::vector<TrialOutput>& trials) {
    double s = 0.0;
    for (const auto& t : trials) s += t.trace.cumulative_regret();
    return s / static_cast<double>(trials.size());
}

std::vector<TrialOutput> run_f1(const std::string& algo, AttackType attack, int K, double C, std::size_t* argmax = nullptr,
                                double* uniform = nullptr) {
    auto c = f1_config();
    c.algo = algo;
    c.T = 20000;
    c.trials = 10;
    c.seed = 1;
    c.attack = attack;
    c.attack_C = C;
    c.attack_K = K;
    c.attack_delta = 0.5;
    c.attack_hmax = 1.0;
    if (attack == AttackType::Clipping || attack == AttackType::AggSub) c.attack_region = "x1<=x2";
    const auto inst = build_instance(c);
    if (argmax) *argmax = inst.env.truth.argmax_index;
    if (uniform) {
        double gap = 0.0;
        for (double v : inst.env.truth.values) gap += inst.env.truth.f_max - v;
        *uniform = static_cast<double>(c.T) * gap / static_cast<double>(inst.env.truth.values.size());
    }
    return run_trials(c, inst);
}

// Runs shared by the robustness and budget criteria.
const std::vector<Sweep>& attack_sweeps() {
    static std::optional<std::vector<Sweep>> cache;
    if (!cache) {
        std::vector<Sweep> s{{"gp_ucb/none", "gp_ucb", AttackType::None, 3, {}, 0},
                             {"gp_ucb/top3", "gp_ucb", AttackType::TopK, 3, {}, 0},
                             {"rgp_pe/clipping", "rgp_pe", AttackType::Clipping, 3, {}, 0},
                             {"rgp_pe/aggsub", "rgp_pe", AttackType::AggSub, 3, {}, 0},
                             {"rgp_pe/top3", "rgp_pe", AttackType::TopK, 3, {}, 0},
                             {"rgp_pe/top5", "rgp_pe", AttackType::TopK, 5, {}, 0},
                             {"rgp_pe/flip", "rgp_pe", AttackType::Flip, 3, {}, 0}};
        for (auto& sw : s) sw.trials = run_f1(sw.algo, sw.attack, sw.K, 50.0, &sw.argmax);
        cache = std::move(s);
    }
    return *cache;
}

Verdict robustness() {
    const auto& s = attack_sweeps();
    const double clean = last_quarter_slope(s[0].trials), attacked = last_quarter_slope(s[1].trials);
    const bool a = attacked >= 5.0 * clean;
    std::string detail = "(a) gp_ucb slope none " + fmt(clean) + ", top3 " + fmt(attacked) + (a ? " ok" : " FAIL");
    bool b = true, c = true;
    std::string bd = "; (b) rgp_pe/gp_ucb-top3 slope ratio", cd = "; (c) singleton-argmax trials";
    for (std::size_t i = 2; i < s.size(); ++i) {
        const double ratio = last_quarter_slope(s[i].trials) / attacked;
        b = b && ratio <= 0.2;
        int hits = 0;
        for (const auto& t : s[i].trials)
            if (t.trace.final_active == std::vector<std::size_t>{s[i].argmax}) ++hits;
        c = c && hits >= 8;
        const std::string name = s[i].label.substr(7);
        bd += " " + name + "=" + fmt(ratio, 3);
        cd += " " + name + "=" + std::to_string(hits) + "/10";
    }
    return {a && b && c, detail + bd + (b ? " ok" : " FAIL") + cd + (c ? " ok" : " FAIL")};
}

Verdict no_corruption() {
    double uniform = 0.0;
    std::string detail;
    bool pass = true;
    std::vector<std::vector<TrialOutput>> runs;
    for (const char* algo : {"rgp_pe", "gp_ucb", "rgp_ucb"}) {
        runs.push_back(run_f1(algo, AttackType::None, 3, 0.0, nullptr, &uniform));
        const double frac = mean_final_regret(runs.back()) / uniform;
        pass = pass && frac < 0.25;
        detail += std::string(algo) + " " + fmt(frac, 3) + "x uniform, ";
    }
    bool same = runs[1].size() == runs[2].size();
    for (std::size_t k = 0; same && k < runs[1].size(); ++k) {
        const auto &a = runs[1][k].trace.rows, &b = runs[2][k].trace.rows;
        same = a.size() == b.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].action == b[i].action && a[i].y == b[i].y;
    }
    return {pass && same, detail + "uniform regret " + fmt(uniform) + ", rgp_ucb==gp_ucb traces: " + (same ? "yes" : "no")};
}

Verdict newton_basis_check() {
    const auto d = Domain::grid(0.0, 1.0, 200, 1);
    const auto k = KernelSpec::squared_exponential(0.3);
    const Eigen::MatrixXd gram = gram_matrix(k, d);
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
    std::uniform_real_distribution<double> norm_b(0.2, 2.0);
    bool pass = true;
    std::size_t prev_dim = 0;
    double worst_interp = 0.0, worst_ratio = 0.0;
    std::string dims;
    for (double e : {0.3, 0.1, 0.03, 0.01}) {
        const auto b = newton_basis(k, d, e);
        dims += (dims.empty() ? "" : ",") + std::to_string(b.dim());
        pass = pass && b.dim() >= prev_dim && b.power2.maxCoeff() < e * e;
        prev_dim = b.dim();
        const Eigen::MatrixXd& n = b.values;

        // f = sum a_j k(., s_j) on the centers: projection reproduces f(s_i).
        Eigen::VectorXd a(static_cast<Eigen::Index>(b.dim()));
        for (auto& v : a) v = normal(rng);
        Eigen::VectorXd f_c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(a.size());
        for (Eigen::Index j = 0; j < a.size(); ++j) {
            const auto s = static_cast<Eigen::Index>(b.center_index[static_cast<std::size_t>(j)]);
            f_c += a(j) * gram.col(s);
            theta += a(j) * n.row(s).transpose();
        }
        for (std::size_t i = 0; i < b.dim(); ++i) {
            const auto s = static_cast<Eigen::Index>(b.center_index[i]);
            worst_interp = std::max(worst_interp, std::abs(n.row(s).dot(theta) - f_c(s)));
        }

        // Random combinations anywhere on the grid with norm B <= 2.
        for (int r = 0; r < 20; ++r) {
            std::vector<std::size_t> anchors;
            std::vector<double> coef;
            for (int j = 0; j < 5; ++j) {
                anchors.push_back(pick(rng));
                coef.push_back(normal(rng));
            }
            double norm2 = 0.0;
            for (std::size_t p = 0; p < anchors.size(); ++p)
                for (std::size_t q = 0; q < anchors.size(); ++q)
                    norm2 += coef[p] * coef[q] * gram(static_cast<Eigen::Index>(anchors[p]), static_cast<Eigen::Index>(anchors[q]));
            const double B = norm_b(rng);
            const double scale = B / std::sqrt(norm2);
            Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.size()));
            Eigen::VectorXd th = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.dim()));
            for (std::size_t j = 0; j < anchors.size(); ++j) {
                const auto x = static_cast<Eigen::Index>(anchors[j]);
                f += scale * coef[j] * gram.col(x);
                th += scale * coef[j] * n.row(x).transpose();
            }
            const double err = (f - n * th).cwiseAbs().maxCoeff();
            worst_ratio = std::max(worst_ratio, err / (e * B));
        }
    }
    pass = pass && worst_interp <= 1e-8 && worst_ratio <= 1.0;
    return {pass, "D(e=0.3,0.1,0.03,0.01)=" + dims + ", center error " + fmt(worst_interp) + ", max |f-<theta,x>|/(eB) " +
                      fmt(worst_ratio, 3)};
}

Verdict linear_pipeline() {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> radius(0.3, 1.0);
    Eigen::MatrixXd a(20, 3);
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 3; ++j) a(i, j) = normal(rng);
        a.row(i) *= radius(rng) / a.row(i).norm();
    }
    const Eigen::Vector3d theta(0.9, -0.4, 0.3);
    std::vector<double> f(20);
    for (int i = 0; i < 20; ++i) f[static_cast<std::size_t>(i)] = a.row(i).dot(theta);
    const auto truth = GroundTruth::from_values(f);

    Environment clean{truth, 0.0};
    AttackLedger none(AttackParams{}, f);
    Rng rng0(0);
    const auto r0 = run_rpe_linear(LinearElimParams{0.0, 0.1, 0.1, 0.0}, a, clean, none, rng0, 20000);
    const auto& e0 = r0.epochs.front();
    int wrong = 0, removable = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const bool above = truth.gap(i) > e0.threshold;
        const bool kept = std::find(e0.active_after.begin(), e0.active_after.end(), i) != e0.active_after.end();
        removable += above;
        if (above == kept) ++wrong;
    }

    int retained = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Environment env{truth, 0.02};
        AttackParams p;
        p.type = AttackType::Flip;
        p.budget = 20.0;
        AttackLedger ledger(p, f);
        Rng noise = make_stream(seed, 0, StreamRole::Noise);
        const auto r = run_rpe_linear(LinearElimParams{0.0, 0.1, 0.1, 20.0}, a, env, ledger, noise, 2000);
        const auto& fa = r.trace.final_active;
        if (std::find(fa.begin(), fa.end(), truth.argmax_index) != fa.end()) ++retained;
    }
    return {wrong == 0 && retained >= 8, "epoch-0 threshold " + fmt(e0.threshold) + ", " + std::to_string(removable) +
                                             " actions above it, misclassified " + std::to_string(wrong) +
                                             "; flip C=20 argmax retained " + std::to_string(retained) + "/10"};
}

Verdict budget_accounting() {
    std::size_t runs = 0, tight = 0;
    bool pass = true;
    for (const auto& sw : attack_sweeps()) {
        if (sw.attack == AttackType::None) continue;
        for (const auto& t : sw.trials) {
            ++runs;
            double total = 0.0;
            for (const auto& r : t.corruption) total += std::abs(r.applied);
            pass = pass && t.spent <= t.budget && total <= t.budget * (1.0 + 1e-12);
            if (t.demand > t.budget) {
                ++tight;
                pass = pass && t.spent == t.budget;
            }
        }
    }
    return {pass, std::to_string(runs) + " attacked runs, " + std::to_string(tight) + " exhausted the budget exactly"};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "oracle equivalence", 10, oracle_equivalence},
        {2, "averaging identity", 5, averaging_identity},
        {3, "epoch invariant audit", 300, epoch_audit},
        {4, "robustness reproduction", 900, robustness},
        {5, "no-corruption sanity", 600, no_corruption},
        {6, "newton basis", 60, newton_basis_check},
        {7, "linear-reduction pipeline", 120, linear_pipeline},
        {8, "budget accounting", 900, budget_accounting},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool ok = v.pass && secs <= c.limit_s;
        failed += !ok;
        std::printf("criterion %d %-26s %s  %s [%.1fs of %.0fs]\n", c.id, c.name, ok ? "PASS" : "FAIL", v.detail.c_str(), secs, c.limit_s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
