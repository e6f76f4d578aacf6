// Acceptance checks for the toolkit: one pass/fail line per criterion.
// Exit code is the number of failed criteria (the eta-robustness check is
// report-only and never fails the run).

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "crpo/crpo.hpp"
#include "crpo/envs.hpp"
#include "crpo/exact.hpp"
#include "crpo/lp_oracle.hpp"
#include "crpo/neural.hpp"
#include "crpo/pdo.hpp"
#include "crpo/td.hpp"
#include "test_util.hpp"

using namespace crpo;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail,
            bool gating = true) {
    if (!ok && gating) ++failures;
    std::printf("criterion %2d [%s]: %s — %s\n", idx, ok ? "pass" : (gating ? "FAIL" : "fail, recorded"),
                name, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double shortfall(double optimum, double achieved) { return std::max(optimum - achieved, 0.0); }

// --- 1: LP oracle against closed form and value iteration ------------------

void criterion_lp() {
    bool ok = true;
    std::string detail;

    const auto two = make_twostate();
    const auto sol = solve_optimal(two);
    ok &= sol.status == OccupancySolution::Status::Optimal;
    ok &= std::abs(sol.j_star[0] - 5.0) <= 1e-6;
    ok &= std::abs(sol.j_star[1] - 0.5) <= 1e-6;
    ok &= std::abs(sol.policy.prob(0, 1) - 1.0 / 11.0) <= 1e-6;
    detail = "two-state J*=(" + fmt(sol.j_star[0]) + "," + fmt(sol.j_star[1]) + "), pi*(a1|s0)=" +
             fmt(sol.policy.prob(0, 1));

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = make_garnet(8, 4, 3, 1, 3000 + seed);
        m.limits[0] = m.c_max / (1.0 - m.gamma);  // force the constraint inactive
        const auto s = solve_optimal(m);
        ok &= s.status == OccupancySolution::Status::Optimal;
        worst = std::max(worst, std::abs(s.j_star[0] - value_iteration(m, 0).j));
    }
    ok &= worst <= 1e-6;
    detail += "; inactive-constraint LP vs value iteration max |diff|=" + fmt(worst);
    report(1, "occupancy LP oracle", ok, detail);
}

// --- 2: performance-difference identity ------------------------------------

void criterion_perf_diff() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = testutil::random_cmdp(6, 3, 1, 100 + seed);
        const auto pi = testutil::random_policy(6, 3, 200 + seed).probs();
        const auto pip = testutil::random_policy(6, 3, 300 + seed).probs();
        Rng r(seed);
        const std::size_t ch = r.uniform_index(2);
        std::vector<double> rho(6);
        double z = 0.0;
        for (auto& v : rho) {
            v = r.uniform() + 0.01;
            z += v;
        }
        for (auto& v : rho) v /= z;
        auto [lhs, rhs] = performance_difference(m, pi, pip, ch, rho);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    report(2, "performance-difference identity", worst <= 1e-8, "max |lhs-rhs|=" + fmt(worst));
}

// --- 3: additive vs multiplicative form of the NPG step --------------------

void criterion_npg_form() {
    double worst = 0.0;
    Rng r(77);
    for (int k = 0; k < 100; ++k) {
        const std::size_t A = 2 + r.uniform_index(5);
        SoftmaxPolicy pol(1, A);
        std::vector<double> q(A);
        for (std::size_t a = 0; a < A; ++a) {
            pol.w(0, a) = r.uniform(-2.0, 2.0);
            q[a] = r.uniform(0.0, 10.0);
        }
        const double alpha = r.uniform(0.0, 0.3), gamma = 0.9;
        const auto stepped = npg_step(pol, q, alpha, true, gamma).probs_row(0);
        const auto pi = pol.probs_row(0);
        double z = 0.0;
        std::vector<double> mw(A);
        for (std::size_t a = 0; a < A; ++a) {
            mw[a] = pi[a] * std::exp(alpha * q[a] / (1.0 - gamma));
            z += mw[a];
        }
        for (std::size_t a = 0; a < A; ++a)
            worst = std::max(worst, std::abs(stepped[a] - mw[a] / z));
    }
    report(3, "natural-gradient closed form", worst <= 1e-12, "max prob diff=" + fmt(worst));
}

// --- 4: TD error trend ------------------------------------------------------

void criterion_td_trend() {
    const auto m = testutil::random_cmdp(5, 3, 0, 4242);
    const auto pi = mix_uniform(testutil::random_policy(5, 3, 4243).probs(), 3, 0.1);
    const auto exact = exact_q(m, pi, 0);

    auto med = [&](std::size_t k_in) {
        std::vector<double> errs;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            TdConfig cfg;
            cfg.k_in = k_in;
            cfg.sigma = 0.6;
            cfg.seed = 7000 + seed;
            errs.push_back(testutil::l2(td_evaluate(m, pi, 0, cfg).values, exact.q));
        }
        return testutil::median(errs);
    };
    const double e3 = med(1000), e4 = med(10000), e5 = med(100000), e_final = med(200000);
    const double bound = 0.05 * m.c_max / (1.0 - m.gamma);
    const bool ok = e4 < e3 && e5 < e4 && e_final <= bound;
    report(4, "TD error trend", ok,
           "median l2 err " + fmt(e3) + " > " + fmt(e4) + " > " + fmt(e5) + ", final " +
               fmt(e_final) + " <= " + fmt(bound));
}

// --- 5: gated run reaches the constrained optimum ---------------------------

void criterion_convergence() {
    bool ok = true;
    std::string detail;

    {
        const auto m = make_twostate();
        const auto sched = theorem_schedule(m, 3000, 0.1);
        CrpoConfig cfg;
        cfg.t_max = 3000;
        cfg.alpha = sched.alpha;
        cfg.eta = sched.eta;
        cfg.eval_mode = EvalMode::Exact;
        const auto rec = run_crpo(m, cfg);
        const double gap = shortfall(5.0, rec.n0_avg_exact_j[0]);
        const double viol = std::max(rec.n0_avg_exact_j[1] - m.limits[0], 0.0);
        ok &= !rec.empty_n0 && gap <= 0.15 && viol <= sched.eta + 0.05;
        detail = "two-state gap=" + fmt(gap) + ", violation=" + fmt(viol) + " (eta=" +
                 fmt(sched.eta) + ")";
    }
    {
        const auto m = make_gridworld_benchmark();
        const auto lp = solve_optimal(m);
        const double unconstrained = value_iteration(m, 0).j;
        const auto sched = theorem_schedule(m, 3000, 0.1);
        CrpoConfig cfg;
        cfg.t_max = 3000;
        cfg.alpha = sched.alpha;
        cfg.eta = sched.eta;
        cfg.eval_mode = EvalMode::Exact;
        const auto rec = run_crpo(m, cfg);
        const double gap = shortfall(lp.j_star[0], rec.n0_avg_exact_j[0]);
        const double budget = 0.1 * (unconstrained - lp.j_star[0]);
        const double viol = std::max(rec.n0_avg_exact_j[1] - m.limits[0], 0.0);
        ok &= !rec.empty_n0 && gap <= budget && viol <= sched.eta + 0.05;
        detail += "; grid gap=" + fmt(gap) + " <= " + fmt(budget) + ", violation=" + fmt(viol);
    }
    report(5, "gated convergence to the LP optimum", ok, detail);
}

// --- 6: averaged gap shrinks with the horizon -------------------------------

void criterion_rate() {
    // Ten seeded instances of the fixed 10-state generator family; exact
    // evaluation makes each run deterministic, so the seeds index instances.
    auto median_gap = [&](std::size_t t_max) {
        std::vector<double> gaps;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto m = make_garnet(10, 2, 3, 1, seed, 0.8);
            const auto lp = solve_optimal(m);
            const auto sched = theorem_schedule(m, t_max, 0.1);
            CrpoConfig cfg;
            cfg.t_max = t_max;
            cfg.alpha = sched.alpha;
            cfg.eta = sched.eta;
            cfg.eval_mode = EvalMode::Exact;
            const auto rec = run_crpo(m, cfg);
            gaps.push_back(shortfall(lp.j_star[0], rec.n0_avg_exact_j[0]));
        }
        return testutil::median(gaps);
    };
    const double g400 = median_gap(400), g1600 = median_gap(1600);
    report(6, "horizon scaling of the averaged gap", g1600 <= 0.7 * g400,
           "gap(T=400)=" + fmt(g400) + ", gap(T=1600)=" + fmt(g1600));
}

// --- 7: gated runs regain feasibility before tuned primal-dual --------------

void criterion_feasibility_speed() {
    const auto m = make_gridworld_benchmark();
    const std::size_t t_max = 2000;

    auto median_first = [&](auto&& run_one) {
        std::vector<double> firsts;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const CrpoRunRecord rec = run_one(seed);
            const long f = first_sustained_feasible(rec, m.limits);
            firsts.push_back(f < 0 ? static_cast<double>(t_max) : static_cast<double>(f));
        }
        return testutil::median(firsts);
    };

    // A small negative tolerance acts as a safety margin: the gate only opens
    // once the estimate sits strictly below the limit, so the run settles in a
    // band below it instead of hovering just above.
    const double crpo_med = median_first([&](std::uint64_t seed) {
        CrpoConfig cfg;
        cfg.t_max = t_max;
        cfg.alpha = 0.05;
        cfg.eta = -0.02;
        cfg.seed = seed;
        cfg.eval_mode = EvalMode::Exact;
        return run_crpo(m, cfg);
    });

    double best_pdo = static_cast<double>(t_max) + 1.0;
    double best_beta = 0.0;
    for (double beta : {0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05}) {
        const double med = median_first([&](std::uint64_t seed) {
            PdoConfig cfg;
            cfg.t_max = t_max;
            cfg.alpha = 0.05;  // same primal stepsize as the gated run
            cfg.beta_dual = beta;
            cfg.seed = seed;
            cfg.eval_mode = EvalMode::Exact;
            return run_pdo(m, cfg);
        });
        if (med < best_pdo) {
            best_pdo = med;
            best_beta = beta;
        }
    }
    report(7, "feasibility speed vs tuned primal-dual", crpo_med < best_pdo,
           "median first-feasible: gated " + fmt(crpo_med) + ", best primal-dual " + fmt(best_pdo) +
               " (beta=" + fmt(best_beta) + ")");
}

// --- 8: tolerance robustness (report-only) -----------------------------------

void criterion_eta_robustness() {
    const auto m = make_twostate();
    const double cost_range = m.c_max;  // instance costs live in [0, c_max]
    std::vector<double> finals;
    for (double scale : {10.0, 5.0, 2.0, 1.0, 0.5}) {
        CrpoConfig cfg;
        cfg.t_max = 1000;
        cfg.alpha = 0.05;
        cfg.eta = scale * cost_range;
        cfg.eval_mode = EvalMode::Exact;
        const auto rec = run_crpo(m, cfg);
        finals.push_back(rec.empty_n0 ? 0.0 : rec.n0_avg_exact_j[0]);
    }
    double lo = finals[0], hi = finals[0];
    for (double v : finals) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double j_range = m.c_max / (1.0 - m.gamma);
    report(8, "tolerance robustness of final return", hi - lo <= 0.1 * j_range,
           "spread=" + fmt(hi - lo) + " over grid, budget=" + fmt(0.1 * j_range),
           /*gating=*/false);
}

// --- 9: network invariants ----------------------------------------------------

void criterion_neural_invariants() {
    bool ok = true;
    std::string detail;

    // gradient vs central differences at interior points
    const auto net = init_net(8, 5, 55);
    Rng rng(56);
    double worst_fd = 0.0;
    std::size_t checked = 0;
    while (checked < 100) {
        std::vector<double> psi(5);
        for (auto& v : psi) v = rng.uniform(-1.0, 1.0);
        bool interior = true;
        for (std::size_t r = 0; r < 8; ++r) {
            double pre = 0.0;
            for (std::size_t k = 0; k < 5; ++k) pre += net.w[r * 5 + k] * psi[k];
            if (std::abs(pre) < 1e-4) interior = false;
        }
        if (!interior) continue;
        ++checked;
        const auto g = grad(net, psi);
        for (int rep = 0; rep < 4; ++rep) {
            const std::size_t idx = rng.uniform_index(40);
            auto up = net.w, dn = net.w;
            up[idx] += 1e-6;
            dn[idx] -= 1e-6;
            const double fd = (forward(net, psi, up) - forward(net, psi, dn)) / 2e-6;
            worst_fd = std::max(worst_fd, std::abs(fd - g[idx]));
        }
    }
    ok &= worst_fd <= 1e-5;
    detail = "fd err=" + fmt(worst_fd);

    // projection stays inside the ball at every iterate (checked via the
    // convexity of the ball on the returned average and a tiny-radius run)
    {
        const auto m = testutil::random_cmdp(3, 2, 0, 57);
        const auto emb = make_embedding(3, 2, 5, 58);
        NeuralPolicy pol;
        pol.net = init_net(8, 5, 59);
        NeuralTdConfig cfg;
        cfg.k_in = 2000;
        cfg.radius = 0.25;
        cfg.beta = 0.5;
        cfg.seed = 60;
        const auto avg = neural_td_evaluate(m, pol, emb, 0, cfg);
        double dist2 = 0.0;
        for (std::size_t j = 0; j < avg.size(); ++j) {
            const double diff = avg[j] - pol.net.w0[j];
            dist2 += diff * diff;
        }
        ok &= std::sqrt(dist2) <= cfg.radius + 1e-12;
        detail += ", proj dist=" + fmt(std::sqrt(dist2));
    }

    // temperature identity
    {
        const auto emb = make_embedding(3, 3, 5, 61);
        NeuralPolicy pol;
        pol.net = init_net(16, 5, 62);
        pol.tau = 2.3;
        NeuralPolicy scaled;
        scaled.net = pol.net;
        for (auto& v : scaled.net.w) v *= pol.tau;
        scaled.tau = 1.0;
        const auto a = pol.realize(emb).probs(), b = scaled.realize(emb).probs();
        double worst = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
        ok &= worst <= 1e-10;
        detail += ", temp identity err=" + fmt(worst);
    }

    // output layer frozen across updates
    {
        NeuralPolicy pol;
        pol.net = init_net(8, 4, 63);
        const auto b_before = pol.net.b;
        std::vector<double> dir(pol.net.w.size(), 0.1);
        ok &= neural_npg_step(pol, dir, 0.2, true).net.b == b_before;
    }

    // single-state fixture: learned value near c/(1-gamma)
    {
        TabularCmdp m;
        m.num_states = 1;
        m.num_actions = 1;
        m.gamma = 0.5;
        m.c_max = 1.0;
        m.xi = {1.0};
        m.transition = {1.0};
        m.channels = {std::vector<double>{1.0}};
        FeatureEmbedding emb;
        emb.num_states = 1;
        emb.num_actions = 1;
        emb.d = 2;
        emb.psi = {1.0, 0.0};
        NeuralPolicy pol;
        pol.net = init_net(32, 2, 64);
        NeuralTdConfig cfg;
        cfg.k_in = 100000;
        cfg.radius = 10.0;
        cfg.seed = 65;
        const auto avg = neural_td_evaluate(m, pol, emb, 0, cfg);
        const double f = forward(pol.net, emb.at(0, 0), avg);
        ok &= std::abs(f - 2.0) <= 0.2;
        detail += ", single-state f=" + fmt(f);
    }
    report(9, "network invariants", ok, detail);
}

// --- 10: full loop with the network policy ------------------------------------

void criterion_neural_end_to_end() {
    const auto m = make_twostate();
    const double uniform_j0 = exact_q(m, SoftmaxPolicy(2, 2), 0).j;

    const auto emb = make_embedding(2, 2, 8, 1234);
    NeuralCrpoConfig cfg;
    cfg.t_max = 200;
    cfg.m = 64;
    cfg.eta = 1.2;
    cfg.alpha = 0.2;
    cfg.td.k_in = 50000;
    cfg.td.beta = 0.07;
    cfg.td.radius = 40.0;
    cfg.seed = 6;
    const auto rec = run_neural_crpo(m, emb, cfg);
    const double j0 = rec.empty_n0 ? 0.0 : rec.n0_avg_exact_j[0];
    const double viol =
        rec.empty_n0 ? 1e9 : std::max(rec.n0_avg_exact_j[1] - m.limits[0], 0.0);
    const bool ok = !rec.empty_n0 && j0 >= uniform_j0 + 0.5 && viol <= cfg.eta + 0.1;
    report(10, "network policy end to end", ok,
           "avg J_0=" + fmt(j0) + " vs uniform " + fmt(uniform_j0) + ", violation=" + fmt(viol) +
               " <= " + fmt(cfg.eta + 0.1));
}

// --- 11: bitwise determinism ----------------------------------------------------

void criterion_determinism() {
    bool ok = true;

    const auto m = make_garnet(6, 3, 3, 1, 321);
    CrpoConfig cfg;
    cfg.t_max = 20;
    cfg.alpha = 0.1;
    cfg.eta = 0.1;
    cfg.td.k_in = 3000;
    cfg.seed = 5;
    const auto a = run_crpo(m, cfg), b = run_crpo(m, cfg);
    for (std::size_t t = 0; t < a.entries.size(); ++t) {
        ok &= a.entries[t].jbar == b.entries[t].jbar;
        ok &= a.entries[t].exact_j == b.entries[t].exact_j;
    }
    ok &= a.selected == b.selected;

    PdoConfig pcfg;
    pcfg.t_max = 20;
    pcfg.alpha = 0.1;
    pcfg.beta_dual = 0.01;
    pcfg.td.k_in = 3000;
    pcfg.seed = 5;
    const auto pa = run_pdo(m, pcfg), pb = run_pdo(m, pcfg);
    for (std::size_t t = 0; t < pa.entries.size(); ++t)
        ok &= pa.entries[t].jbar == pb.entries[t].jbar && pa.entries[t].lambda == pb.entries[t].lambda;

    const auto emb = make_embedding(6, 3, 6, 9);
    NeuralCrpoConfig ncfg;
    ncfg.t_max = 5;
    ncfg.m = 16;
    ncfg.td.k_in = 500;
    ncfg.batch_n = 200;
    ncfg.seed = 5;
    const auto na = run_neural_crpo(m, emb, ncfg), nb = run_neural_crpo(m, emb, ncfg);
    for (std::size_t t = 0; t < na.entries.size(); ++t)
        ok &= na.entries[t].jbar == nb.entries[t].jbar;

    report(11, "seeded runs repeat bit for bit", ok, ok ? "all traces identical" : "traces differ");
}

}  // namespace

int main() {
    criterion_lp();
    criterion_perf_diff();
    criterion_npg_form();
    criterion_td_trend();
    criterion_convergence();
    criterion_rate();
    criterion_feasibility_speed();
    criterion_eta_robustness();
    criterion_neural_invariants();
    criterion_neural_end_to_end();
    criterion_determinism();
    std::printf("%s (%d gating failure%s)\n", failures == 0 ? "ALL ACCEPTANCE CHECKS PASSED" : "ACCEPTANCE FAILURES",
                failures, failures == 1 ? "" : "s");
    return failures;
}
