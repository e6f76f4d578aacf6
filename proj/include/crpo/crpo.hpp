#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "crpo/cmdp.hpp"
#include "crpo/exact.hpp"
#include "crpo/policy.hpp"
#include "crpo/rng.hpp"
#include "crpo/td.hpp"

namespace crpo {

enum class TieBreak { FirstIndex, MaxViolation, Random };
enum class EvalMode { Td, Exact };

struct CrpoConfig {
    std::size_t t_max = 1000;
    double alpha = 0.1;
    double eta = 0.0;
    TdConfig td;
    TieBreak tie_break = TieBreak::FirstIndex;
    std::uint64_t seed = 0;
    EvalMode eval_mode = EvalMode::Td;
    double eval_epsilon = 0.0;  // optional uniform mix used only for TD sampling
};

/// Target of one iteration's policy update.
struct UpdateTarget {
    bool objective = true;
    std::size_t constraint_index = 0;  // valid when !objective, in 1..p

    static UpdateTarget make_objective() { return {true, 0}; }
    static UpdateTarget make_constraint(std::size_t i) { return {false, i}; }
};

struct IterationEntry {
    std::size_t t = 0;
    UpdateTarget target;
    std::vector<double> jbar;     // estimated J for channels 0..p
    bool in_n0 = false;
    std::vector<double> exact_j;  // audit, channels 0..p
    std::vector<double> lambda;   // dual variables (primal-dual runs only)
};

struct CrpoRunRecord {
    std::vector<IterationEntry> entries;
    std::vector<std::size_t> n0;                 // iteration indices added to N_0
    std::optional<std::size_t> selected;         // uniform draw from N_0
    std::optional<SoftmaxPolicy> selected_policy;
    std::vector<double> n0_avg_exact_j;          // exact J averaged over N_0
    bool empty_n0 = false;

    std::size_t num_channels() const {
        return entries.empty() ? 0 : entries.front().exact_j.size();
    }
};

/// Tabular constraint estimation over the full state-action sample set with
/// weights xi(s) pi(a|s): Jbar_i = sum_{s,a} xi(s) pi(a|s) Qbar_i(s,a).
inline std::vector<double> estimate_constraints(const TabularCmdp& m,
                                                const std::vector<double>& pi,
                                                const std::vector<QEstimate>& qbars) {
    std::vector<double> jbar(qbars.size(), 0.0);
    for (std::size_t i = 0; i < qbars.size(); ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < m.num_states; ++s)
            for (std::size_t a = 0; a < m.num_actions; ++a)
                acc += m.xi[s] * pi[m.sa(s, a)] * qbars[i].values[m.sa(s, a)];
        jbar[i] = acc;
    }
    return jbar;
}

/// Rectification gate: objective iff every Jbar_i <= d_i + eta, otherwise a
/// violated constraint picked by the tie-break rule.
inline UpdateTarget select_target(const std::vector<double>& jbar,
                                  const std::vector<double>& limits, double eta,
                                  TieBreak tie_break, Rng& rng) {
    std::vector<std::size_t> violated;
    for (std::size_t i = 0; i < limits.size(); ++i)
        if (jbar[i + 1] > limits[i] + eta) violated.push_back(i + 1);
    if (violated.empty()) return UpdateTarget::make_objective();
    switch (tie_break) {
        case TieBreak::FirstIndex:
            return UpdateTarget::make_constraint(violated.front());
        case TieBreak::MaxViolation: {
            std::size_t best = violated.front();
            for (std::size_t i : violated)
                if (jbar[i] - limits[i - 1] > jbar[best] - limits[best - 1]) best = i;
            return UpdateTarget::make_constraint(best);
        }
        case TieBreak::Random:
            return UpdateTarget::make_constraint(violated[rng.uniform_index(violated.size())]);
    }
    return UpdateTarget::make_objective();
}

/// Closed-form tabular natural-gradient step: w' = w +/- alpha Qbar/(1-gamma).
inline SoftmaxPolicy npg_step(const SoftmaxPolicy& policy, const std::vector<double>& qbar,
                              double alpha, bool ascend, double gamma) {
    SoftmaxPolicy next = policy;
    const double scale = (ascend ? alpha : -alpha) / (1.0 - gamma);
    for (std::size_t k = 0; k < next.logits.size(); ++k) next.logits[k] += scale * qbar[k];
    return next;
}

/// Theorem-prescribed schedule for the tabular run: stepsize, tolerance and
/// the evaluation iteration count, all with unit hidden constants and the
/// KL budget replaced by its uniform-initialization bound log|A|.
struct TheoremSchedule {
    double alpha = 0.0;
    double eta = 0.0;
    double k_in = 0.0;  // can be astronomically large; kept as a double
};

inline TheoremSchedule theorem_schedule(const TabularCmdp& m, std::size_t t_max, double delta,
                                        double sigma = 0.6) {
    const double sa = static_cast<double>(m.num_states * m.num_actions);
    const double g = 1.0 - m.gamma;
    const double t = static_cast<double>(t_max);
    TheoremSchedule sched;
    sched.alpha = std::pow(g, 1.5) / std::sqrt(sa * t);
    const double kl_budget = std::log(static_cast<double>(m.num_actions));
    sched.eta = (2.0 * std::sqrt(sa) / (std::pow(g, 1.5) * std::sqrt(t))) *
                (3.0 + kl_budget + 3.0 * m.c_max + m.c_max * m.c_max);
    sched.k_in = std::pow(t, 1.0 / sigma) * std::pow(g, -2.0 / sigma) *
                 std::pow(std::log(std::pow(t, 1.0 + 2.0 / sigma) / delta), 2.0 / sigma);
    return sched;
}

namespace detail {

inline std::vector<QEstimate> evaluate_all_channels(const TabularCmdp& m,
                                                    const std::vector<double>& pi,
                                                    const CrpoConfig& cfg, std::size_t t) {
    std::vector<QEstimate> qbars;
    qbars.reserve(m.num_channels());
    if (cfg.eval_mode == EvalMode::Exact) {
        for (std::size_t i = 0; i < m.num_channels(); ++i) {
            QEstimate est;
            est.channel = i;
            est.values = exact_q(m, pi, i).q;
            est.provenance = QEstimate::Provenance::Exact;
            qbars.push_back(std::move(est));
        }
    } else {
        const auto sampling_pi =
            cfg.eval_epsilon > 0.0 ? mix_uniform(pi, m.num_actions, cfg.eval_epsilon) : pi;
        for (std::size_t i = 0; i < m.num_channels(); ++i) {
            TdConfig td = cfg.td;
            // Independent stream per (iteration, channel).
            td.seed = Rng(cfg.seed).substream(t * (m.num_channels() + 1) + i).next();
            qbars.push_back(td_evaluate(m, sampling_pi, i, td));
        }
    }
    return qbars;
}

}  // namespace detail

class NotErgodicAtIteration : public NotErgodic {
public:
    NotErgodicAtIteration(std::size_t t, const std::string& what)
        : NotErgodic("iteration " + std::to_string(t) + ": " + what), iteration(t) {}
    std::size_t iteration;
};

/// The constraint-rectified run: evaluate all channels, gate on the
/// estimated constraints, ascend on the objective or descend on a violated
/// constraint, and track N_0 for the output draw.
inline CrpoRunRecord run_crpo(const TabularCmdp& m, const CrpoConfig& cfg) {
    validate(m);
    const std::size_t p = m.num_cost_channels();
    SoftmaxPolicy policy(m.num_states, m.num_actions);  // w_0 = 0, uniform
    Rng rng(Rng(cfg.seed).substream(0xc0ffee).next());

    CrpoRunRecord rec;
    rec.entries.reserve(cfg.t_max);
    std::vector<SoftmaxPolicy> n0_policies;

    for (std::size_t t = 0; t < cfg.t_max; ++t) {
        const auto pi = policy.probs();
        std::vector<QEstimate> qbars;
        try {
            qbars = detail::evaluate_all_channels(m, pi, cfg, t);
        } catch (const NotErgodic& e) {
            throw NotErgodicAtIteration(t, e.what());
        }
        IterationEntry entry;
        entry.t = t;
        entry.jbar = estimate_constraints(m, pi, qbars);
        entry.target = select_target(entry.jbar, m.limits, cfg.eta, cfg.tie_break, rng);
        entry.in_n0 = entry.target.objective;
        entry.exact_j.resize(p + 1);
        for (std::size_t i = 0; i <= p; ++i) entry.exact_j[i] = exact_q(m, pi, i).j;

        if (entry.in_n0) {
            rec.n0.push_back(t);
            n0_policies.push_back(policy);
        }
        const std::size_t dir = entry.target.objective ? 0 : entry.target.constraint_index;
        policy = npg_step(policy, qbars[dir].values, cfg.alpha, entry.target.objective, m.gamma);
        rec.entries.push_back(std::move(entry));
    }

    rec.n0_avg_exact_j.assign(p + 1, 0.0);
    if (rec.n0.empty()) {
        rec.empty_n0 = true;
    } else {
        for (std::size_t idx : rec.n0)
            for (std::size_t i = 0; i <= p; ++i)
                rec.n0_avg_exact_j[i] += rec.entries[idx].exact_j[i];
        for (auto& v : rec.n0_avg_exact_j) v /= static_cast<double>(rec.n0.size());
        const std::size_t pick = rng.uniform_index(rec.n0.size());
        rec.selected = rec.n0[pick];
        rec.selected_policy = n0_policies[pick];
    }
    return rec;
}

/// Unconstrained natural-gradient ascent: the same run with the gate forced
/// open by an infinite tolerance.
inline CrpoRunRecord run_npg(const TabularCmdp& m, CrpoConfig cfg) {
    cfg.eta = std::numeric_limits<double>::infinity();
    return run_crpo(m, cfg);
}

/// First iteration from which all exact constraint values stay within their
/// limits for `window` consecutive iterations; -1 if none.
inline long first_sustained_feasible(const CrpoRunRecord& rec, const std::vector<double>& limits,
                                     std::size_t window = 50) {
    const auto& e = rec.entries;
    auto feasible = [&](std::size_t t) {
        for (std::size_t i = 0; i < limits.size(); ++i)
            if (e[t].exact_j[i + 1] > limits[i]) return false;
        return true;
    };
    std::size_t run = 0;
    for (std::size_t t = 0; t < e.size(); ++t) {
        run = feasible(t) ? run + 1 : 0;
        if (run >= window) return static_cast<long>(t + 1 - window);
    }
    return -1;
}

}  // namespace crpo
