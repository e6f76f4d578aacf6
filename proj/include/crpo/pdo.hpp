#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "crpo/cmdp.hpp"
#include "crpo/crpo.hpp"
#include "crpo/exact.hpp"
#include "crpo/policy.hpp"
#include "crpo/td.hpp"

namespace crpo {

struct PdoConfig {
    std::size_t t_max = 1000;
    double alpha = 0.1;       // policy stepsize
    double beta_dual = 0.01;  // dual stepsize
    double lambda_max = 0.0;  // 0 means the default 100/(1-gamma)
    TdConfig td;
    std::uint64_t seed = 0;
    EvalMode eval_mode = EvalMode::Td;
    double eval_epsilon = 0.0;
};

/// Primal-dual baseline: natural-gradient ascent on the Lagrangian value
/// Q_L = Qbar_0 - sum_i lambda_i Qbar_i, with projected dual ascent
/// lambda_i <- clip(lambda_i + beta_dual (Jbar_i - d_i), 0, lambda_max).
/// Duals start at zero. The trace reuses the CRPO record layout; N_0 here
/// collects the iterations whose estimated constraints were all satisfied.
inline CrpoRunRecord run_pdo(const TabularCmdp& m, const PdoConfig& cfg) {
    validate(m);
    const std::size_t p = m.num_cost_channels();
    const double lambda_cap =
        cfg.lambda_max > 0.0 ? cfg.lambda_max : 100.0 / (1.0 - m.gamma);

    SoftmaxPolicy policy(m.num_states, m.num_actions);
    std::vector<double> lambda(p, 0.0);
    Rng rng(Rng(cfg.seed).substream(0xc0ffee).next());

    CrpoConfig eval_cfg;  // reuse the shared per-channel evaluation path
    eval_cfg.td = cfg.td;
    eval_cfg.seed = cfg.seed;
    eval_cfg.eval_mode = cfg.eval_mode;
    eval_cfg.eval_epsilon = cfg.eval_epsilon;

    CrpoRunRecord rec;
    rec.entries.reserve(cfg.t_max);
    std::vector<SoftmaxPolicy> n0_policies;

    for (std::size_t t = 0; t < cfg.t_max; ++t) {
        const auto pi = policy.probs();
        std::vector<QEstimate> qbars;
        try {
            qbars = detail::evaluate_all_channels(m, pi, eval_cfg, t);
        } catch (const NotErgodic& e) {
            throw NotErgodicAtIteration(t, e.what());
        }
        IterationEntry entry;
        entry.t = t;
        entry.jbar = estimate_constraints(m, pi, qbars);
        entry.lambda = lambda;
        entry.in_n0 = true;
        for (std::size_t i = 0; i < p; ++i)
            if (entry.jbar[i + 1] > m.limits[i]) entry.in_n0 = false;
        entry.target = UpdateTarget::make_objective();
        entry.exact_j.resize(p + 1);
        for (std::size_t i = 0; i <= p; ++i) entry.exact_j[i] = exact_q(m, pi, i).j;

        std::vector<double> q_lagrangian = qbars[0].values;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < q_lagrangian.size(); ++k)
                q_lagrangian[k] -= lambda[i] * qbars[i + 1].values[k];
        policy = npg_step(policy, q_lagrangian, cfg.alpha, /*ascend=*/true, m.gamma);

        for (std::size_t i = 0; i < p; ++i)
            lambda[i] = std::clamp(lambda[i] + cfg.beta_dual * (entry.jbar[i + 1] - m.limits[i]),
                                   0.0, lambda_cap);

        if (entry.in_n0) {
            rec.n0.push_back(t);
            n0_policies.push_back(policy);
        }
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

}  // namespace crpo
