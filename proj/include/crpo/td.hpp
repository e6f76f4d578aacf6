#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "crpo/cmdp.hpp"
#include "crpo/exact.hpp"
#include "crpo/policy.hpp"
#include "crpo/rng.hpp"

namespace crpo {

/// Per-channel state-action value estimate.
struct QEstimate {
    enum class Provenance { Exact, TdLearned };
    std::size_t channel = 0;
    std::vector<double> values;  // [s][a]
    Provenance provenance = Provenance::TdLearned;
};

struct TdConfig {
    std::size_t k_in = 100000;   // number of TD updates
    double sigma = 0.6;          // stepsize exponent, in (0,1)
    double beta0 = 0.5;          // stepsize multiplier: beta_k = beta0 / (1+k)^sigma
    std::uint64_t seed = 0;
};

namespace detail {

/// State-action sampler over the exact discounted visitation. Samples are
/// i.i.d.: s from the visitation state marginal, a ~ pi(.|s), s' ~ P(.|s,a),
/// a' ~ pi(.|s'). The marginal is the stationary distribution of the chain
/// with gamma-restarts to xi, so every state reachable from xi carries mass.
struct TdSampler {
    const TabularCmdp& model;
    const std::vector<double>& pi;  // [s][a]
    std::vector<double> state_marginal;

    TdSampler(const TabularCmdp& m, const std::vector<double>& pi_table)
        : model(m), pi(pi_table), state_marginal(visitation_state_marginal(m, pi_table, m.xi)) {
        for (std::size_t s = 0; s < m.num_states; ++s)
            if (!(state_marginal[s] > 1e-12))
                throw NotErgodic("sampling distribution degenerate at state " + std::to_string(s));
        for (double w : pi)
            if (!(w > 0.0))
                throw NotErgodic("policy places zero mass on some action");
    }

    std::size_t sample_state(Rng& rng) const {
        return rng.categorical(std::span<const double>(state_marginal));
    }
    std::size_t sample_action(Rng& rng, std::size_t s) const {
        return rng.categorical(
            std::span<const double>(pi.data() + s * model.num_actions, model.num_actions));
    }
    std::size_t sample_next(Rng& rng, std::size_t s, std::size_t a) const {
        const std::size_t S = model.num_states;
        return rng.categorical(std::span<const double>(
            model.transition.data() + (s * model.num_actions + a) * S, S));
    }
};

}  // namespace detail

/// Tabular TD(0) on one channel: K_in updates
///   theta(s,a) += beta_k [c_i(s,a,s') + gamma theta(s',a') - theta(s,a)]
/// from a zero-initialized table, with i.i.d. exact-distribution sampling.
/// The stepsize decays per pair, beta = beta0/(1+n(s,a))^sigma with n(s,a)
/// the pair's own update count; a globally decaying schedule starves pairs
/// the sampling distribution visits rarely.
inline QEstimate td_evaluate(const TabularCmdp& m, const std::vector<double>& pi,
                             std::size_t channel, const TdConfig& cfg) {
    detail::TdSampler sampler(m, pi);
    Rng rng(cfg.seed);
    QEstimate est;
    est.channel = channel;
    est.values.assign(m.num_states * m.num_actions, 0.0);
    std::vector<std::size_t> visits(m.num_states * m.num_actions, 0);
    for (std::size_t k = 0; k < cfg.k_in; ++k) {
        const std::size_t s = sampler.sample_state(rng);
        const std::size_t a = sampler.sample_action(rng, s);
        const std::size_t sp = sampler.sample_next(rng, s, a);
        const std::size_t ap = sampler.sample_action(rng, sp);
        const double beta =
            cfg.beta0 / std::pow(1.0 + static_cast<double>(visits[m.sa(s, a)]++), cfg.sigma);
        double& th = est.values[m.sa(s, a)];
        th += beta * (m.cost(channel, s, a, sp) + m.gamma * est.values[m.sa(sp, ap)] - th);
    }
    return est;
}

template <typename Policy>
QEstimate td_evaluate(const TabularCmdp& m, const Policy& policy, std::size_t channel,
                      const TdConfig& cfg) {
    return td_evaluate(m, probability_table(policy), channel, cfg);
}

/// Expected TD update direction at a given theta, with expectations taken
/// analytically under the sampling distribution. Zero at theta = Q_exact.
inline std::vector<double> td_expected_update(const TabularCmdp& m, const std::vector<double>& pi,
                                              std::size_t channel,
                                              const std::vector<double>& theta) {
    const std::size_t S = m.num_states, A = m.num_actions;
    const auto d = visitation_state_marginal(m, pi, m.xi);
    std::vector<double> drift(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double acc = 0.0;
            for (std::size_t sp = 0; sp < S; ++sp) {
                double next = 0.0;
                for (std::size_t ap = 0; ap < A; ++ap)
                    next += pi[m.sa(sp, ap)] * theta[m.sa(sp, ap)];
                acc += m.p(s, a, sp) * (m.cost(channel, s, a, sp) + m.gamma * next);
            }
            drift[m.sa(s, a)] = d[s] * pi[m.sa(s, a)] * (acc - theta[m.sa(s, a)]);
        }
    return drift;
}

}  // namespace crpo
