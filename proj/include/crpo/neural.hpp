#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "crpo/cmdp.hpp"
#include "crpo/crpo.hpp"
#include "crpo/exact.hpp"
#include "crpo/policy.hpp"
#include "crpo/rng.hpp"

namespace crpo {

class DegenerateTemperature : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-layer ReLU network f(x;W) = (1/sqrt(m)) sum_r b_r ReLU(W_r . psi(x)).
/// Only w trains; b is frozen at init and w0 anchors the TD projection ball.
struct TwoLayerNet {
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> w;   // m rows of length d, row-major
    std::vector<double> b;   // frozen output weights, Uniform[-1,1]
    std::vector<double> w0;  // snapshot of the initial w
};

/// Rows drawn as unit-norm Gaussian directions, b_r ~ Uniform[-1,1].
inline TwoLayerNet init_net(std::size_t m, std::size_t d, std::uint64_t seed) {
    if (m < 1 || d < 2) throw std::invalid_argument("init_net: need m >= 1 and d >= 2");
    Rng rng(seed);
    TwoLayerNet net;
    net.m = m;
    net.d = d;
    net.w.resize(m * d);
    net.b.resize(m);
    for (std::size_t r = 0; r < m; ++r) {
        double norm2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double g = rng.normal();
            net.w[r * d + k] = g;
            norm2 += g * g;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t k = 0; k < d; ++k) net.w[r * d + k] *= inv;
        net.b[r] = rng.uniform(-1.0, 1.0);
    }
    net.w0 = net.w;
    return net;
}

/// Forward pass with the strict indicator ReLU'(0) = 0 convention.
inline double forward(const TwoLayerNet& net, std::span<const double> psi_x,
                      const std::vector<double>& params) {
    double acc = 0.0;
    for (std::size_t r = 0; r < net.m; ++r) {
        double pre = 0.0;
        for (std::size_t k = 0; k < net.d; ++k) pre += params[r * net.d + k] * psi_x[k];
        if (pre > 0.0) acc += net.b[r] * pre;
    }
    return acc / std::sqrt(static_cast<double>(net.m));
}

inline double forward(const TwoLayerNet& net, std::span<const double> psi_x) {
    return forward(net, psi_x, net.w);
}

/// Parameter gradient: stacked rows (b_r/sqrt(m)) 1{W_r . psi > 0} psi.
inline std::vector<double> grad(const TwoLayerNet& net, std::span<const double> psi_x,
                                const std::vector<double>& params) {
    std::vector<double> g(net.m * net.d, 0.0);
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(net.m));
    for (std::size_t r = 0; r < net.m; ++r) {
        double pre = 0.0;
        for (std::size_t k = 0; k < net.d; ++k) pre += params[r * net.d + k] * psi_x[k];
        if (pre > 0.0) {
            const double scale = net.b[r] * inv_sqrt_m;
            for (std::size_t k = 0; k < net.d; ++k) g[r * net.d + k] = scale * psi_x[k];
        }
    }
    return g;
}

inline std::vector<double> grad(const TwoLayerNet& net, std::span<const double> psi_x) {
    return grad(net, psi_x, net.w);
}

/// Fixed feature vectors psi(s,a), each with 2-norm <= 1.
struct FeatureEmbedding {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t d = 0;
    std::vector<double> psi;  // [s][a][k]

    std::span<const double> at(std::size_t s, std::size_t a) const {
        return {psi.data() + (s * num_actions + a) * d, d};
    }
};

/// Seeded Gaussian directions normalized to unit norm; the environments are
/// tabular so the embedding is just a fixed table.
inline FeatureEmbedding make_embedding(std::size_t num_states, std::size_t num_actions,
                                       std::size_t d, std::uint64_t seed) {
    Rng rng(Rng(seed).substream(0x5157).next());
    FeatureEmbedding emb;
    emb.num_states = num_states;
    emb.num_actions = num_actions;
    emb.d = d;
    emb.psi.resize(num_states * num_actions * d);
    for (std::size_t i = 0; i < num_states * num_actions; ++i) {
        double norm2 = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double g = rng.normal();
            emb.psi[i * d + k] = g;
            norm2 += g * g;
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t k = 0; k < d; ++k) emb.psi[i * d + k] *= inv;
    }
    return emb;
}

/// Softmax policy with temperature: pi(a|s) proportional to
/// exp(tau f((s,a);W)). By ReLU homogeneity this equals pi_{tau W}.
struct NeuralPolicy {
    TwoLayerNet net;
    double tau = 0.0;

    /// Realized tabular policy, as logits tau*f over the embedding.
    SoftmaxPolicy realize(const FeatureEmbedding& emb) const {
        SoftmaxPolicy pol(emb.num_states, emb.num_actions);
        for (std::size_t s = 0; s < emb.num_states; ++s)
            for (std::size_t a = 0; a < emb.num_actions; ++a)
                pol.w(s, a) = tau * forward(net, emb.at(s, a));
        return pol;
    }
};

struct NeuralTdConfig {
    std::size_t k_in = 1000;
    double radius = 10.0;
    double beta = 0.0;  // 0 means the default min{1/sqrt(K), (1-gamma)/12}
    std::uint64_t seed = 0;
};

/// Projected neural TD with iterate averaging. The value net shares the
/// policy net's initialization; iterates stay in the radius-R ball around
/// theta_0 by a closed-form radial shrink, and the returned parameters are
/// the average of theta_0 .. theta_{K-1}.
inline std::vector<double> neural_td_evaluate(const TabularCmdp& model,
                                              const NeuralPolicy& policy,
                                              const FeatureEmbedding& emb, std::size_t channel,
                                              const NeuralTdConfig& cfg) {
    const auto pi = policy.realize(emb).probs();
    detail::TdSampler sampler(model, pi);
    Rng rng(cfg.seed);

    const TwoLayerNet& net = policy.net;
    const std::size_t n = net.m * net.d;
    std::vector<double> theta = net.w0;
    std::vector<double> avg(n, 0.0);
    const double beta = cfg.beta > 0.0
                            ? cfg.beta
                            : std::min(1.0 / std::sqrt(static_cast<double>(cfg.k_in)),
                                       (1.0 - model.gamma) / 12.0);

    for (std::size_t k = 0; k < cfg.k_in; ++k) {
        for (std::size_t j = 0; j < n; ++j) avg[j] += theta[j];

        const std::size_t s = sampler.sample_state(rng);
        const std::size_t a = sampler.sample_action(rng, s);
        const std::size_t sp = sampler.sample_next(rng, s, a);
        const std::size_t ap = sampler.sample_action(rng, sp);

        const double f_x = forward(net, emb.at(s, a), theta);
        const double f_xp = forward(net, emb.at(sp, ap), theta);
        const double err = model.cost(channel, s, a, sp) + model.gamma * f_xp - f_x;
        const auto g = grad(net, emb.at(s, a), theta);
        for (std::size_t j = 0; j < n; ++j) theta[j] += beta * err * g[j];

        double dist2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double diff = theta[j] - net.w0[j];
            dist2 += diff * diff;
        }
        if (dist2 > cfg.radius * cfg.radius) {
            const double shrink = cfg.radius / std::sqrt(dist2);
            for (std::size_t j = 0; j < n; ++j)
                theta[j] = net.w0[j] + shrink * (theta[j] - net.w0[j]);
        }
    }
    for (std::size_t j = 0; j < n; ++j) avg[j] /= static_cast<double>(cfg.k_in);
    return avg;
}

/// Batch constraint estimate: N pairs with s ~ xi, a ~ pi(.|s), weights 1/N.
inline std::vector<double> estimate_constraints_sampled(
    const TabularCmdp& model, const NeuralPolicy& policy, const FeatureEmbedding& emb,
    const std::vector<std::vector<double>>& value_params, std::size_t batch_size, Rng& rng) {
    const auto pi = policy.realize(emb).probs();
    const std::size_t A = model.num_actions;

    // Pre-evaluate f on the (finite) pair set, then just average draws.
    std::vector<std::vector<double>> f_table(value_params.size());
    for (std::size_t i = 0; i < value_params.size(); ++i) {
        f_table[i].resize(model.num_states * A);
        for (std::size_t s = 0; s < model.num_states; ++s)
            for (std::size_t a = 0; a < A; ++a)
                f_table[i][model.sa(s, a)] =
                    forward(policy.net, emb.at(s, a), value_params[i]);
    }

    std::vector<double> jbar(value_params.size(), 0.0);
    for (std::size_t j = 0; j < batch_size; ++j) {
        const std::size_t s = rng.categorical(std::span<const double>(model.xi));
        const std::size_t a = rng.categorical(std::span<const double>(pi.data() + s * A, A));
        for (std::size_t i = 0; i < value_params.size(); ++i)
            jbar[i] += f_table[i][model.sa(s, a)];
    }
    for (auto& v : jbar) v /= static_cast<double>(batch_size);
    return jbar;
}

/// Temperature-coupled natural-gradient step:
///   tau' = tau + alpha,   tau' W' = tau W +/- alpha theta_bar.
inline NeuralPolicy neural_npg_step(const NeuralPolicy& policy,
                                    const std::vector<double>& direction_params, double alpha,
                                    bool ascend) {
    const double tau_next = policy.tau + alpha;
    if (tau_next == 0.0) throw DegenerateTemperature("tau would become zero");
    NeuralPolicy next = policy;
    next.tau = tau_next;
    const double sign = ascend ? 1.0 : -1.0;
    for (std::size_t j = 0; j < next.net.w.size(); ++j)
        next.net.w[j] = (policy.tau * policy.net.w[j] + sign * alpha * direction_params[j]) /
                        tau_next;
    return next;
}

struct NeuralCrpoConfig {
    std::size_t t_max = 200;
    double alpha = 0.0;  // 0 means 1/sqrt(T)
    double eta = 1.0;
    TieBreak tie_break = TieBreak::FirstIndex;
    std::uint64_t seed = 0;
    NeuralTdConfig td;
    std::size_t m = 64;
    std::size_t batch_n = 0;  // 0 means ceil(T log(2T/delta)) with delta = 0.1
};

/// Algorithm loop with neural components: projected neural TD per channel,
/// sampled constraint estimation, the shared gate, and the temperature-
/// coupled update. tau_0 = 0 makes the initial policy exactly uniform.
inline CrpoRunRecord run_neural_crpo(const TabularCmdp& model, const FeatureEmbedding& emb,
                                     const NeuralCrpoConfig& cfg) {
    validate(model);
    const std::size_t p = model.num_cost_channels();
    const double alpha =
        cfg.alpha > 0.0 ? cfg.alpha : 1.0 / std::sqrt(static_cast<double>(cfg.t_max));
    const std::size_t batch_n =
        cfg.batch_n > 0 ? cfg.batch_n
                        : static_cast<std::size_t>(std::ceil(
                              static_cast<double>(cfg.t_max) *
                              std::log(2.0 * static_cast<double>(cfg.t_max) / 0.1)));

    NeuralPolicy policy;
    policy.net = init_net(cfg.m, emb.d, Rng(cfg.seed).substream(1).next());
    policy.tau = 0.0;
    Rng batch_rng(Rng(cfg.seed).substream(2).next());
    Rng gate_rng(Rng(cfg.seed).substream(3).next());

    CrpoRunRecord rec;
    rec.entries.reserve(cfg.t_max);
    std::vector<SoftmaxPolicy> n0_policies;

    for (std::size_t t = 0; t < cfg.t_max; ++t) {
        const SoftmaxPolicy realized = policy.realize(emb);
        const auto pi = realized.probs();

        std::vector<std::vector<double>> theta_bar(p + 1);
        try {
            for (std::size_t i = 0; i <= p; ++i) {
                NeuralTdConfig td = cfg.td;
                td.seed = Rng(cfg.seed).substream(16 + t * (p + 1) + i).next();
                theta_bar[i] = neural_td_evaluate(model, policy, emb, i, td);
            }
        } catch (const NotErgodic& e) {
            throw NotErgodicAtIteration(t, e.what());
        }

        IterationEntry entry;
        entry.t = t;
        entry.jbar = estimate_constraints_sampled(model, policy, emb, theta_bar, batch_n,
                                                  batch_rng);
        entry.target = select_target(entry.jbar, model.limits, cfg.eta, cfg.tie_break, gate_rng);
        entry.in_n0 = entry.target.objective;
        entry.exact_j.resize(p + 1);
        for (std::size_t i = 0; i <= p; ++i) entry.exact_j[i] = exact_q(model, pi, i).j;

        if (entry.in_n0) {
            rec.n0.push_back(t);
            n0_policies.push_back(realized);
        }
        const std::size_t dir = entry.target.objective ? 0 : entry.target.constraint_index;
        policy = neural_npg_step(policy, theta_bar[dir], alpha, entry.target.objective);
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
        const std::size_t pick = gate_rng.uniform_index(rec.n0.size());
        rec.selected = rec.n0[pick];
        rec.selected_policy = n0_policies[pick];
    }
    return rec;
}

inline nlohmann::json to_json(const TwoLayerNet& net) {
    return nlohmann::json{{"m", net.m}, {"d", net.d}, {"b", net.b}, {"w", net.w}, {"w0", net.w0}};
}

inline TwoLayerNet net_from_json(const nlohmann::json& j) {
    TwoLayerNet net;
    net.m = j.at("m").get<std::size_t>();
    net.d = j.at("d").get<std::size_t>();
    net.b = j.at("b").get<std::vector<double>>();
    net.w = j.at("w").get<std::vector<double>>();
    net.w0 = j.at("w0").get<std::vector<double>>();
    return net;
}

}  // namespace crpo
