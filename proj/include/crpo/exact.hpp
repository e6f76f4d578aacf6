#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crpo/cmdp.hpp"
#include "crpo/policy.hpp"

namespace crpo {

class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotErgodic : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact evaluation of one channel under a fixed policy.
struct PolicyEvaluation {
    std::size_t channel = 0;
    std::vector<double> v;          // [s]
    std::vector<double> q;          // [s][a]
    std::vector<double> advantage;  // [s][a]
    double j = 0.0;                 // E_xi[V]
};

namespace detail {

/// Induced state chain P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a), row-major SxS.
inline Eigen::MatrixXd induced_chain(const TabularCmdp& m, const std::vector<double>& pi) {
    const std::size_t S = m.num_states, A = m.num_actions;
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double w = pi[m.sa(s, a)];
            if (w == 0.0) continue;
            for (std::size_t sp = 0; sp < S; ++sp) P(s, sp) += w * m.p(s, a, sp);
        }
    return P;
}

inline void check_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& b) {
    const double r = (A * x - b).lpNorm<Eigen::Infinity>();
    if (!(r <= 1e-10) || !x.allFinite())
        throw SingularSystem("linear solve residual " + std::to_string(r));
}

}  // namespace detail

/// Solves (I - gamma P_pi) V = cbar_pi by dense partial-pivot LU, then fills
/// Q, A and J. Residual above 1e-10 is treated as numerical failure.
inline PolicyEvaluation exact_q(const TabularCmdp& m, const std::vector<double>& pi,
                                std::size_t channel) {
    const std::size_t S = m.num_states, A = m.num_actions;
    const Eigen::MatrixXd P = detail::induced_chain(m, pi);
    const std::vector<double> cbar = m.mean_cost(channel);

    Eigen::VectorXd c = Eigen::VectorXd::Zero(S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) c(s) += pi[m.sa(s, a)] * cbar[m.sa(s, a)];

    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - m.gamma * P;
    const Eigen::VectorXd v = M.partialPivLu().solve(c);
    detail::check_residual(M, v, c);

    PolicyEvaluation out;
    out.channel = channel;
    out.v.assign(v.data(), v.data() + S);
    out.q.resize(S * A);
    out.advantage.resize(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double q = 0.0;
            for (std::size_t sp = 0; sp < S; ++sp)
                q += m.p(s, a, sp) * (m.cost(channel, s, a, sp) + m.gamma * out.v[sp]);
            out.q[m.sa(s, a)] = q;
            out.advantage[m.sa(s, a)] = q - out.v[s];
        }
    for (std::size_t s = 0; s < S; ++s) out.j += m.xi[s] * out.v[s];
    return out;
}

template <typename Policy>
PolicyEvaluation exact_q(const TabularCmdp& m, const Policy& policy, std::size_t channel) {
    return exact_q(m, probability_table(policy), channel);
}

/// J_i(pi) = E_xi[V^i_pi].
template <typename Policy>
double expected_return(const TabularCmdp& m, const Policy& policy, std::size_t channel) {
    return exact_q(m, policy, channel).j;
}

/// Discounted state-action visitation with an arbitrary start distribution:
/// nu(s,a) = (1-gamma) sum_t gamma^t Pr(s_t=s, a_t=a), from the transposed
/// flow system (I - gamma P_pi^T) d = (1-gamma) rho.
inline std::vector<double> visitation_measure(const TabularCmdp& m, const std::vector<double>& pi,
                                              const std::vector<double>& rho) {
    const std::size_t S = m.num_states, A = m.num_actions;
    const Eigen::MatrixXd P = detail::induced_chain(m, pi);
    Eigen::VectorXd b(S);
    for (std::size_t s = 0; s < S; ++s) b(s) = (1.0 - m.gamma) * rho[s];
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - m.gamma * P.transpose();
    const Eigen::VectorXd d = M.partialPivLu().solve(b);
    detail::check_residual(M, d, b);

    std::vector<double> nu(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) nu[m.sa(s, a)] = d(s) * pi[m.sa(s, a)];
    return nu;
}

template <typename Policy>
std::vector<double> visitation_measure(const TabularCmdp& m, const Policy& policy) {
    return visitation_measure(m, probability_table(policy), m.xi);
}

/// State marginal of the discounted visitation under start distribution rho.
inline std::vector<double> visitation_state_marginal(const TabularCmdp& m,
                                                     const std::vector<double>& pi,
                                                     const std::vector<double>& rho) {
    const std::size_t S = m.num_states, A = m.num_actions;
    auto nu = visitation_measure(m, pi, rho);
    std::vector<double> d(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) d[s] += nu[m.sa(s, a)];
    return d;
}

namespace detail {

/// Irreducibility + aperiodicity via positivity of P^(4|S|).
inline bool chain_is_ergodic(const Eigen::MatrixXd& P) {
    const auto S = P.rows();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(S, S);
    Eigen::MatrixXd base = P;
    long k = 4 * S;
    while (k > 0) {  // fast exponentiation; zero-pattern is what matters
        if (k & 1) acc = acc * base;
        base = base * base;
        k >>= 1;
    }
    return (acc.array() > 0.0).all();
}

/// Left stationary vector of an ergodic row-stochastic P: solve
/// (P^T - I + 1 1^T) mu = 1.
inline Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& P) {
    const auto S = P.rows();
    Eigen::MatrixXd M = P.transpose() - Eigen::MatrixXd::Identity(S, S) +
                        Eigen::MatrixXd::Ones(S, S);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(S);
    Eigen::VectorXd mu = M.partialPivLu().solve(b);
    check_residual(M, mu, b);
    return mu;
}

}  // namespace detail

/// Stationary distribution of the policy-induced chain, returned over (s,a)
/// as mu(s) pi(a|s). Refuses chains that are not irreducible and aperiodic.
inline std::vector<double> stationary_distribution(const TabularCmdp& m,
                                                   const std::vector<double>& pi) {
    const std::size_t S = m.num_states, A = m.num_actions;
    const Eigen::MatrixXd P = detail::induced_chain(m, pi);
    if (!detail::chain_is_ergodic(P))
        throw NotErgodic("induced chain is not irreducible and aperiodic");
    const Eigen::VectorXd mu = detail::stationary_vector(P);
    std::vector<double> out(S * A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) out[m.sa(s, a)] = mu(s) * pi[m.sa(s, a)];
    return out;
}

template <typename Policy>
std::vector<double> stationary_distribution(const TabularCmdp& m, const Policy& policy) {
    return stationary_distribution(m, probability_table(policy));
}

/// Both sides of the performance-difference identity
///   J_i^rho(pi) - J_i^rho(pi') =
///   (1/(1-gamma)) E_{s~nu_rho(pi)} E_{a~pi(.|s)} [A^i_{pi'}(s,a)],
/// computed independently so tests can compare them.
inline std::pair<double, double> performance_difference(const TabularCmdp& m,
                                                        const std::vector<double>& pi,
                                                        const std::vector<double>& pi_prime,
                                                        std::size_t channel,
                                                        const std::vector<double>& rho) {
    const std::size_t S = m.num_states, A = m.num_actions;
    auto j_under = [&](const std::vector<double>& p) {
        const auto ev = exact_q(m, p, channel);
        double j = 0.0;
        for (std::size_t s = 0; s < S; ++s) j += rho[s] * ev.v[s];
        return j;
    };
    const double lhs = j_under(pi) - j_under(pi_prime);

    const auto adv = exact_q(m, pi_prime, channel).advantage;
    const auto d = visitation_state_marginal(m, pi, rho);
    double rhs = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) rhs += d[s] * pi[m.sa(s, a)] * adv[m.sa(s, a)];
    rhs /= (1.0 - m.gamma);
    return {lhs, rhs};
}

/// Unconstrained value iteration on channel 0 (or any channel); independent
/// oracle for the LP and the generator limit rule.
struct ValueIterationResult {
    std::vector<double> v;       // [s]
    std::vector<double> q;       // [s][a]
    std::vector<double> policy;  // greedy deterministic, as a probability table
    double j = 0.0;
};

inline ValueIterationResult value_iteration(const TabularCmdp& m, std::size_t channel = 0,
                                            double tol = 1e-13, std::size_t max_iter = 1000000) {
    const std::size_t S = m.num_states, A = m.num_actions;
    std::vector<double> v(S, 0.0), vnew(S, 0.0);
    std::vector<double> q(S * A, 0.0);
    for (std::size_t it = 0; it < max_iter; ++it) {
        double delta = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < A; ++a) {
                double acc = 0.0;
                for (std::size_t sp = 0; sp < S; ++sp)
                    acc += m.p(s, a, sp) * (m.cost(channel, s, a, sp) + m.gamma * v[sp]);
                q[m.sa(s, a)] = acc;
                best = std::max(best, acc);
            }
            vnew[s] = best;
            delta = std::max(delta, std::abs(vnew[s] - v[s]));
        }
        v.swap(vnew);
        if (delta < tol * (1.0 - m.gamma)) break;
    }
    ValueIterationResult out;
    out.v = v;
    out.q = q;
    out.policy.assign(S * A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < A; ++a)
            if (q[m.sa(s, a)] > q[m.sa(s, best)]) best = a;
        out.policy[m.sa(s, best)] = 1.0;
    }
    for (std::size_t s = 0; s < S; ++s) out.j += m.xi[s] * v[s];
    return out;
}

}  // namespace crpo
