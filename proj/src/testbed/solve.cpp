#include "dopamine/testbed/solve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dopamine/kernels.hpp"

namespace dopamine::testbed {

std::vector<int> VISolution::greedy_set(int s, int n_actions) const {
    double best = -1e300;
    for (int a = 0; a < n_actions; ++a) best = std::max(best, q_at(s, a, n_actions));
    std::vector<int> out;
    for (int a = 0; a < n_actions; ++a) {
        if (q_at(s, a, n_actions) >= best - kGreedyTieTol) out.push_back(a);
    }
    return out;
}

VISolution value_iteration(const TabularMDP& mdp, const RewardFn& reward, double gamma,
                           double tol, int max_iter) {
    if (!(tol > 0.0)) throw ConfigError("value iteration tol must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in (0,1)");
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    const std::size_t sa = static_cast<std::size_t>(S) * A;

    // Expected immediate reward per (s,a) is iteration-invariant.
    std::vector<double> rbar(sa, 0.0);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const auto row = mdp.row(s, a);
            double acc = 0.0;
            for (int s2 = 0; s2 < S; ++s2) {
                if (row[static_cast<std::size_t>(s2)] > 0.0) {
                    acc += row[static_cast<std::size_t>(s2)] * reward(s, a, s2);
                }
            }
            rbar[static_cast<std::size_t>(s) * A + a] = acc;
        }
    }

    VISolution sol;
    sol.q.assign(sa, 0.0);
    std::vector<double> q_next(sa, 0.0);
    std::vector<double> w(static_cast<std::size_t>(S), 0.0);  // gamma * V
    for (int it = 0; it < max_iter; ++it) {
        for (int s = 0; s < S; ++s) {
            double v = sol.q[static_cast<std::size_t>(s) * A];
            for (int a = 1; a < A; ++a) {
                v = std::max(v, sol.q[static_cast<std::size_t>(s) * A + a]);
            }
            w[static_cast<std::size_t>(s)] = gamma * v;
        }
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                q_next[static_cast<std::size_t>(s) * A + a] =
                    rbar[static_cast<std::size_t>(s) * A + a] + kernels::dot(mdp.row(s, a), w);
            }
        }
        const double residual = kernels::max_abs_diff(sol.q, q_next);
        sol.q.swap(q_next);
        sol.iterations = it + 1;
        sol.residual = residual;
        if (residual <= tol) {
            sol.v.assign(static_cast<std::size_t>(S), 0.0);
            for (int s = 0; s < S; ++s) {
                double v = sol.q[static_cast<std::size_t>(s) * A];
                for (int a = 1; a < A; ++a)
                    v = std::max(v, sol.q[static_cast<std::size_t>(s) * A + a]);
                sol.v[static_cast<std::size_t>(s)] = v;
            }
            return sol;
        }
    }
    throw std::runtime_error("value iteration failed to converge (malformed MDP?)");
}

namespace {

InvarianceReport compare_solutions(const TabularMDP& mdp, const VISolution& gold,
                                   const VISolution& alt, double tol) {
    InvarianceReport rep;
    rep.invariant = true;
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double shift = alt.q_at(s, a, mdp.n_actions) -
                                 (gold.q_at(s, a, mdp.n_actions) -
                                  mdp.true_potential[static_cast<std::size_t>(s)]);
            rep.q_shift_max_err = std::max(rep.q_shift_max_err, std::fabs(shift));
        }
        if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
        if (gold.greedy_set(s, mdp.n_actions) != alt.greedy_set(s, mdp.n_actions)) {
            rep.mismatched_states.push_back(s);
        }
    }
    if (!rep.mismatched_states.empty() || rep.q_shift_max_err > tol) rep.invariant = false;
    return rep;
}

}  // namespace

std::string InvarianceReport::describe() const {
    std::ostringstream os;
    os << (invariant ? "invariant" : "NOT invariant") << "; max |Q_grm - (Q_gold - Phi)| = "
       << q_shift_max_err;
    if (!mismatched_states.empty()) {
        os << "; greedy sets differ at states:";
        for (int s : mismatched_states) os << ' ' << s;
    }
    return os.str();
}

InvarianceReport verify_policy_invariance(const TabularMDP& mdp,
                                          const shaping::ShapingConfig& cfg, double tol) {
    const VISolution gold = value_iteration(mdp, make_gold_reward(mdp), cfg.gamma);
    const VISolution grm = value_iteration(mdp, make_grm_reward(mdp, cfg), cfg.gamma);
    return compare_solutions(mdp, gold, grm, tol);
}

InvarianceReport verify_invariance_against(const TabularMDP& mdp, const RewardFn& alternative,
                                           double gamma, double tol) {
    const VISolution gold = value_iteration(mdp, make_gold_reward(mdp), gamma);
    const VISolution alt = value_iteration(mdp, alternative, gamma);
    return compare_solutions(mdp, gold, alt, tol);
}

std::string TrapReport::describe() const {
    std::ostringstream os;
    os << "naive greedy at honeypot:";
    for (int a : naive_greedy_at_honeypot) os << ' ' << (a == 0 ? "stay" : "advance");
    os << "; shaped greedy at honeypot:";
    for (int a : grm_greedy_at_honeypot) os << ' ' << (a == 0 ? "stay" : "advance");
    os << "; P(goal within horizon): naive " << naive_goal_probability << ", shaped "
       << grm_goal_probability << "; stagnation objective sum_t gamma^(t-1)*Phi = "
       << stagnation_objective;
    return os.str();
}

namespace {

// Probability of occupying the goal within `horizon` steps under a fixed
// greedy policy (first greedy action per state), by forward propagation.
double goal_probability(const TabularMDP& mdp, const VISolution& sol, int horizon) {
    std::vector<double> dist(static_cast<std::size_t>(mdp.n_states), 0.0);
    dist[static_cast<std::size_t>(mdp.start_state)] = 1.0;
    std::vector<double> next(static_cast<std::size_t>(mdp.n_states), 0.0);
    for (int t = 0; t < horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int s = 0; s < mdp.n_states; ++s) {
            const double p = dist[static_cast<std::size_t>(s)];
            if (p <= 0.0) continue;
            const int a = sol.greedy_set(s, mdp.n_actions).front();
            const auto row = mdp.row(s, a);
            for (int s2 = 0; s2 < mdp.n_states; ++s2) {
                next[static_cast<std::size_t>(s2)] += p * row[static_cast<std::size_t>(s2)];
            }
        }
        dist.swap(next);
    }
    double p_goal = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.gold[static_cast<std::size_t>(s)]) p_goal += dist[static_cast<std::size_t>(s)];
    }
    return p_goal;
}

}  // namespace

TrapReport demonstrate_semantic_trap(const TrapMDPSpec& spec, double gamma) {
    spec.validate();
    const TabularMDP mdp = spec.to_mdp();
    const auto cfg = shaping::ShapingConfig::from_gamma(gamma);

    const VISolution naive = value_iteration(mdp, make_naive_reward(mdp), gamma);
    const VISolution grm = value_iteration(mdp, make_grm_reward(mdp, cfg), gamma);

    TrapReport rep;
    rep.naive_greedy_at_honeypot = naive.greedy_set(TrapMDPSpec::kHoneypot, mdp.n_actions);
    rep.grm_greedy_at_honeypot = grm.greedy_set(TrapMDPSpec::kHoneypot, mdp.n_actions);
    rep.naive_self_loops = rep.naive_greedy_at_honeypot == std::vector<int>{0};
    rep.grm_advances = rep.grm_greedy_at_honeypot == std::vector<int>{1};
    rep.naive_goal_probability = goal_probability(mdp, naive, spec.horizon);
    rep.grm_goal_probability = goal_probability(mdp, grm, spec.horizon);
    // Transformed objective sum_{t>=1} gamma^{t-1} Phi(s_t) for the policy
    // that walks to the lure and stays: every visited state from t=1 on is
    // the honeypot, so the series closes to Phi_h / (1 - gamma).
    rep.stagnation_objective = spec.honeypot_potential / (1.0 - gamma);
    return rep;
}

}  // namespace dopamine::testbed
