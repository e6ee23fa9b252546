#include "dopamine/testbed/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "dopamine/rng.hpp"

namespace dopamine::testbed {

void TabularMDP::finalize() {
    if (state_keys.empty()) {
        state_keys.reserve(static_cast<std::size_t>(n_states));
        for (int s = 0; s < n_states; ++s) state_keys.push_back("s" + std::to_string(s));
    }
    for (int s = 0; s < n_states; ++s) {
        if (!terminal[static_cast<std::size_t>(s)]) continue;
        for (int a = 0; a < n_actions; ++a) {
            double* r = row_mut(s, a);
            std::fill(r, r + n_states, 0.0);
            r[s] = 1.0;
        }
    }
}

estimators::PotentialFn TabularMDP::potential_fn() const {
    std::map<std::string, double> table;
    for (int s = 0; s < n_states; ++s) {
        table[state_keys[static_cast<std::size_t>(s)]] = true_potential[static_cast<std::size_t>(s)];
    }
    return [table = std::move(table)](const estimators::StateKey& k) -> std::optional<double> {
        const auto it = table.find(k);
        if (it == table.end()) return std::nullopt;
        return it->second;
    };
}

void TabularMDP::validate() const {
    if (n_states < 2 || n_states > kMaxStates) throw ConfigError("n_states out of range");
    if (n_actions < 1) throw ConfigError("n_actions must be >= 1");
    if (transition.size() != static_cast<std::size_t>(n_states) * n_actions * n_states) {
        throw ConfigError("transition table has wrong size");
    }
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (double p : row(s, a)) {
                if (p < 0.0) throw ConfigError("negative transition probability");
                sum += p;
            }
            if (std::fabs(sum - 1.0) > 1e-9) {
                throw ConfigError("transition row does not sum to 1 at state " +
                                  std::to_string(s));
            }
            if (terminal[static_cast<std::size_t>(s)] && row(s, a)[static_cast<std::size_t>(s)] != 1.0) {
                throw ConfigError("terminal state " + std::to_string(s) + " is not absorbing");
            }
        }
    }
    if (start_state < 0 || start_state >= n_states) throw ConfigError("bad start state");
    if (true_potential.size() != static_cast<std::size_t>(n_states)) {
        throw ConfigError("potential table has wrong size");
    }
    for (double v : true_potential) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("potential outside [0,1]");
    }
    if (std::fabs(true_potential[static_cast<std::size_t>(start_state)]) > 1e-12) {
        throw ConfigError("potential at start must be 0");
    }
    for (int s = 0; s < n_states; ++s) {
        if (gold[static_cast<std::size_t>(s)] &&
            std::fabs(true_potential[static_cast<std::size_t>(s)] - 1.0) > 1e-12) {
            throw ConfigError("potential at gold states must be 1");
        }
    }
}

RewardFn make_gold_reward(const TabularMDP& mdp) {
    return [&mdp](int s, int, int s2) {
        return (!mdp.terminal[static_cast<std::size_t>(s)] && mdp.gold[static_cast<std::size_t>(s2)])
                   ? 1.0
                   : 0.0;
    };
}

RewardFn make_grm_reward(const TabularMDP& mdp, const shaping::ShapingConfig& cfg) {
    RewardFn gold = make_gold_reward(mdp);
    const double gamma = cfg.gamma;
    return [&mdp, gold, gamma](int s, int a, int s2) {
        return gold(s, a, s2) + gamma * mdp.true_potential[static_cast<std::size_t>(s2)] -
               mdp.true_potential[static_cast<std::size_t>(s)];
    };
}

RewardFn make_naive_reward(const TabularMDP& mdp) {
    return [&mdp](int s, int, int s2) {
        return mdp.true_potential[static_cast<std::size_t>(s2)] -
               mdp.true_potential[static_cast<std::size_t>(s)];
    };
}

RewardFn make_gold_plus_naive_reward(const TabularMDP& mdp) {
    RewardFn gold = make_gold_reward(mdp);
    return [&mdp, gold](int s, int a, int s2) {
        return gold(s, a, s2) + mdp.true_potential[static_cast<std::size_t>(s2)] -
               mdp.true_potential[static_cast<std::size_t>(s)];
    };
}

TabularMDP make_random_mdp(std::uint64_t seed, int max_states, int max_actions) {
    rng::Rng gen(rng::derive(seed, "random-mdp"));
    TabularMDP mdp;
    mdp.n_states = static_cast<int>(gen.uniform_int(3, max_states));
    mdp.n_actions = static_cast<int>(gen.uniform_int(2, max_actions));
    const int goal = mdp.n_states - 1;
    mdp.start_state = 0;
    mdp.terminal.assign(static_cast<std::size_t>(mdp.n_states), 0);
    mdp.gold.assign(static_cast<std::size_t>(mdp.n_states), 0);
    mdp.terminal[static_cast<std::size_t>(goal)] = 1;
    mdp.gold[static_cast<std::size_t>(goal)] = 1;
    mdp.transition.assign(
        static_cast<std::size_t>(mdp.n_states) * mdp.n_actions * mdp.n_states, 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
        for (int a = 0; a < mdp.n_actions; ++a) {
            double* r = mdp.row_mut(s, a);
            // Sparse support keeps paths interesting in small MDPs.
            const int support = static_cast<int>(gen.uniform_int(1, std::min(4, mdp.n_states)));
            double sum = 0.0;
            for (int k = 0; k < support; ++k) {
                const int s2 = static_cast<int>(gen.index(static_cast<std::size_t>(mdp.n_states)));
                const double w = gen.uniform(0.05, 1.0);
                r[s2] += w;
                sum += w;
            }
            for (int s2 = 0; s2 < mdp.n_states; ++s2) r[s2] /= sum;
        }
    }
    mdp.true_potential.assign(static_cast<std::size_t>(mdp.n_states), 0.0);
    for (int s = 1; s < mdp.n_states; ++s) {
        mdp.true_potential[static_cast<std::size_t>(s)] = gen.uniform(0.0, 1.0);
    }
    mdp.true_potential[0] = 0.0;
    mdp.true_potential[static_cast<std::size_t>(goal)] = 1.0;
    mdp.finalize();
    mdp.validate();
    return mdp;
}

std::string GridWorldSpec::cell_key(int x, int y) {
    return "cell/" + std::to_string(x) + "/" + std::to_string(y);
}

namespace {

std::vector<int> bfs_distances(const GridWorldSpec& g, Cell from) {
    const int n = g.width * g.height;
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    auto id = [&g](Cell c) { return c.y * g.width + c.x; };
    std::deque<Cell> queue;
    dist[static_cast<std::size_t>(id(from))] = 0;
    queue.push_back(from);
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const Cell nc{c.x + dx[k], c.y + dy[k]};
            if (nc.x < 0 || nc.x >= g.width || nc.y < 0 || nc.y >= g.height) continue;
            if (g.walls.count(nc)) continue;
            auto& d = dist[static_cast<std::size_t>(id(nc))];
            if (d < 0) {
                d = dist[static_cast<std::size_t>(id(c))] + 1;
                queue.push_back(nc);
            }
        }
    }
    return dist;
}

}  // namespace

std::vector<double> GridWorldSpec::potential_grid() const {
    const std::vector<int> dist = bfs_distances(*this, goal_cell);
    const int d_start = dist[static_cast<std::size_t>(start_cell.y * width + start_cell.x)];
    if (d_start <= 0) throw ConfigError("gridworld: goal not reachable from start");
    std::vector<double> phi(static_cast<std::size_t>(width * height), 0.0);
    for (int i = 0; i < width * height; ++i) {
        const int d = dist[static_cast<std::size_t>(i)];
        if (d < 0) continue;  // unreachable or wall
        phi[static_cast<std::size_t>(i)] =
            std::clamp(1.0 - static_cast<double>(d) / d_start, 0.0, 1.0);
    }
    return phi;
}

TabularMDP GridWorldSpec::to_mdp() const {
    if (walls.count(start_cell) || walls.count(goal_cell)) {
        throw ConfigError("gridworld: start/goal must not be walls");
    }
    const int n = width * height;
    if (n > kMaxStates) throw ConfigError("gridworld exceeds the state cap");
    TabularMDP mdp;
    mdp.n_states = n;
    mdp.n_actions = 4;
    mdp.start_state = start_cell.y * width + start_cell.x;
    const int goal_id = goal_cell.y * width + goal_cell.x;
    mdp.terminal.assign(static_cast<std::size_t>(n), 0);
    mdp.gold.assign(static_cast<std::size_t>(n), 0);
    mdp.terminal[static_cast<std::size_t>(goal_id)] = 1;
    mdp.gold[static_cast<std::size_t>(goal_id)] = 1;
    mdp.transition.assign(static_cast<std::size_t>(n) * 4 * n, 0.0);

    auto step_to = [this](Cell c, int action) {
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        Cell nc{c.x + dx[action], c.y + dy[action]};
        if (nc.x < 0 || nc.x >= width || nc.y < 0 || nc.y >= height || walls.count(nc)) return c;
        return nc;
    };
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Cell c{x, y};
            const int s = y * width + x;
            if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
            for (int a = 0; a < 4; ++a) {
                double* r = mdp.row_mut(s, a);
                // Intended move with prob 1-slip, otherwise one of the other
                // three directions uniformly.
                const Cell intended = step_to(c, a);
                r[intended.y * width + intended.x] += 1.0 - slip_probability;
                for (int b = 0; b < 4; ++b) {
                    if (b == a) continue;
                    const Cell slipped = step_to(c, b);
                    r[slipped.y * width + slipped.x] += slip_probability / 3.0;
                }
            }
        }
    }
    mdp.true_potential = potential_grid();
    mdp.state_keys.reserve(static_cast<std::size_t>(n));
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) mdp.state_keys.push_back(cell_key(x, y));
    }
    mdp.finalize();
    mdp.validate();
    return mdp;
}

namespace {

std::vector<Cell> bfs_path(const GridWorldSpec& g, Cell from, Cell to) {
    const std::vector<int> dist = bfs_distances(g, to);
    auto id = [&g](Cell c) { return c.y * g.width + c.x; };
    if (dist[static_cast<std::size_t>(id(from))] < 0) {
        throw ConfigError("gridworld: cell (" + std::to_string(to.x) + "," +
                          std::to_string(to.y) + ") not reachable");
    }
    std::vector<Cell> path{from};
    Cell cur = from;
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!(cur == to)) {
        Cell best = cur;
        int best_d = dist[static_cast<std::size_t>(id(cur))];
        for (int k = 0; k < 4; ++k) {
            const Cell nc{cur.x + dx[k], cur.y + dy[k]};
            if (nc.x < 0 || nc.x >= g.width || nc.y < 0 || nc.y >= g.height) continue;
            if (g.walls.count(nc)) continue;
            const int d = dist[static_cast<std::size_t>(id(nc))];
            if (d >= 0 && d < best_d) {
                best = nc;
                best_d = d;
            }
        }
        cur = best;
        path.push_back(cur);
    }
    return path;
}

}  // namespace

std::vector<Cell> GridWorldSpec::shortest_path() const {
    return bfs_path(*this, start_cell, goal_cell);
}

Trajectory GridWorldSpec::demo_trajectory(const std::string& id) const {
    // Route through the subgoals in order; the joints become keyframes.
    std::vector<Cell> waypoints = subgoal_cells;
    waypoints.push_back(goal_cell);
    std::vector<Cell> path{start_cell};
    std::vector<int> keyframes{0};
    Cell cur = start_cell;
    for (const Cell& wp : waypoints) {
        const std::vector<Cell> seg = bfs_path(*this, cur, wp);
        path.insert(path.end(), seg.begin() + 1, seg.end());
        if (static_cast<int>(path.size()) - 1 != keyframes.back()) {
            keyframes.push_back(static_cast<int>(path.size()) - 1);
        }
        cur = wp;
    }
    const int frames = static_cast<int>(path.size());

    if (frames < 2) throw ConfigError("gridworld demo: start and goal coincide");
    Trajectory t;
    t.id = id;
    t.task_text = "navigate to the goal cell";
    t.num_frames = frames;
    t.views = {"state"};
    t.keyframe_indices = std::move(keyframes);
    auto& refs = t.frames_per_view["state"];
    refs.reserve(static_cast<std::size_t>(frames));
    for (const Cell& c : path) refs.push_back(cell_key(c.x, c.y));
    t.validate();
    return t;
}

void TrapMDPSpec::validate() const {
    if (honeypot_potential >= 1.0) {
        throw ConfigError("honeypot potential must be < 1 (a lure, not the goal)");
    }
    if (honeypot_potential < 0.0) throw ConfigError("honeypot potential must be >= 0");
    if (!(path_risk >= 0.0 && path_risk < 1.0)) throw ConfigError("path_risk must be in [0,1)");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
}

TabularMDP TrapMDPSpec::to_mdp() const {
    validate();
    TabularMDP mdp;
    mdp.n_states = 4;
    mdp.n_actions = 2;  // 0 = stay, 1 = advance
    mdp.start_state = kStart;
    mdp.terminal = {0, 0, 1, 1};
    mdp.gold = {0, 0, 1, 0};
    mdp.true_potential = {0.0, honeypot_potential, 1.0, 0.0};
    mdp.transition.assign(4ull * 2 * 4, 0.0);
    mdp.row_mut(kStart, 0)[kStart] = 1.0;
    mdp.row_mut(kStart, 1)[kHoneypot] = 1.0;
    mdp.row_mut(kHoneypot, 0)[kHoneypot] = 1.0;
    mdp.row_mut(kHoneypot, 1)[kGoal] = 1.0 - path_risk;
    mdp.row_mut(kHoneypot, 1)[kFail] = path_risk;
    mdp.finalize();
    mdp.validate();
    return mdp;
}

}  // namespace dopamine::testbed
