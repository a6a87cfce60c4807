#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <vector>

#include "dymecu/rng.hpp"

namespace dymecu {

using Observation = std::vector<double>;

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
};

// Small, seedable, sparse-reward environment. One instance per rollout
// worker; (seed, action sequence) fully determines the trajectory.
class Env {
public:
    virtual ~Env() = default;
    virtual Observation reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
    virtual int obs_dim() const = 0;
    virtual int num_actions() const = 0;
    virtual int num_states() const = 0;
    virtual int state_index() const = 0; // current state, for coverage tracking
};

// Bounded grid; the agent starts at (0,0) and earns +1 exactly on the step
// that reaches the goal. Actions: 0=up(y+1) 1=down(y-1) 2=left(x-1) 3=right(x+1),
// clipped at the walls. Observation: (x/width, y/height), plus a one-hot of
// the cell when enabled.
class GridWorld : public Env {
public:
    GridWorld(int width, int height, int goal_x, int goal_y, int max_steps, bool onehot);

    Observation reset(std::uint64_t seed) override;
    StepResult step(int action) override;
    int obs_dim() const override;
    int num_actions() const override { return 4; }
    int num_states() const override { return width_ * height_; }
    int state_index() const override { return y_ * width_ + x_; }

    int x() const { return x_; }
    int y() const { return y_; }
    int step_count() const { return steps_; }

private:
    Observation observe() const;

    int width_, height_, goal_x_, goal_y_, max_steps_;
    bool onehot_;
    int x_ = 0, y_ = 0, steps_ = 0;
    bool done_ = true;
};

// Line of n states; start at 0, +1 exactly on reaching the far end (n-1).
// Actions: 0=left 1=right; with probability slip_prob the move is inverted.
// Observation: one-hot of the position.
class ChainMdp : public Env {
public:
    ChainMdp(int n, int max_steps, double slip_prob);

    Observation reset(std::uint64_t seed) override;
    StepResult step(int action) override;
    int obs_dim() const override { return n_; }
    int num_actions() const override { return 2; }
    int num_states() const override { return n_; }
    int state_index() const override { return pos_; }

    int position() const { return pos_; }

private:
    Observation observe() const;

    int n_, max_steps_;
    double slip_prob_;
    int pos_ = 0, steps_ = 0;
    bool done_ = true;
    Rng rng_{0};
};

// |unique visited states| / |state space|
double coverage(const std::set<int>& visited, const Env& env);

} // namespace dymecu
