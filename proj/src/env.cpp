#include "dymecu/env.hpp"

#include <stdexcept>

namespace dymecu {

GridWorld::GridWorld(int width, int height, int goal_x, int goal_y, int max_steps, bool onehot)
    : width_(width), height_(height), goal_x_(goal_x), goal_y_(goal_y), max_steps_(max_steps),
      onehot_(onehot) {
    if (width_ < 1 || height_ < 1) throw std::invalid_argument("GridWorld: size must be positive");
    if (goal_x_ < 0 || goal_x_ >= width_ || goal_y_ < 0 || goal_y_ >= height_)
        throw std::invalid_argument("GridWorld: goal outside the grid");
    if (goal_x_ == 0 && goal_y_ == 0)
        throw std::invalid_argument("GridWorld: goal coincides with the start cell");
    if (max_steps_ < 1) throw std::invalid_argument("GridWorld: max_steps must be positive");
}

int GridWorld::obs_dim() const { return onehot_ ? 2 + width_ * height_ : 2; }

Observation GridWorld::observe() const {
    Observation obs(static_cast<std::size_t>(obs_dim()), 0.0);
    obs[0] = static_cast<double>(x_) / width_;
    obs[1] = static_cast<double>(y_) / height_;
    if (onehot_) obs[2 + static_cast<std::size_t>(state_index())] = 1.0;
    return obs;
}

Observation GridWorld::reset(std::uint64_t seed) {
    (void)seed; // dynamics are deterministic; kept for interface symmetry
    x_ = 0;
    y_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult GridWorld::step(int action) {
    if (done_) throw std::logic_error("GridWorld::step: episode finished, call reset");
    if (action < 0 || action >= num_actions())
        throw std::invalid_argument("GridWorld::step: invalid action index");
    switch (action) {
        case 0: if (y_ + 1 < height_) ++y_; break;
        case 1: if (y_ > 0) --y_; break;
        case 2: if (x_ > 0) --x_; break;
        case 3: if (x_ + 1 < width_) ++x_; break;
    }
    ++steps_;
    StepResult r;
    const bool at_goal = x_ == goal_x_ && y_ == goal_y_;
    r.reward = at_goal ? 1.0 : 0.0;
    r.done = at_goal || steps_ >= max_steps_;
    r.obs = observe();
    done_ = r.done;
    return r;
}

ChainMdp::ChainMdp(int n, int max_steps, double slip_prob)
    : n_(n), max_steps_(max_steps), slip_prob_(slip_prob) {
    if (n_ < 2) throw std::invalid_argument("ChainMdp: n must be >= 2");
    if (max_steps_ < 1) throw std::invalid_argument("ChainMdp: max_steps must be positive");
    if (slip_prob_ < 0.0 || slip_prob_ > 1.0)
        throw std::invalid_argument("ChainMdp: slip_prob must lie in [0, 1]");
}

Observation ChainMdp::observe() const {
    Observation obs(static_cast<std::size_t>(n_), 0.0);
    obs[static_cast<std::size_t>(pos_)] = 1.0;
    return obs;
}

Observation ChainMdp::reset(std::uint64_t seed) {
    rng_ = Rng(seed);
    pos_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
}

StepResult ChainMdp::step(int action) {
    if (done_) throw std::logic_error("ChainMdp::step: episode finished, call reset");
    if (action < 0 || action >= num_actions())
        throw std::invalid_argument("ChainMdp::step: invalid action index");
    int move = action == 1 ? 1 : -1;
    if (slip_prob_ > 0.0 && rng_.uniform() < slip_prob_) move = -move;
    pos_ += move;
    if (pos_ < 0) pos_ = 0;
    if (pos_ >= n_) pos_ = n_ - 1;
    ++steps_;
    StepResult r;
    const bool at_end = pos_ == n_ - 1;
    r.reward = at_end ? 1.0 : 0.0;
    r.done = at_end || steps_ >= max_steps_;
    r.obs = observe();
    done_ = r.done;
    return r;
}

double coverage(const std::set<int>& visited, const Env& env) {
    return static_cast<double>(visited.size()) / static_cast<double>(env.num_states());
}

} // namespace dymecu
