#include "lagreg/chart.hpp"

#include <algorithm>
#include <set>

#include "lagreg/errors.hpp"

namespace lagreg {

const char* role_name(Role role) {
    switch (role) {
        case Role::Leaf: return "leaf";
        case Role::Fiber: return "fiber";
        case Role::Velocity: return "velocity";
        case Role::Time: return "time";
        case Role::Multiplier: return "multiplier";
        case Role::MultiplierVelocity: return "multiplier_velocity";
    }
    return "unknown";
}

std::string velocity_name(const std::string& base) { return base + "dot"; }
std::string multiplier_name(std::size_t k) { return "mu_" + std::to_string(k + 1); }
std::string multiplier_velocity_name(std::size_t k) { return "mudot_" + std::to_string(k + 1); }

Chart Chart::tangent(std::vector<BaseCoordinate> base, bool has_time) {
    Chart c;
    const std::size_t n = base.size();
    for (const auto& b : base) {
        if (b.role != Role::Leaf && b.role != Role::Fiber)
            throw ConfigError("base coordinate '" + b.name + "' must be leaf or fiber");
        if (b.name.empty()) throw ConfigError("empty coordinate name");
        c.names_.push_back(b.name);
        c.roles_.push_back(b.role);
    }
    for (const auto& b : base) {
        c.names_.push_back(velocity_name(b.name));
        c.roles_.push_back(Role::Velocity);
    }
    if (has_time) {
        c.time_ = c.names_.size();
        c.names_.push_back("t");
        c.roles_.push_back(Role::Time);
    }
    for (std::size_t i = 0; i < n; ++i) {
        c.config_.push_back(i);
        c.velocity_.push_back(n + i);
    }
    std::set<std::string> seen;
    for (const auto& name : c.names_)
        if (!seen.insert(name).second) throw ConfigError("duplicate coordinate name '" + name + "'");
    c.base_ = std::move(base);
    c.original_dim_ = c.names_.size();
    return c;
}

Chart Chart::thickened(std::size_t multipliers) const {
    if (thickened_) throw ChartMismatch("chart is already thickened");
    Chart c = *this;
    c.thickened_ = true;
    c.multipliers_ = multipliers;
    const std::size_t first = c.names_.size();
    for (std::size_t k = 0; k < multipliers; ++k) {
        c.names_.push_back(multiplier_name(k));
        c.roles_.push_back(Role::Multiplier);
    }
    for (std::size_t k = 0; k < multipliers; ++k) {
        c.names_.push_back(multiplier_velocity_name(k));
        c.roles_.push_back(Role::MultiplierVelocity);
    }
    for (std::size_t k = 0; k < multipliers; ++k) {
        c.config_.push_back(first + k);
        c.velocity_.push_back(first + multipliers + k);
    }
    std::set<std::string> seen;
    for (const auto& name : c.names_)
        if (!seen.insert(name).second) throw ConfigError("duplicate coordinate name '" + name + "'");
    return c;
}

Chart Chart::with_fibers(const std::vector<std::size_t>& fiber_positions) const {
    if (thickened_) throw ChartMismatch("cannot reassign roles on a thickened chart");
    std::vector<BaseCoordinate> base = base_;
    for (auto& b : base) b.role = Role::Leaf;
    for (auto p : fiber_positions) base.at(p).role = Role::Fiber;
    return tangent(std::move(base), has_time());
}

std::size_t Chart::time_index() const {
    if (!time_) throw ChartMismatch("chart has no time coordinate");
    return *time_;
}

std::optional<std::size_t> Chart::find(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

std::size_t Chart::index(const std::string& name) const {
    auto i = find(name);
    if (!i) throw UnknownIdentifier(name);
    return *i;
}

std::vector<std::size_t> Chart::leaf_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < base_.size(); ++i)
        if (base_[i].role == Role::Leaf) out.push_back(i);
    return out;
}

std::vector<std::size_t> Chart::fiber_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < base_.size(); ++i)
        if (base_[i].role == Role::Fiber) out.push_back(i);
    return out;
}

std::vector<std::size_t> Chart::multiplier_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < multipliers_; ++k) out.push_back(original_dim_ + k);
    return out;
}

std::vector<std::size_t> Chart::multiplier_velocity_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < multipliers_; ++k) out.push_back(original_dim_ + multipliers_ + k);
    return out;
}

}  // namespace lagreg
