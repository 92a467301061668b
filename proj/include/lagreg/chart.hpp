#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace lagreg {

enum class Role { Leaf, Fiber, Velocity, Time, Multiplier, MultiplierVelocity };

const char* role_name(Role role);

struct BaseCoordinate {
    std::string name;
    Role role = Role::Leaf;  // Leaf or Fiber
};

/// Named coordinates of a tangent or first-jet chart, optionally thickened.
///
/// Layout: [q..., qdot..., t?, mu_1..mu_r, mudot_1..mudot_r]. The velocity of
/// base coordinate `q` is named `qdot`. A thickened chart keeps the original
/// chart as a positional prefix, so the zero section embeds by padding zeros.
class Chart {
public:
    Chart() = default;

    static Chart tangent(std::vector<BaseCoordinate> base, bool has_time = false);

    /// Appends r multiplier coordinates and their velocities.
    Chart thickened(std::size_t multipliers) const;

    /// Same base names with a new leaf/fiber assignment.
    Chart with_fibers(const std::vector<std::size_t>& fiber_positions) const;

    std::size_t dim() const { return names_.size(); }
    /// Number of configuration coordinates, multipliers included.
    std::size_t base_dim() const { return config_.size(); }
    /// Dimension of the un-thickened prefix.
    std::size_t original_dim() const { return original_dim_; }
    std::size_t original_base_dim() const { return base_.size(); }
    std::size_t multiplier_count() const { return multipliers_; }
    bool is_thickened() const { return multipliers_ > 0 || thickened_; }
    bool has_time() const { return time_.has_value(); }
    std::size_t time_index() const;

    const std::string& name(std::size_t i) const { return names_.at(i); }
    Role role(std::size_t i) const { return roles_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<BaseCoordinate>& base() const { return base_; }

    std::optional<std::size_t> find(const std::string& name) const;
    /// Throws UnknownIdentifier.
    std::size_t index(const std::string& name) const;

    /// Configuration indices, paired position-wise with velocity().
    const std::vector<std::size_t>& config() const { return config_; }
    const std::vector<std::size_t>& velocity() const { return velocity_; }

    std::vector<std::size_t> leaf_positions() const;   // positions within base()
    std::vector<std::size_t> fiber_positions() const;  // positions within base()
    std::vector<std::size_t> multiplier_indices() const;
    std::vector<std::size_t> multiplier_velocity_indices() const;

    bool operator==(const Chart& other) const { return names_ == other.names_ && roles_ == other.roles_; }

private:
    std::vector<BaseCoordinate> base_;
    std::vector<std::string> names_;
    std::vector<Role> roles_;
    std::vector<std::size_t> config_;
    std::vector<std::size_t> velocity_;
    std::optional<std::size_t> time_;
    std::size_t original_dim_ = 0;
    std::size_t multipliers_ = 0;
    bool thickened_ = false;
};

std::string velocity_name(const std::string& base);
std::string multiplier_name(std::size_t k);           // 0-based k -> "mu_<k+1>"
std::string multiplier_velocity_name(std::size_t k);  // 0-based k -> "mudot_<k+1>"

}  // namespace lagreg
