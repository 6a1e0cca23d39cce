#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rsde/config.hpp"
#include "rsde/geometry.hpp"
#include "rsde/integrator.hpp"
#include "rsde/model.hpp"
#include "rsde/particles.hpp"

namespace rsde {

enum class PresetCategory { geometry, model, density, potential, hydro, suite };

std::string_view to_string(PresetCategory category) noexcept;

struct PresetEntry {
    PresetCategory category;
    std::string name;
    std::string schema;  ///< parameter summary shown by list-presets
};

class PresetRegistry {
public:
    /// Throws InvalidArgument on a duplicate (category, name).
    void add(PresetCategory category, std::string name, std::string schema);
    bool contains(PresetCategory category, std::string_view name) const;
    const std::vector<PresetEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<PresetEntry> entries_;
};

/// Everything the run config can name.
PresetRegistry default_registry();

/// One "category name: schema" line per entry, grouped by category in
/// registration order. Empty for an empty registry.
std::string list_presets(const PresetRegistry& registry);

/// Single-particle or whole-domain shape from the geometry block.
Shape build_shape(const GeometryConfig& config);
/// Domain of the run: the shape itself, or N copies for particle_system.
DomainGeometry build_geometry(const RunConfig& config);
std::shared_ptr<const PairPotential> build_potential(const PotentialConfig& config);
ParticleSystemSpec build_particle_spec(const RunConfig& config);
CoefficientField build_field(const RunConfig& config);
IntegratorSpec build_integrator_spec(const RunConfig& config);
/// integrator.x0, defaulting to the domain center for bounded domains.
Vector start_point(const RunConfig& config, const DomainGeometry& geometry);

}  // namespace rsde
