#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "rsde/geometry.hpp"
#include "rsde/model.hpp"
#include "rsde/rng.hpp"
#include "rsde/types.hpp"

namespace rsde {

enum class Taming { none, standard };

struct IntegratorSpec {
    double step_size = 1e-3;
    double horizon = 1.0;
    /// standard: b_h = b / (1 + h |b|).
    Taming taming = Taming::standard;
    /// Paths are killed once rho drops to this level or below.
    double density_floor = 1e-12;
    /// Upper bound on |b_h|; larger tamed drifts are rescaled to this norm.
    std::optional<double> drift_cap;
    LocalizationLadder ladder;
    /// Multiplies the noise term. 1 outside of tests; 0 gives the drift ODE.
    double noise_scale = 1.0;
    /// Extra admissibility predicate on states; a false answer kills the path.
    std::function<bool(VectorCRef)> admissible;

    std::size_t steps() const;
    /// Throws InvalidArgument unless 0 < h <= T and the floor is positive.
    void validate() const;
};

/// Applies the spec's taming and drift cap to `drift` in place.
void tame_drift(const IntegratorSpec& spec, VectorRef drift);

enum class EventKind { reflection, killed_density, killed_exceptional, killed_ladder, killed_inadmissible };

std::string_view to_string(EventKind kind) noexcept;

struct PathEvent {
    std::size_t step = 0;  ///< grid index of the state the event refers to
    EventKind kind = EventKind::reflection;

    bool operator==(const PathEvent&) const = default;
};

/// One simulated path on the grid t_k = k h, k = 0..K. After killing, the
/// state is frozen at its last admissible value and `alive` stays false.
struct PathSample {
    int dim = 0;
    double step_size = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> states;          ///< (K+1) x dim, row-major
    std::vector<double> local_time;      ///< cumulative l_{t_k}
    std::vector<std::uint8_t> alive;     ///< 1 while the path is alive
    std::vector<PathEvent> events;
    /// Projection point P of each reflection step, in the order of the
    /// reflection events; boundary integrands are evaluated there.
    std::vector<double> contacts;

    std::size_t size() const { return local_time.size(); }
    double time(std::size_t k) const { return static_cast<double>(k) * step_size; }
    Eigen::Map<const Vector> state(std::size_t k) const {
        return Eigen::Map<const Vector>(states.data() + k * dim, dim);
    }
    /// Index of the last grid point at which the path is alive.
    std::size_t last_alive() const;
    bool killed() const { return !alive.empty() && !alive.back(); }

    bool operator==(const PathSample&) const = default;
};

struct StepResult {
    Vector next;
    double local_time_increment = 0.0;
    bool reflected = false;
};

/// One Euler-Maruyama step with co-normal pushback: the unconstrained
/// proposal Y = x + b_h h + sqrt(2h) sigma(x) noise is pushed back along
/// c = rho A nu at the projection P of Y by the smallest delta >= 0 that
/// returns it to the closure; the local-time increment is delta.
///
/// Throws DensityVanishes, ExceptionalBoundaryHit or CoNormalDegenerate.
StepResult step(const CoefficientField& field, const DomainGeometry& geometry,
                const IntegratorSpec& spec, VectorCRef state, VectorCRef noise);

/// Reusable stepping workspace for one (field, geometry, spec) triple.
class Stepper {
public:
    Stepper(const CoefficientField& field, const DomainGeometry& geometry, const IntegratorSpec& spec);

    /// Advances `state` in place and returns the local-time increment.
    double advance(VectorRef state, VectorCRef noise);
    bool last_reflected() const { return reflected_; }
    /// Projection point of the last reflecting step.
    const Vector& last_contact() const { return contact_; }

    const CoefficientField& field() const { return field_; }
    const DomainGeometry& geometry() const { return geometry_; }
    const IntegratorSpec& spec() const { return spec_; }

private:
    const CoefficientField& field_;
    const DomainGeometry& geometry_;
    const IntegratorSpec& spec_;
    PointCoefficients coeffs_;
    Matrix sigma_;
    Vector proposal_;
    Vector tamed_;
    Matrix boundary_a_;
    Vector contact_;
    bool constant_ = false;
    bool reflected_ = false;
    double sqrt_2h_;
};

/// Drives one path step by step with killing semantics, without storing it.
class PathWalker {
public:
    /// Throws InvalidStart when x0 is outside E_1 (exterior, exceptional,
    /// rho <= floor, beyond the ladder cap or inadmissible).
    PathWalker(const CoefficientField& field, const DomainGeometry& geometry, const IntegratorSpec& spec,
               VectorCRef x0, std::uint64_t seed);

    /// Advances with noise from the path's own stream.
    void advance();
    /// Advances with caller-supplied standard normals.
    void advance(VectorCRef noise);

    bool alive() const { return alive_; }
    std::size_t step_index() const { return k_; }
    double time() const { return static_cast<double>(k_) * stepper_.spec().step_size; }
    const Vector& state() const { return state_; }
    double local_time() const { return local_time_; }
    /// Increment of the last step (0 when it did not reflect).
    double last_increment() const { return last_increment_; }
    /// Projection point of the last step; meaningful when last_increment() > 0.
    const Vector& last_contact() const { return stepper_.last_contact(); }
    /// Kill reason, set once the path dies.
    std::optional<EventKind> kill_reason() const { return kill_reason_; }
    NormalSource& noise_source() { return noise_; }

private:
    void kill(EventKind reason);

    Stepper stepper_;
    NormalSource noise_;
    Vector state_;
    Vector noise_buffer_;
    Vector scratch_;
    std::size_t k_ = 0;
    double local_time_ = 0.0;
    double last_increment_ = 0.0;
    bool alive_ = true;
    std::optional<EventKind> kill_reason_;
};

PathSample simulate(const CoefficientField& field, const DomainGeometry& geometry,
                    const IntegratorSpec& spec, VectorCRef x0, std::uint64_t seed);

/// CSV with header t,x_1..x_d,ell,alive. With `with_header` false only the
/// rows are written; a non-negative path_id adds a leading path_id column.
void write_path_csv(std::ostream& os, const PathSample& path, long path_id = -1, bool with_header = true);

struct EnsembleOptions {
    /// Number of worker threads; results never depend on it. 0 = hardware.
    unsigned threads = 1;
    /// First path index; path i uses derive_seed(base_seed, first_index + i).
    std::size_t first_index = 0;
};

std::vector<PathSample> simulate_ensemble(const CoefficientField& field, const DomainGeometry& geometry,
                                          const IntegratorSpec& spec, VectorCRef x0, std::size_t n_paths,
                                          std::uint64_t base_seed, const EnsembleOptions& options = {});

/// Runs body(i) for i in [0, n) on `threads` workers. Exceptions are
/// rethrown on the calling thread (the one from the lowest index wins).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace rsde
