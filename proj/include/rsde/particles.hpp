#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include "rsde/functionals.hpp"
#include "rsde/geometry.hpp"
#include "rsde/integrator.hpp"
#include "rsde/model.hpp"

namespace rsde {

enum class HydroKind { identity, constant_block, regularized_coupling };

std::string_view to_string(HydroKind kind) noexcept;

/// Block diffusion matrix model A = (A^{(k,j)}) for N particles.
struct HydroModel {
    HydroKind kind = HydroKind::identity;
    /// constant_block: the full (N d) x (N d) SPD matrix.
    Matrix block_template;
    /// regularized_coupling: off-diagonal blocks strength * exp(-r / screening_length) * I.
    double strength = 0.0;
    double screening_length = 1.0;
};

struct ParticleSystemSpec {
    int n_particles = 2;
    int particle_dim = 2;
    Shape domain0 = Ball{Vector::Zero(2), 1.0};
    double nonsmooth_tolerance = 1e-6;
    std::shared_ptr<const PairPotential> potential = std::make_shared<ZeroPotential>();
    double beta = 1.0;
    HydroModel hydro;
    /// Pairs closer than this are collisions for admissibility.
    double min_separation = 1e-9;
    /// Pairs closer than this make the drift meaningless; 0 disables.
    double guard_radius = 0.0;

    int dim() const { return n_particles * particle_dim; }
    /// Throws InvalidArgument, or EllipticityViolation when the hydro model
    /// cannot be SPD (regularized coupling needs strength * (N - 1) < 1).
    void validate() const;
    /// Product of N copies of the single-particle domain.
    DomainGeometry geometry() const;
};

enum class ViolationKind { collision, outside_domain, multiple_boundary, density_vanishes };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    int first = -1;
    int second = -1;
};

struct AdmissibilityReport {
    bool admissible = true;
    std::vector<Violation> violations;
};

AdmissibilityReport is_admissible(const ParticleSystemSpec& spec, VectorCRef config);

double min_pair_distance(const ParticleSystemSpec& spec, VectorCRef config);

/// Throws NotAdmissible for inadmissible configurations.
Matrix hydrodynamic_matrix(const ParticleSystemSpec& spec, VectorCRef config);

/// Block drift sum_j div_j A^{(k,j)} - beta sum_j A^{(k,j)} sum_{l != j} grad Phi(x_j - x_l).
/// Throws SingularityGuard when a pair is closer than the guard radius.
Vector assemble_drift(const ParticleSystemSpec& spec, VectorCRef config);

/// A(x) of the particle system as a matrix field.
class HydroMatrixField final : public MatrixField {
public:
    explicit HydroMatrixField(ParticleSystemSpec spec);

    int dim() const override { return spec_.dim(); }
    void evaluate(VectorCRef x, MatrixRef out) const override;
    void divergence(VectorCRef x, VectorRef out) const override;
    bool is_constant() const override { return spec_.hydro.kind != HydroKind::regularized_coupling; }

private:
    ParticleSystemSpec spec_;
};

/// Unnormalized canonical density exp(-beta sum_{i<j} Phi(x_i - x_j)).
class ParticleDensity final : public DensityField {
public:
    explicit ParticleDensity(ParticleSystemSpec spec);

    int dim() const override { return spec_.dim(); }
    double value(VectorCRef x) const override { return std::exp(log_value(x)); }
    double log_value(VectorCRef x) const;
    void log_gradient(VectorCRef x, VectorRef out) const override;
    bool is_constant() const override { return spec_.n_particles == 1; }

private:
    ParticleSystemSpec spec_;
};

CoefficientField particle_field(const ParticleSystemSpec& spec);

/// Per-particle wall local times l_hat^{(k)} = rho 1_{T^{(k)}} dl / beta.
struct ParticleLedgers {
    std::vector<Series> ell_hat;  ///< n_particles cumulative series
    /// max over steps of |rho dl - beta sum_k dl_hat^{(k)}|.
    double max_balance_residual = 0.0;
};

/// Throws AmbiguousWallContact when a reflection step does not have exactly
/// one particle on the wall.
ParticleLedgers per_particle_localtime(const PathSample& path, const ParticleSystemSpec& spec);

struct ParticlePath {
    PathSample path;
    ParticleLedgers ledgers;
};

/// Integrates the particle SDE on the product domain; kills on collisions
/// below max(min_separation, guard_radius), double wall contact or rho under
/// the floor. Throws InvalidStart for inadmissible starts.
ParticlePath simulate_particles(const ParticleSystemSpec& spec, const IntegratorSpec& integrator,
                                VectorCRef initial, std::uint64_t seed);

/// CSV: t, x1_1..xN_d, ell_hat_1..ell_hat_N, alive.
void write_particle_csv(std::ostream& os, const ParticlePath& p, const ParticleSystemSpec& spec);

}  // namespace rsde
