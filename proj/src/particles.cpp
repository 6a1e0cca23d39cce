#include "rsde/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rsde/error.hpp"
#include "rsde/format.hpp"

namespace rsde {

std::string_view to_string(HydroKind kind) noexcept {
    switch (kind) {
        case HydroKind::identity: return "identity";
        case HydroKind::constant_block: return "constant_block";
        case HydroKind::regularized_coupling: return "regularized_coupling";
    }
    return "unknown";
}

std::string_view to_string(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::collision: return "collision";
        case ViolationKind::outside_domain: return "outside_domain";
        case ViolationKind::multiple_boundary: return "multiple_boundary";
        case ViolationKind::density_vanishes: return "density_vanishes";
    }
    return "unknown";
}

void ParticleSystemSpec::validate() const {
    if (n_particles < 1 || particle_dim < 1) throw Error(ErrorCode::InvalidArgument, "need N >= 1 and d >= 1");
    if (shape_dim(domain0) != particle_dim) {
        throw Error(ErrorCode::InvalidArgument, "particle domain dimension does not match particle_dim");
    }
    if (!potential) throw Error(ErrorCode::InvalidArgument, "particle system needs a pair potential");
    if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be > 0");
    if (!(min_separation >= 0.0) || !(guard_radius >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "separation tolerances must be >= 0");
    }
    switch (hydro.kind) {
        case HydroKind::identity: break;
        case HydroKind::constant_block: {
            const Matrix& t = hydro.block_template;
            if (t.rows() != dim() || t.cols() != dim()) {
                throw Error(ErrorCode::InvalidArgument, "constant_block template must be (N d) x (N d)");
            }
            if ((t - t.transpose()).cwiseAbs().maxCoeff() > 0.0) {
                throw Error(ErrorCode::EllipticityViolation, "constant_block template is not symmetric");
            }
            Eigen::LLT<Matrix> llt(t);
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorCode::EllipticityViolation, "constant_block template is not positive definite");
            }
            break;
        }
        case HydroKind::regularized_coupling:
            if (!(hydro.strength >= 0.0) || !(hydro.screening_length > 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "coupling needs strength >= 0 and screening length > 0");
            }
            if (!(hydro.strength * (n_particles - 1) < 1.0)) {
                throw Error(ErrorCode::EllipticityViolation, "Gershgorin bound strength * (N - 1) < 1 fails");
            }
            break;
    }
}

DomainGeometry ParticleSystemSpec::geometry() const {
    return DomainGeometry::product(std::vector<Shape>(n_particles, domain0), nonsmooth_tolerance);
}

namespace {

auto block(VectorCRef x, int k, int d) { return x.segment(k * d, d); }

void assemble_matrix(const ParticleSystemSpec& spec, VectorCRef x, MatrixRef out) {
    const int n = spec.n_particles;
    const int d = spec.particle_dim;
    switch (spec.hydro.kind) {
        case HydroKind::identity: out.setIdentity(); return;
        case HydroKind::constant_block: out = spec.hydro.block_template; return;
        case HydroKind::regularized_coupling:
            out.setIdentity();
            for (int k = 0; k < n; ++k) {
                for (int j = k + 1; j < n; ++j) {
                    const double r = (block(x, k, d) - block(x, j, d)).norm();
                    const double c = spec.hydro.strength * std::exp(-r / spec.hydro.screening_length);
                    for (int i = 0; i < d; ++i) {
                        out(k * d + i, j * d + i) = c;
                        out(j * d + i, k * d + i) = c;
                    }
                }
            }
            return;
    }
}

void interaction_gradients(const ParticleSystemSpec& spec, VectorCRef x, VectorRef out) {
    const int n = spec.n_particles;
    const int d = spec.particle_dim;
    out.setZero();
    Vector g(d);
    for (int j = 0; j < n; ++j) {
        for (int l = j + 1; l < n; ++l) {
            spec.potential->gradient(block(x, j, d) - block(x, l, d), g);
            out.segment(j * d, d) += g;
            out.segment(l * d, d) -= g;
        }
    }
}

}  // namespace

double min_pair_distance(const ParticleSystemSpec& spec, VectorCRef x) {
    const int d = spec.particle_dim;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < spec.n_particles; ++k) {
        for (int j = k + 1; j < spec.n_particles; ++j) {
            best = std::min(best, (block(x, k, d) - block(x, j, d)).norm());
        }
    }
    return best;
}

AdmissibilityReport is_admissible(const ParticleSystemSpec& spec, VectorCRef x) {
    spec.validate();
    if (x.size() != spec.dim()) throw Error(ErrorCode::InvalidArgument, "configuration has the wrong size");
    const int d = spec.particle_dim;
    const DomainGeometry single(spec.domain0, spec.nonsmooth_tolerance);
    AdmissibilityReport rep;
    std::vector<int> on_wall;
    for (int k = 0; k < spec.n_particles; ++k) {
        const BoundaryClass cls = single.classify(block(x, k, d));
        if (cls == BoundaryClass::exterior || cls == BoundaryClass::exceptional) {
            rep.violations.push_back({ViolationKind::outside_domain, k, -1});
        }
        if (cls != BoundaryClass::interior) on_wall.push_back(k);
        for (int j = k + 1; j < spec.n_particles; ++j) {
            if ((block(x, k, d) - block(x, j, d)).norm() < spec.min_separation ||
                (block(x, k, d) - block(x, j, d)).norm() == 0.0) {
                rep.violations.push_back({ViolationKind::collision, k, j});
            }
        }
    }
    if (on_wall.size() > 1) rep.violations.push_back({ViolationKind::multiple_boundary, on_wall[0], on_wall[1]});
    if (rep.violations.empty()) {
        const ParticleDensity density(spec);
        if (!(density.value(x) > 0.0)) rep.violations.push_back({ViolationKind::density_vanishes, -1, -1});
    }
    rep.admissible = rep.violations.empty();
    return rep;
}

Matrix hydrodynamic_matrix(const ParticleSystemSpec& spec, VectorCRef x) {
    if (!is_admissible(spec, x).admissible) {
        throw Error(ErrorCode::NotAdmissible, "configuration is not admissible");
    }
    Matrix a(spec.dim(), spec.dim());
    assemble_matrix(spec, x, a);
    return a;
}

Vector assemble_drift(const ParticleSystemSpec& spec, VectorCRef x) {
    spec.validate();
    if (spec.guard_radius > 0.0 && min_pair_distance(spec, x) < spec.guard_radius) {
        throw Error(ErrorCode::SingularityGuard, "a pair is inside the singularity guard radius");
    }
    const HydroMatrixField a_field(spec);
    Matrix a(spec.dim(), spec.dim());
    a_field.evaluate(x, a);
    Vector div(spec.dim());
    a_field.divergence(x, div);
    Vector grads(spec.dim());
    interaction_gradients(spec, x, grads);
    return div - spec.beta * (a * grads);
}

HydroMatrixField::HydroMatrixField(ParticleSystemSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void HydroMatrixField::evaluate(VectorCRef x, MatrixRef out) const { assemble_matrix(spec_, x, out); }

void HydroMatrixField::divergence(VectorCRef x, VectorRef out) const {
    out.setZero();
    if (spec_.hydro.kind != HydroKind::regularized_coupling) return;
    const int d = spec_.particle_dim;
    const double eps = spec_.hydro.strength;
    const double lambda = spec_.hydro.screening_length;
    for (int k = 0; k < spec_.n_particles; ++k) {
        for (int j = 0; j < spec_.n_particles; ++j) {
            if (j == k) continue;
            const Vector diff = block(x, j, d) - block(x, k, d);
            const double r = diff.norm();
            if (r == 0.0) continue;
            out.segment(k * d, d) -= (eps / lambda) * std::exp(-r / lambda) / r * diff;
        }
    }
}

ParticleDensity::ParticleDensity(ParticleSystemSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

double ParticleDensity::log_value(VectorCRef x) const {
    const int d = spec_.particle_dim;
    double energy = 0.0;
    for (int i = 0; i < spec_.n_particles; ++i) {
        for (int j = i + 1; j < spec_.n_particles; ++j) {
            energy += spec_.potential->value(block(x, i, d) - block(x, j, d));
        }
    }
    return -spec_.beta * energy;
}

void ParticleDensity::log_gradient(VectorCRef x, VectorRef out) const {
    interaction_gradients(spec_, x, out);
    out *= -spec_.beta;
}

CoefficientField particle_field(const ParticleSystemSpec& spec) {
    return CoefficientField(std::make_shared<HydroMatrixField>(spec), std::make_shared<ParticleDensity>(spec));
}

ParticleLedgers per_particle_localtime(const PathSample& path, const ParticleSystemSpec& spec) {
    const DomainGeometry geometry = spec.geometry();
    const ParticleDensity density(spec);
    const std::size_t n = path.size();
    ParticleLedgers out;
    out.ell_hat.assign(spec.n_particles, Series(n, 0.0));
    std::vector<double> step_hat(spec.n_particles);
    for (std::size_t k = 1; k < n; ++k) {
        for (auto& s : out.ell_hat) s[k] = s[k - 1];
        const double dl = path.local_time[k] - path.local_time[k - 1];
        if (!(dl > 0.0)) continue;
        const auto x = path.state(k);
        const auto on = geometry.factors_on_boundary(x);
        if (on.size() != 1) {
            throw Error(ErrorCode::AmbiguousWallContact, "reflection step without a unique wall particle");
        }
        const double rho = density.value(x);
        std::fill(step_hat.begin(), step_hat.end(), 0.0);
        step_hat[on.front()] = rho * dl / spec.beta;
        double balance = 0.0;
        for (int p = 0; p < spec.n_particles; ++p) {
            out.ell_hat[p][k] += step_hat[p];
            balance += step_hat[p];
        }
        out.max_balance_residual = std::max(out.max_balance_residual, std::abs(rho * dl - spec.beta * balance));
    }
    return out;
}

ParticlePath simulate_particles(const ParticleSystemSpec& spec, const IntegratorSpec& integrator,
                                VectorCRef initial, std::uint64_t seed) {
    spec.validate();
    if (initial.size() != spec.dim()) throw Error(ErrorCode::InvalidStart, "initial configuration has the wrong size");
    if (!is_admissible(spec, initial).admissible) {
        throw Error(ErrorCode::InvalidStart, "initial configuration is not admissible");
    }
    const DomainGeometry geometry = spec.geometry();
    const CoefficientField field = particle_field(spec);
    IntegratorSpec ispec = integrator;
    const double separation = std::max(spec.min_separation, spec.guard_radius);
    auto user = integrator.admissible;
    ispec.admissible = [&spec, &geometry, separation, user](VectorCRef x) {
        if (spec.n_particles > 1 && min_pair_distance(spec, x) < separation) return false;
        if (geometry.factors_on_boundary(x).size() > 1) return false;
        return !user || user(x);
    };
    ParticlePath out;
    out.path = simulate(field, geometry, ispec, initial, seed);
    out.ledgers = per_particle_localtime(out.path, spec);
    return out;
}

void write_particle_csv(std::ostream& os, const ParticlePath& p, const ParticleSystemSpec& spec) {
    const int n = spec.n_particles;
    const int d = spec.particle_dim;
    os << 't';
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) os << ",x" << (k + 1) << '_' << (i + 1);
    }
    for (int k = 0; k < n; ++k) os << ",ell_hat_" << (k + 1);
    os << ",alive\n";
    for (std::size_t s = 0; s < p.path.size(); ++s) {
        os << format_number(p.path.time(s));
        const auto x = p.path.state(s);
        for (int i = 0; i < n * d; ++i) os << ',' << format_number(x[i]);
        for (int k = 0; k < n; ++k) os << ',' << format_number(p.ledgers.ell_hat[k][s]);
        os << ',' << static_cast<int>(p.path.alive[s]) << '\n';
    }
}

}  // namespace rsde
