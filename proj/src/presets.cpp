#include "rsde/presets.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "rsde/error.hpp"

namespace rsde {

std::string_view to_string(PresetCategory category) noexcept {
    switch (category) {
        case PresetCategory::geometry: return "geometry";
        case PresetCategory::model: return "model";
        case PresetCategory::density: return "density";
        case PresetCategory::potential: return "potential";
        case PresetCategory::hydro: return "hydro";
        case PresetCategory::suite: return "suite";
    }
    return "unknown";
}

void PresetRegistry::add(PresetCategory category, std::string name, std::string schema) {
    if (contains(category, name)) {
        throw Error(ErrorCode::InvalidArgument, "preset '" + name + "' is already registered");
    }
    entries_.push_back({category, std::move(name), std::move(schema)});
}

bool PresetRegistry::contains(PresetCategory category, std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const PresetEntry& e) { return e.category == category && e.name == name; });
}

PresetRegistry default_registry() {
    using C = PresetCategory;
    PresetRegistry r;
    r.add(C::geometry, "interval", "a, b");
    r.add(C::geometry, "box", "lower[d], upper[d], excluded_faces[] (2*axis lower, 2*axis+1 upper)");
    r.add(C::geometry, "ball", "center[d], radius");
    r.add(C::geometry, "half_space", "dim, axis, offset  ({x_axis >= offset})");
    r.add(C::model, "identity", "A = I; density block");
    r.add(C::model, "constant_matrix", "matrix[d][d] (SPD); density block");
    r.add(C::model, "diagonal_poly", "base[d], curvature[d]  (a_ii = base_i + curvature_i x_i^2); density block");
    r.add(C::model, "lj_pair_density", "A = I, rho = exp(-beta Phi(x - anchor)); potential block, beta, anchor[d]");
    r.add(C::model, "particle_system",
          "n_particles, potential block, beta, hydro block, min_separation, guard_radius; geometry = one particle");
    r.add(C::density, "uniform", "rho = 1");
    r.add(C::density, "gaussian", "center[d], precision  (rho = exp(-precision |x - center|^2))");
    r.add(C::density, "exponential", "weights[d]  (rho = exp(weights . x))");
    r.add(C::potential, "zero", "Phi = 0");
    r.add(C::potential, "lennard_jones", "epsilon, sigma, cutoff (0 = none), shift");
    r.add(C::potential, "harmonic", "k  (Phi = k r^2 / 2)");
    r.add(C::potential, "soft_gaussian", "height, width  (Phi = height exp(-r^2 / (2 width^2)))");
    r.add(C::hydro, "identity", "A = I");
    r.add(C::hydro, "constant_block", "matrix[Nd][Nd] (SPD)");
    r.add(C::hydro, "regularized_coupling", "strength, screening_length  (strength (N - 1) < 1)");
    r.add(C::suite, "skorokhod", "n_paths, checkpoints[]: martingale, QV, covariation, local-time support, identity");
    r.add(C::suite, "revuz", "n_paths, alphas[], starts[], wall: discounted wall local time vs 1D potential");
    r.add(C::suite, "stationarity", "steps, bins, burn_in, tolerance: occupation TV vs rho / int rho");
    r.add(C::suite, "brownian", "n_paths: whitened interior increments");
    r.add(C::suite, "particles", "n_paths: local-time balance, per-particle support, min pair distance");
    return r;
}

std::string list_presets(const PresetRegistry& registry) {
    std::ostringstream os;
    for (auto cat : {PresetCategory::geometry, PresetCategory::model, PresetCategory::density,
                     PresetCategory::potential, PresetCategory::hydro, PresetCategory::suite}) {
        for (const auto& e : registry.entries()) {
            if (e.category == cat) os << to_string(cat) << ' ' << e.name << ": " << e.schema << '\n';
        }
    }
    return os.str();
}

namespace {

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const std::string& field) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != n) {
            throw Error(ErrorCode::ConfigError, "field '" + field + "': matrix must be square");
        }
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

void require_dim(std::size_t got, int dim, const std::string& field) {
    if (static_cast<int>(got) != dim) {
        throw Error(ErrorCode::ConfigError,
                    "field '" + field + "': expected " + std::to_string(dim) + " entries, got " + std::to_string(got));
    }
}

std::shared_ptr<const DensityField> build_density(const DensityConfig& c, int dim) {
    if (c.kind == "uniform") return std::make_shared<UniformDensity>(dim);
    if (c.kind == "gaussian") {
        require_dim(c.center.size(), dim, "model.density.center");
        return std::make_shared<GaussianDensity>(to_vector(c.center), c.precision);
    }
    if (c.kind == "exponential") {
        require_dim(c.weights.size(), dim, "model.density.weights");
        return std::make_shared<ExponentialDensity>(to_vector(c.weights));
    }
    throw Error(ErrorCode::ConfigError, "field 'model.density.kind': unknown preset '" + c.kind + "'");
}

}  // namespace

Shape build_shape(const GeometryConfig& g) {
    if (g.shape == "interval") return Interval{g.a, g.b};
    if (g.shape == "box") {
        if (g.lower.size() != g.upper.size()) {
            throw Error(ErrorCode::ConfigError, "field 'geometry.upper': lower and upper differ in length");
        }
        return Box{to_vector(g.lower), to_vector(g.upper), g.excluded_faces};
    }
    if (g.shape == "ball") return Ball{to_vector(g.center), g.radius};
    if (g.shape == "half_space") return HalfSpace{g.dim, g.axis, g.offset};
    throw Error(ErrorCode::ConfigError, "field 'geometry.shape': unknown preset '" + g.shape + "'");
}

DomainGeometry build_geometry(const RunConfig& c) {
    if (c.model.preset == "particle_system") return build_particle_spec(c).geometry();
    return DomainGeometry(build_shape(c.geometry), c.geometry.nonsmooth_tolerance);
}

std::shared_ptr<const PairPotential> build_potential(const PotentialConfig& p) {
    if (p.kind == "zero") return std::make_shared<ZeroPotential>();
    if (p.kind == "lennard_jones") {
        const double cutoff = p.cutoff > 0.0 ? p.cutoff : std::numeric_limits<double>::infinity();
        return std::make_shared<LennardJones>(p.epsilon, p.sigma, cutoff, p.shift);
    }
    if (p.kind == "harmonic") return std::make_shared<HarmonicPotential>(p.k);
    if (p.kind == "soft_gaussian") return std::make_shared<SoftGaussianPotential>(p.height, p.width);
    throw Error(ErrorCode::ConfigError, "field 'model.potential.kind': unknown preset '" + p.kind + "'");
}

ParticleSystemSpec build_particle_spec(const RunConfig& c) {
    const ModelConfig& m = c.model;
    ParticleSystemSpec s;
    s.n_particles = m.n_particles;
    s.domain0 = build_shape(c.geometry);
    s.particle_dim = shape_dim(s.domain0);
    s.nonsmooth_tolerance = c.geometry.nonsmooth_tolerance;
    s.potential = build_potential(m.potential);
    s.beta = m.beta;
    s.min_separation = m.min_separation;
    if (m.guard_radius >= 0.0) {
        s.guard_radius = m.guard_radius;
    } else {
        s.guard_radius = m.potential.kind == "lennard_jones" ? 0.5 * m.potential.sigma : 0.0;
    }
    if (m.hydro.kind == "identity") {
        s.hydro.kind = HydroKind::identity;
    } else if (m.hydro.kind == "constant_block") {
        s.hydro.kind = HydroKind::constant_block;
        s.hydro.block_template = to_matrix(m.hydro.matrix, "model.hydro.matrix");
    } else if (m.hydro.kind == "regularized_coupling") {
        s.hydro.kind = HydroKind::regularized_coupling;
        s.hydro.strength = m.hydro.strength;
        s.hydro.screening_length = m.hydro.screening_length;
    } else {
        throw Error(ErrorCode::ConfigError, "field 'model.hydro.kind': unknown preset '" + m.hydro.kind + "'");
    }
    s.validate();
    return s;
}

CoefficientField build_field(const RunConfig& c) {
    const ModelConfig& m = c.model;
    if (m.preset == "particle_system") return particle_field(build_particle_spec(c));
    const int dim = shape_dim(build_shape(c.geometry));
    if (m.preset == "identity") {
        return CoefficientField(std::make_shared<ConstantMatrix>(Matrix::Identity(dim, dim)),
                                build_density(m.density, dim));
    }
    if (m.preset == "constant_matrix") {
        require_dim(m.matrix.size(), dim, "model.matrix");
        return CoefficientField(std::make_shared<ConstantMatrix>(to_matrix(m.matrix, "model.matrix")),
                                build_density(m.density, dim));
    }
    if (m.preset == "diagonal_poly") {
        require_dim(m.base.size(), dim, "model.base");
        require_dim(m.curvature.size(), dim, "model.curvature");
        return CoefficientField(std::make_shared<DiagonalPolyMatrix>(to_vector(m.base), to_vector(m.curvature)),
                                build_density(m.density, dim));
    }
    if (m.preset == "lj_pair_density") {
        Vector anchor = Vector::Zero(dim);
        if (!m.anchor.empty()) {
            require_dim(m.anchor.size(), dim, "model.anchor");
            anchor = to_vector(m.anchor);
        }
        return CoefficientField(std::make_shared<ConstantMatrix>(Matrix::Identity(dim, dim)),
                                std::make_shared<PairDensity>(build_potential(m.potential), m.beta, anchor));
    }
    throw Error(ErrorCode::ConfigError, "field 'model.preset': unknown preset '" + m.preset + "'");
}

IntegratorSpec build_integrator_spec(const RunConfig& c) {
    const IntegratorConfig& i = c.integrator;
    IntegratorSpec s;
    s.step_size = i.step_size;
    s.horizon = i.horizon;
    s.taming = i.taming == "none" ? Taming::none : Taming::standard;
    s.density_floor = i.density_floor;
    s.ladder.max_level = i.max_level;
    if (i.drift_cap > 0.0) s.drift_cap = i.drift_cap;
    s.validate();
    return s;
}

Vector start_point(const RunConfig& c, const DomainGeometry& geometry) {
    if (!c.integrator.x0.empty()) {
        require_dim(c.integrator.x0.size(), geometry.dim(), "integrator.x0");
        return to_vector(c.integrator.x0);
    }
    if (c.model.preset == "particle_system") {
        throw Error(ErrorCode::ConfigError, "field 'integrator.x0': particle systems need an initial configuration");
    }
    const auto box = geometry.bounding_box();
    return 0.5 * (box.first + box.second);
}

}  // namespace rsde
