#include "rsde/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rsde/error.hpp"
#include "rsde/format.hpp"
#include "rsde/presets.hpp"

namespace rsde {
namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& field, const std::string& msg) const {
        std::string where = source_;
        if (node.IsDefined() && node.Mark().line >= 0) where += ":" + std::to_string(node.Mark().line + 1);
        throw Error(ErrorCode::ConfigError, where + ": field '" + field + "': " + msg);
    }

    void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) const {
        if (!node.IsMap()) fail(node, path, "expected a mapping");
        for (const auto& kv : node) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, path.empty() ? key : path + "." + key, "unknown field");
        }
    }

    template <class T>
    void get(const YAML::Node& parent, const std::string& path, const char* key, T& out) const {
        const YAML::Node n = parent[key];
        if (!n.IsDefined() || n.IsNull()) return;
        const std::string field = path + "." + key;
        read(n, field, out);
    }

private:
    template <class T>
    void read(const YAML::Node& n, const std::string& field, T& out) const {
        if (!n.IsScalar()) fail(n, field, "expected a scalar");
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, field, "cannot parse '" + n.Scalar() + "'");
        }
        if constexpr (std::is_floating_point_v<T>) {
            if (!std::isfinite(out)) fail(n, field, "must be finite");
        }
    }

    template <class T>
    void read(const YAML::Node& n, const std::string& field, std::vector<T>& out) const {
        if (!n.IsSequence()) fail(n, field, "expected a list");
        out.clear();
        for (std::size_t i = 0; i < n.size(); ++i) {
            T v{};
            read(n[i], field + "[" + std::to_string(i) + "]", v);
            out.push_back(std::move(v));
        }
    }

    std::string source_;
};

void parse_geometry(const Reader& r, const YAML::Node& n, GeometryConfig& g) {
    r.check_keys(n, "geometry",
                 {"shape", "a", "b", "lower", "upper", "excluded_faces", "center", "radius", "dim", "axis", "offset",
                  "nonsmooth_tolerance"});
    r.get(n, "geometry", "shape", g.shape);
    r.get(n, "geometry", "a", g.a);
    r.get(n, "geometry", "b", g.b);
    r.get(n, "geometry", "lower", g.lower);
    r.get(n, "geometry", "upper", g.upper);
    r.get(n, "geometry", "excluded_faces", g.excluded_faces);
    r.get(n, "geometry", "center", g.center);
    r.get(n, "geometry", "radius", g.radius);
    r.get(n, "geometry", "dim", g.dim);
    r.get(n, "geometry", "axis", g.axis);
    r.get(n, "geometry", "offset", g.offset);
    r.get(n, "geometry", "nonsmooth_tolerance", g.nonsmooth_tolerance);
}

void parse_density(const Reader& r, const YAML::Node& n, DensityConfig& d) {
    const std::string p = "model.density";
    r.check_keys(n, p, {"kind", "center", "precision", "weights"});
    r.get(n, p, "kind", d.kind);
    r.get(n, p, "center", d.center);
    r.get(n, p, "precision", d.precision);
    r.get(n, p, "weights", d.weights);
}

void parse_potential(const Reader& r, const YAML::Node& n, PotentialConfig& v) {
    const std::string p = "model.potential";
    r.check_keys(n, p, {"kind", "epsilon", "sigma", "cutoff", "shift", "k", "height", "width"});
    r.get(n, p, "kind", v.kind);
    r.get(n, p, "epsilon", v.epsilon);
    r.get(n, p, "sigma", v.sigma);
    r.get(n, p, "cutoff", v.cutoff);
    r.get(n, p, "shift", v.shift);
    r.get(n, p, "k", v.k);
    r.get(n, p, "height", v.height);
    r.get(n, p, "width", v.width);
}

void parse_hydro(const Reader& r, const YAML::Node& n, HydroConfig& h) {
    const std::string p = "model.hydro";
    r.check_keys(n, p, {"kind", "strength", "screening_length", "matrix"});
    r.get(n, p, "kind", h.kind);
    r.get(n, p, "strength", h.strength);
    r.get(n, p, "screening_length", h.screening_length);
    r.get(n, p, "matrix", h.matrix);
}

void parse_model(const Reader& r, const YAML::Node& n, ModelConfig& m) {
    const std::string p = "model";
    r.check_keys(n, p,
                 {"preset", "matrix", "base", "curvature", "density", "potential", "beta", "anchor", "n_particles",
                  "hydro", "min_separation", "guard_radius"});
    r.get(n, p, "preset", m.preset);
    r.get(n, p, "matrix", m.matrix);
    r.get(n, p, "base", m.base);
    r.get(n, p, "curvature", m.curvature);
    if (n["density"]) parse_density(r, n["density"], m.density);
    if (n["potential"]) parse_potential(r, n["potential"], m.potential);
    r.get(n, p, "beta", m.beta);
    r.get(n, p, "anchor", m.anchor);
    r.get(n, p, "n_particles", m.n_particles);
    if (n["hydro"]) parse_hydro(r, n["hydro"], m.hydro);
    r.get(n, p, "min_separation", m.min_separation);
    r.get(n, p, "guard_radius", m.guard_radius);
}

void parse_integrator(const Reader& r, const YAML::Node& n, IntegratorConfig& c) {
    const std::string p = "integrator";
    r.check_keys(n, p, {"step_size", "horizon", "taming", "density_floor", "max_level", "drift_cap", "x0"});
    r.get(n, p, "step_size", c.step_size);
    r.get(n, p, "horizon", c.horizon);
    r.get(n, p, "taming", c.taming);
    r.get(n, p, "density_floor", c.density_floor);
    r.get(n, p, "max_level", c.max_level);
    r.get(n, p, "drift_cap", c.drift_cap);
    r.get(n, p, "x0", c.x0);
}

void parse_experiment(const Reader& r, const YAML::Node& n, ExperimentConfig& e) {
    const std::string p = "experiment";
    r.check_keys(n, p,
                 {"kind", "n_paths", "suite", "checkpoints", "bins", "burn_in", "tolerance", "alphas", "starts", "wall",
                  "steps"});
    r.get(n, p, "kind", e.kind);
    r.get(n, p, "n_paths", e.n_paths);
    r.get(n, p, "suite", e.suite);
    r.get(n, p, "checkpoints", e.checkpoints);
    r.get(n, p, "bins", e.bins);
    r.get(n, p, "burn_in", e.burn_in);
    r.get(n, p, "tolerance", e.tolerance);
    r.get(n, p, "alphas", e.alphas);
    r.get(n, p, "starts", e.starts);
    r.get(n, p, "wall", e.wall);
    r.get(n, p, "steps", e.steps);
}

void parse_output(const Reader& r, const YAML::Node& n, OutputConfig& o) {
    r.check_keys(n, "output", {"directory", "formats"});
    r.get(n, "output", "directory", o.directory);
    r.get(n, "output", "formats", o.formats);
}

// Emitter helpers: numbers go through format_number so the echo round-trips.
void put(YAML::Emitter& e, const char* key, double v) { e << YAML::Key << key << YAML::Value << format_number(v); }
void put(YAML::Emitter& e, const char* key, const std::string& v) {
    e << YAML::Key << key << YAML::Value << YAML::DoubleQuoted << v;
}
void put(YAML::Emitter& e, const char* key, bool v) { e << YAML::Key << key << YAML::Value << (v ? "true" : "false"); }
template <class I>
    requires std::is_integral_v<I>
void put_int(YAML::Emitter& e, const char* key, I v) {
    e << YAML::Key << key << YAML::Value << std::to_string(v);
}
void put(YAML::Emitter& e, const char* key, const std::vector<double>& v) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << format_number(x);
    e << YAML::EndSeq;
}
void put(YAML::Emitter& e, const char* key, const std::vector<int>& v) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (int x : v) e << std::to_string(x);
    e << YAML::EndSeq;
}
void put(YAML::Emitter& e, const char* key, const std::vector<std::string>& v) {
    e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& x : v) e << YAML::DoubleQuoted << x;
    e << YAML::EndSeq;
}
void put(YAML::Emitter& e, const char* key, const std::vector<std::vector<double>>& m) {
    e << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (const auto& row : m) {
        e << YAML::Flow << YAML::BeginSeq;
        for (double x : row) e << format_number(x);
        e << YAML::EndSeq;
    }
    e << YAML::EndSeq;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    const Reader r(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ConfigError,
                    source + ":" + std::to_string(e.mark.line + 1) + ": malformed YAML: " + e.msg);
    }
    RunConfig c;
    if (!root.IsDefined() || root.IsNull()) return c;
    r.check_keys(root, "", {"seed", "geometry", "model", "integrator", "experiment", "output"});
    r.get(root, "", "seed", c.seed);
    if (root["geometry"]) parse_geometry(r, root["geometry"], c.geometry);
    if (root["model"]) parse_model(r, root["model"], c.model);
    if (root["integrator"]) parse_integrator(r, root["integrator"], c.integrator);
    if (root["experiment"]) parse_experiment(r, root["experiment"], c.experiment);
    if (root["output"]) parse_output(r, root["output"], c.output);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string echo_config(const RunConfig& c) {
    YAML::Emitter e;
    e << YAML::BeginMap;
    put_int(e, "seed", c.seed);

    e << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
    const auto& g = c.geometry;
    put(e, "shape", g.shape);
    put(e, "a", g.a);
    put(e, "b", g.b);
    put(e, "lower", g.lower);
    put(e, "upper", g.upper);
    put(e, "excluded_faces", g.excluded_faces);
    put(e, "center", g.center);
    put(e, "radius", g.radius);
    put_int(e, "dim", g.dim);
    put_int(e, "axis", g.axis);
    put(e, "offset", g.offset);
    put(e, "nonsmooth_tolerance", g.nonsmooth_tolerance);
    e << YAML::EndMap;

    e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    const auto& m = c.model;
    put(e, "preset", m.preset);
    put(e, "matrix", m.matrix);
    put(e, "base", m.base);
    put(e, "curvature", m.curvature);
    e << YAML::Key << "density" << YAML::Value << YAML::BeginMap;
    put(e, "kind", m.density.kind);
    put(e, "center", m.density.center);
    put(e, "precision", m.density.precision);
    put(e, "weights", m.density.weights);
    e << YAML::EndMap;
    e << YAML::Key << "potential" << YAML::Value << YAML::BeginMap;
    put(e, "kind", m.potential.kind);
    put(e, "epsilon", m.potential.epsilon);
    put(e, "sigma", m.potential.sigma);
    put(e, "cutoff", m.potential.cutoff);
    put(e, "shift", m.potential.shift);
    put(e, "k", m.potential.k);
    put(e, "height", m.potential.height);
    put(e, "width", m.potential.width);
    e << YAML::EndMap;
    put(e, "beta", m.beta);
    put(e, "anchor", m.anchor);
    put_int(e, "n_particles", m.n_particles);
    e << YAML::Key << "hydro" << YAML::Value << YAML::BeginMap;
    put(e, "kind", m.hydro.kind);
    put(e, "strength", m.hydro.strength);
    put(e, "screening_length", m.hydro.screening_length);
    put(e, "matrix", m.hydro.matrix);
    e << YAML::EndMap;
    put(e, "min_separation", m.min_separation);
    put(e, "guard_radius", m.guard_radius);
    e << YAML::EndMap;

    e << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
    const auto& i = c.integrator;
    put(e, "step_size", i.step_size);
    put(e, "horizon", i.horizon);
    put(e, "taming", i.taming);
    put(e, "density_floor", i.density_floor);
    put_int(e, "max_level", i.max_level);
    put(e, "drift_cap", i.drift_cap);
    put(e, "x0", i.x0);
    e << YAML::EndMap;

    e << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
    const auto& x = c.experiment;
    put(e, "kind", x.kind);
    put_int(e, "n_paths", x.n_paths);
    put(e, "suite", x.suite);
    put(e, "checkpoints", x.checkpoints);
    put_int(e, "bins", x.bins);
    put(e, "burn_in", x.burn_in);
    put(e, "tolerance", x.tolerance);
    put(e, "alphas", x.alphas);
    put(e, "starts", x.starts);
    put(e, "wall", x.wall);
    put_int(e, "steps", x.steps);
    e << YAML::EndMap;

    e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
    put(e, "directory", c.output.directory);
    put(e, "formats", c.output.formats);
    e << YAML::EndMap;

    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, "field '" + field + "': " + msg);
}

void require_preset(const PresetRegistry& reg, PresetCategory cat, const std::string& name, const std::string& field) {
    if (!reg.contains(cat, name)) invalid(field, "unknown preset '" + name + "'");
}

}  // namespace

void validate_config(const RunConfig& c, const PresetRegistry& reg) {
    const auto& g = c.geometry;
    require_preset(reg, PresetCategory::geometry, g.shape, "geometry.shape");
    if (g.shape == "interval" && !(g.a < g.b)) invalid("geometry.a", "interval needs a < b");
    if (g.shape == "box") {
        if (g.lower.empty() || g.lower.size() != g.upper.size()) {
            invalid("geometry.lower", "box needs lower and upper of equal nonzero length");
        }
        for (std::size_t k = 0; k < g.lower.size(); ++k) {
            if (!(g.lower[k] < g.upper[k])) invalid("geometry.upper", "box needs lower < upper");
        }
        for (int f : g.excluded_faces) {
            if (f < 0 || f >= 2 * static_cast<int>(g.lower.size())) invalid("geometry.excluded_faces", "bad face");
        }
    }
    if (g.shape == "ball" && (g.center.empty() || !(g.radius > 0.0))) {
        invalid("geometry.radius", "ball needs a center and radius > 0");
    }
    if (g.shape == "half_space" && (g.dim < 1 || g.axis < 0 || g.axis >= g.dim)) {
        invalid("geometry.axis", "half_space needs 0 <= axis < dim");
    }
    if (!(g.nonsmooth_tolerance > 0.0)) invalid("geometry.nonsmooth_tolerance", "must be > 0");

    const auto& m = c.model;
    require_preset(reg, PresetCategory::model, m.preset, "model.preset");
    require_preset(reg, PresetCategory::density, m.density.kind, "model.density.kind");
    require_preset(reg, PresetCategory::potential, m.potential.kind, "model.potential.kind");
    require_preset(reg, PresetCategory::hydro, m.hydro.kind, "model.hydro.kind");
    if (!(m.beta > 0.0)) invalid("model.beta", "must be > 0");
    if (m.preset == "particle_system" && m.n_particles < 1) invalid("model.n_particles", "must be >= 1");
    if (!(m.min_separation >= 0.0)) invalid("model.min_separation", "must be >= 0");

    const auto& i = c.integrator;
    if (!(i.step_size > 0.0)) invalid("integrator.step_size", "must be > 0");
    if (!(i.horizon >= i.step_size)) invalid("integrator.horizon", "must be >= step_size");
    if (i.taming != "standard" && i.taming != "none") invalid("integrator.taming", "expected standard or none");
    if (!(i.density_floor > 0.0)) invalid("integrator.density_floor", "must be > 0");
    if (i.max_level < 1) invalid("integrator.max_level", "must be >= 1");
    if (!(i.drift_cap >= 0.0)) invalid("integrator.drift_cap", "must be >= 0");

    const auto& x = c.experiment;
    if (x.kind != "simulate" && x.kind != "ensemble" && x.kind != "suite") {
        invalid("experiment.kind", "expected simulate, ensemble or suite");
    }
    if (x.kind == "suite") require_preset(reg, PresetCategory::suite, x.suite, "experiment.suite");
    if (x.n_paths < 1) invalid("experiment.n_paths", "must be >= 1");
    if (x.bins < 1) invalid("experiment.bins", "must be >= 1");
    if (!(x.burn_in >= 0.0 && x.burn_in < 1.0)) invalid("experiment.burn_in", "must lie in [0, 1)");
    if (!(x.tolerance > 0.0)) invalid("experiment.tolerance", "must be > 0");
    for (double a : x.alphas) {
        if (!(a > 0.0)) invalid("experiment.alphas", "must be > 0");
    }
    for (double t : x.checkpoints) {
        if (!(t >= 0.0 && t <= i.horizon)) invalid("experiment.checkpoints", "must lie in [0, horizon]");
    }
    if (x.wall != "lower" && x.wall != "upper" && x.wall != "both") {
        invalid("experiment.wall", "expected lower, upper or both");
    }
    for (const auto& f : c.output.formats) {
        if (f != "csv" && f != "json" && f != "text") invalid("output.formats", "unknown format '" + f + "'");
    }
}

}  // namespace rsde
