#include <algorithm>
#include <string>

#include "doctest.h"

#include "rsde/config.hpp"
#include "rsde/error.hpp"
#include "rsde/presets.hpp"

using namespace rsde;

namespace {

const char* kBallSuite = R"(seed: 42
geometry:
  shape: ball
  center: [0, 0]
  radius: 1
model:
  preset: constant_matrix
  matrix: [[2, 1], [1, 2]]
  density:
    kind: gaussian
    center: [0, 0]
    precision: 1
integrator:
  step_size: 0.001
  horizon: 1
  x0: [0.3, 0]
experiment:
  kind: suite
  suite: skorokhod
  n_paths: 100
  checkpoints: [0.5, 1]
output:
  formats: [json, text]
)";

ErrorCode code_of(const std::string& text) {
    try {
        validate_config(parse_config(text), default_registry());
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("parse reads nested blocks") {
    const RunConfig c = parse_config(kBallSuite);
    CHECK(c.seed == 42);
    CHECK(c.geometry.shape == "ball");
    CHECK(c.geometry.center == std::vector<double>{0.0, 0.0});
    CHECK(c.model.matrix[0] == std::vector<double>{2.0, 1.0});
    CHECK(c.model.density.kind == "gaussian");
    CHECK(c.integrator.x0 == std::vector<double>{0.3, 0.0});
    CHECK(c.experiment.checkpoints == std::vector<double>{0.5, 1.0});
    CHECK(c.output.formats == std::vector<std::string>{"json", "text"});
    CHECK_NOTHROW(validate_config(c, default_registry()));
}

TEST_CASE("echo round-trips to an equal config") {
    RunConfig c = parse_config(kBallSuite);
    CHECK(parse_config(echo_config(c)) == c);
    c.integrator.step_size = 0.1 + 0.2;  // not exactly representable in short decimal
    c.model.potential.kind = "lennard_jones";
    c.model.potential.cutoff = 2.5;
    c.model.hydro.matrix = {{1.0, 0.25}, {0.25, 1.0}};
    c.geometry.excluded_faces = {1, 3};
    c.output.directory = "out dir: with colon";
    CHECK(parse_config(echo_config(c)) == c);
    const RunConfig d;
    CHECK(parse_config(echo_config(d)) == d);
}

TEST_CASE("config errors name the field") {
    CHECK(code_of("geometry:\n  shape: torus\n") == ErrorCode::ConfigError);
    CHECK(code_of("model:\n  preset: nope\n") == ErrorCode::ConfigError);
    CHECK(code_of("integrator:\n  step_size: -1\n") == ErrorCode::ConfigError);
    CHECK(code_of("experiment:\n  kind: suite\n  suite: unknown\n") == ErrorCode::ConfigError);
    try {
        parse_config("seed: 1\ngeometry:\n  shape: ball\n  radios: 2\n", "x.yaml");
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConfigError);
        const std::string what = e.what();
        CHECK(what.find("radios") != std::string::npos);
        CHECK(what.find("x.yaml:4") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("integrator:\n  step_size: fast\n"), Error);
}

TEST_CASE("preset registry listing") {
    const PresetRegistry r = default_registry();
    const std::string listing = list_presets(r);
    CHECK(listing.find("lj_pair_density") != std::string::npos);
    CHECK(listing.find("regularized_coupling") != std::string::npos);
    CHECK(listing.find("suite skorokhod") != std::string::npos);

    PresetRegistry empty;
    CHECK(list_presets(empty).empty());

    PresetRegistry grown = default_registry();
    const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    const auto before = lines(list_presets(grown));
    grown.add(PresetCategory::potential, "yukawa", "strength, length");
    CHECK(lines(list_presets(grown)) == before + 1);
    CHECK_THROWS_AS(grown.add(PresetCategory::potential, "yukawa", ""), Error);
}

TEST_CASE("builders turn configs into models") {
    const RunConfig c = parse_config(kBallSuite);
    const DomainGeometry g = build_geometry(c);
    CHECK(g.dim() == 2);
    const CoefficientField f = build_field(c);
    CHECK(f.matrix(Vector::Zero(2))(0, 1) == 1.0);
    CHECK(start_point(c, g)[0] == 0.3);

    RunConfig p;
    p.geometry.shape = "ball";
    p.geometry.center = {0.0, 0.0};
    p.model.preset = "particle_system";
    p.model.potential.kind = "lennard_jones";
    p.model.potential.sigma = 0.2;
    const ParticleSystemSpec s = build_particle_spec(p);
    CHECK(s.dim() == 4);
    CHECK(s.guard_radius == doctest::Approx(0.1));
    CHECK(build_geometry(p).factor_count() == 2);
    CHECK_THROWS_AS(start_point(p, build_geometry(p)), Error);
}
