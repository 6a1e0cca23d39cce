#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rsde {

struct GeometryConfig {
    std::string shape = "interval";
    double a = 0.0;  ///< interval
    double b = 1.0;
    std::vector<double> lower;  ///< box
    std::vector<double> upper;
    std::vector<int> excluded_faces;
    std::vector<double> center;  ///< ball
    double radius = 1.0;
    int dim = 1;  ///< half_space: {x_axis >= offset}
    int axis = 0;
    double offset = 0.0;
    double nonsmooth_tolerance = 1e-6;

    bool operator==(const GeometryConfig&) const = default;
};

struct DensityConfig {
    std::string kind = "uniform";
    std::vector<double> center;  ///< gaussian exp(-precision |x - center|^2)
    double precision = 1.0;
    std::vector<double> weights;  ///< exponential exp(weights . x)

    bool operator==(const DensityConfig&) const = default;
};

struct PotentialConfig {
    std::string kind = "zero";
    double epsilon = 1.0;  ///< lennard_jones
    double sigma = 1.0;
    double cutoff = 0.0;  ///< 0 = no cutoff
    bool shift = false;
    double k = 1.0;  ///< harmonic
    double height = 1.0;  ///< soft_gaussian
    double width = 1.0;

    bool operator==(const PotentialConfig&) const = default;
};

struct HydroConfig {
    std::string kind = "identity";
    double strength = 0.0;
    double screening_length = 1.0;
    std::vector<std::vector<double>> matrix;  ///< constant_block template

    bool operator==(const HydroConfig&) const = default;
};

struct ModelConfig {
    std::string preset = "identity";
    std::vector<std::vector<double>> matrix;  ///< constant_matrix
    std::vector<double> base;  ///< diagonal_poly
    std::vector<double> curvature;
    DensityConfig density;
    PotentialConfig potential;  ///< lj_pair_density, particle_system
    double beta = 1.0;
    std::vector<double> anchor;  ///< lj_pair_density
    int n_particles = 2;  ///< particle_system
    HydroConfig hydro;
    double min_separation = 1e-9;
    double guard_radius = -1.0;  ///< < 0: 0.5 sigma for Lennard-Jones, 0 otherwise

    bool operator==(const ModelConfig&) const = default;
};

struct IntegratorConfig {
    double step_size = 1e-3;
    double horizon = 1.0;
    std::string taming = "standard";
    double density_floor = 1e-12;
    long max_level = 1'000'000'000L;
    double drift_cap = 0.0;  ///< 0 = none
    std::vector<double> x0;

    bool operator==(const IntegratorConfig&) const = default;
};

struct ExperimentConfig {
    std::string kind = "simulate";  ///< simulate | ensemble | suite
    std::size_t n_paths = 1;
    std::string suite;
    std::vector<double> checkpoints;  ///< empty = {horizon}
    int bins = 50;
    double burn_in = 0.1;
    double tolerance = 0.05;
    std::vector<double> alphas{1.0};
    std::vector<double> starts;  ///< revuz start points; empty = x0
    std::string wall = "lower";
    std::size_t steps = 0;  ///< stationarity path length; 0 = horizon / h

    bool operator==(const ExperimentConfig&) const = default;
};

struct OutputConfig {
    std::string directory;
    std::vector<std::string> formats{"csv", "json", "text"};

    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    std::uint64_t seed = 0;
    GeometryConfig geometry;
    ModelConfig model;
    IntegratorConfig integrator;
    ExperimentConfig experiment;
    OutputConfig output;

    bool operator==(const RunConfig&) const = default;
};

/// Parses YAML text. Throws Error(ConfigError) naming the field and line.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// YAML text that parse_config maps back to an equal RunConfig.
std::string echo_config(const RunConfig& config);

class PresetRegistry;

/// Checks preset names against the registry and numeric ranges. Throws
/// Error(ConfigError).
void validate_config(const RunConfig& config, const PresetRegistry& registry);

}  // namespace rsde
