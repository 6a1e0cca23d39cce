#include "rsde/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "rsde/error.hpp"
#include "rsde/functionals.hpp"
#include "rsde/particles.hpp"
#include "rsde/presets.hpp"
#include "rsde/rng.hpp"

namespace rsde {

std::filesystem::path resolve_output_directory(const RunConfig& config, const RunOptions& options) {
    if (options.out) return *options.out;
    if (!config.output.directory.empty()) return config.output.directory;
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
    return "rsde_output";
}

namespace {

struct Context {
    const RunConfig& config;
    const RunOptions& options;
    const DomainGeometry& geometry;
    const CoefficientField& field;
    const IntegratorSpec& spec;
    Vector x0;
};

bool wants(const RunConfig& c, const char* format) {
    return std::find(c.output.formats.begin(), c.output.formats.end(), format) != c.output.formats.end();
}

// Curved test functions pick up an O(sqrt h) bias from the single pushback
// (about -1/2 delta^2 c^T H c per reflection), so on a ball the set is built
// from factors whose Hessian vanishes on the sphere. Even the flat bump keeps a
// smaller bias from its higher derivatives; multiplying it by a coordinate
// centred on the ball cancels most of it between opposite sides of the wall.
// Linear functions carry no such bias on any domain.
std::vector<TestFunction> skorokhod_functions(const Context& ctx) {
    using namespace test_functions;
    const int d = ctx.geometry.dim();
    std::vector<TestFunction> fs;
    for (int i = 0; i < d; ++i) fs.push_back(coordinate(d, i));
    if (ctx.geometry.factor_count() == 1) {
        if (const auto* ball = std::get_if<Ball>(&ctx.geometry.factor(0))) {
            const TestFunction flat = ball_flat_bump(ball->center, ball->radius);
            for (int i = 0; i < d; ++i) {
                fs.push_back(product(flat, sum(coordinate(d, i), constant(d, -ball->center[i]))));
                fs.back().name = "ball_flat_bump*centred_x" + std::to_string(i + 1);
            }
            fs.push_back(sum(linear(Vector::Ones(d)), fs[d]));
        }
    }
    return fs;
}

Ensemble run_ensemble(const Context& ctx) {
    EnsembleOptions eo;
    eo.threads = ctx.options.threads;
    return simulate_ensemble(ctx.field, ctx.geometry, ctx.spec, ctx.x0, ctx.config.experiment.n_paths,
                             ctx.config.seed, eo);
}

StatTestReport residual_report(std::string name, double worst, const Ensemble& ensemble) {
    StatTestReport r;
    r.name = std::move(name);
    r.estimate = worst;
    r.reference = 0.0;
    r.rule = {RuleKind::upper_bound, 0.0, 0.0, 1e-12};
    r.budget = {ensemble.size(), ensemble.front().step_size,
                ensemble.front().time(ensemble.front().size() - 1), ensemble.front().seed};
    finalize(r);
    return r;
}

std::vector<StatTestReport> suite_skorokhod(const Context& ctx) {
    const Ensemble ensemble = run_ensemble(ctx);
    const auto fs = skorokhod_functions(ctx);
    std::vector<double> checkpoints = ctx.config.experiment.checkpoints;
    if (checkpoints.empty()) checkpoints.push_back(ensemble.front().time(ensemble.front().size() - 1));
    const double t_last = checkpoints.back();
    MartingaleOptions mo;
    mo.threads = ctx.options.threads;
    std::vector<StatTestReport> out;

    double worst = 0.0;
    for (const auto& p : ensemble) {
        for (const auto& u : fs) worst = std::max(worst, decompose(p, ctx.field, ctx.geometry, u).identity_residual());
        for (const auto& rec : coordinate_decomposition(p, ctx.field, ctx.geometry, ctx.spec)) {
            worst = std::max(worst, rec.identity_residual());
        }
    }
    out.push_back(residual_report("skorokhod_identity", worst, ensemble));

    for (const auto& u : fs) {
        auto ms = martingale_test(ensemble, ctx.field, ctx.geometry, u, checkpoints, mo);
        out.insert(out.end(), ms.begin(), ms.end());
    }
    for (const auto& u : fs) out.push_back(qv_test(ensemble, ctx.field, ctx.geometry, u, t_last, mo));
    const int d = ctx.geometry.dim();
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            out.push_back(covariation_test(ensemble, ctx.field, ctx.geometry, ctx.spec, i, j, t_last, mo));
        }
    }
    out.push_back(local_time_support_test(ensemble, ctx.field, ctx.geometry));
    return out;
}

Wall parse_wall(const std::string& w) {
    if (w == "upper") return Wall::upper;
    if (w == "both") return Wall::both;
    return Wall::lower;
}

std::vector<StatTestReport> suite_revuz(const Context& ctx) {
    const auto& x = ctx.config.experiment;
    std::vector<double> starts = x.starts;
    if (starts.empty()) starts.push_back(ctx.x0[0]);
    std::vector<StatTestReport> out;
    for (double alpha : x.alphas) {
        const PotentialTable oracle = potential_oracle_1d(alpha, ctx.geometry, ctx.field, parse_wall(x.wall));
        for (double s : starts) {
            RevuzOptions ro;
            ro.n_paths = x.n_paths;
            ro.step_size = ctx.spec.step_size;
            ro.seed = ctx.config.seed;
            ro.threads = ctx.options.threads;
            out.push_back(revuz_check(ctx.field, ctx.geometry, s, alpha, &oracle, ro));
        }
    }
    return out;
}

std::vector<StatTestReport> suite_stationarity(const Context& ctx) {
    const auto& x = ctx.config.experiment;
    const std::size_t steps = x.steps > 0 ? x.steps : ctx.spec.steps();
    const auto burn = static_cast<std::size_t>(std::ceil(x.burn_in * static_cast<double>(steps)));
    OccupationHistogram hist(ctx.geometry, x.bins);
    IntegratorSpec spec = ctx.spec;
    spec.horizon = static_cast<double>(steps) * spec.step_size;
    PathWalker walker(ctx.field, ctx.geometry, spec, ctx.x0, ctx.config.seed);
    for (std::size_t k = 1; k <= steps && walker.alive(); ++k) {
        walker.advance();
        if (k > burn && walker.alive()) hist.add(walker.state());
    }
    StationarityOptions so;
    so.tolerance = x.tolerance;
    const Budget budget{1, spec.step_size, spec.horizon, ctx.config.seed};
    StatTestReport r = stationarity_test(hist, ctx.geometry, ctx.field.density_field(), budget, so);
    r.parameters.push_back({"burn_in", x.burn_in});
    return {r};
}

std::vector<StatTestReport> suite_brownian(const Context& ctx) {
    return brownian_reconstruction_test(run_ensemble(ctx), ctx.field, ctx.geometry, ctx.spec);
}

std::vector<ParticlePath> run_particle_ensemble(const Context& ctx, const ParticleSystemSpec& ps) {
    std::vector<ParticlePath> paths(ctx.config.experiment.n_paths);
    parallel_for(paths.size(), ctx.options.threads, [&](std::size_t i) {
        paths[i] = simulate_particles(ps, ctx.spec, ctx.x0, derive_seed(ctx.config.seed, i));
    });
    return paths;
}

std::vector<StatTestReport> suite_particles(const Context& ctx) {
    if (ctx.config.model.preset != "particle_system") {
        throw Error(ErrorCode::ConfigError, "field 'experiment.suite': particles suite needs model.preset particle_system");
    }
    const ParticleSystemSpec ps = build_particle_spec(ctx.config);
    const auto paths = run_particle_ensemble(ctx, ps);
    const DomainGeometry single(ps.domain0, ps.nonsmooth_tolerance);
    const int d = ps.particle_dim;
    const double radius = 3.0 * std::sqrt(ctx.spec.step_size);
    double balance = 0.0, stray = 0.0, min_dist = std::numeric_limits<double>::infinity();
    std::size_t killed = 0;
    for (const auto& p : paths) {
        balance = std::max(balance, p.ledgers.max_balance_residual);
        if (p.path.killed()) ++killed;
        const std::size_t last = p.path.last_alive();
        for (std::size_t k = 0; k <= last; ++k) {
            const auto x = p.path.state(k);
            if (ps.n_particles > 1) min_dist = std::min(min_dist, min_pair_distance(ps, x));
            if (k == 0) continue;
            for (int q = 0; q < ps.n_particles; ++q) {
                const double inc = p.ledgers.ell_hat[q][k] - p.ledgers.ell_hat[q][k - 1];
                if (inc != 0.0 && std::abs(single.signed_distance(x.segment(q * d, d))) > radius) stray += inc;
            }
        }
    }
    const Budget budget{paths.size(), ctx.spec.step_size, ctx.spec.horizon, ctx.config.seed};
    std::vector<StatTestReport> out;
    auto push = [&](std::string name, double est, PassRule rule) {
        StatTestReport r;
        r.name = std::move(name);
        r.parameters = {{"n_particles", static_cast<double>(ps.n_particles)}, {"beta", ps.beta}};
        r.estimate = est;
        r.rule = rule;
        r.budget = budget;
        finalize(r);
        out.push_back(std::move(r));
    };
    push("particle_localtime_balance", balance, {RuleKind::upper_bound, 0.0, 0.0, 1e-12});
    push("particle_localtime_support", stray, {RuleKind::exact_zero, 0.0, 0.0, 0.0});
    if (ps.n_particles > 1) {
        const auto* lj = dynamic_cast<const LennardJones*>(ps.potential.get());
        const double floor = lj ? 0.8 * lj->sigma() : std::max(ps.min_separation, ps.guard_radius);
        push("particle_min_distance", min_dist, {RuleKind::lower_bound, 0.0, 0.0, floor});
    }
    push("particle_killed_fraction", static_cast<double>(killed) / static_cast<double>(paths.size()),
         {RuleKind::upper_bound, 0.0, 0.0, 1.0});
    return out;
}

std::vector<StatTestReport> run_suite(const Context& ctx) {
    const std::string& s = ctx.config.experiment.suite;
    if (s == "skorokhod") return suite_skorokhod(ctx);
    if (s == "revuz") return suite_revuz(ctx);
    if (s == "stationarity") return suite_stationarity(ctx);
    if (s == "brownian") return suite_brownian(ctx);
    if (s == "particles") return suite_particles(ctx);
    throw Error(ErrorCode::ConfigError, "field 'experiment.suite': unknown preset '" + s + "'");
}

std::ofstream open_artifact(RunResult& result, const std::string& name) {
    const auto path = result.directory / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    result.artifacts.push_back(path);
    return os;
}

}  // namespace

RunResult run(RunConfig config, const RunOptions& options) {
    if (options.seed) config.seed = *options.seed;
    validate_config(config, default_registry());
    const DomainGeometry geometry = build_geometry(config);
    const CoefficientField field = build_field(config);
    const IntegratorSpec spec = build_integrator_spec(config);
    const Context ctx{config, options, geometry, field, spec, start_point(config, geometry)};

    RunResult result;
    result.directory = resolve_output_directory(config, options);
    std::filesystem::create_directories(result.directory);
    open_artifact(result, "config.echo.yaml") << echo_config(config);

    const bool particles = config.model.preset == "particle_system";
    const auto& kind = config.experiment.kind;
    if (kind == "simulate" || kind == "ensemble") {
        const std::size_t n = kind == "simulate" ? 1 : config.experiment.n_paths;
        if (particles) {
            const ParticleSystemSpec ps = build_particle_spec(config);
            RunConfig one = config;
            one.experiment.n_paths = n;
            const Context pctx{one, options, geometry, field, spec, ctx.x0};
            const auto paths = run_particle_ensemble(pctx, ps);
            if (wants(config, "csv")) {
                for (std::size_t i = 0; i < paths.size(); ++i) {
                    const std::string name =
                        n == 1 ? std::string("particles.csv") : "particles_" + std::to_string(i) + ".csv";
                    auto os = open_artifact(result, name);
                    write_particle_csv(os, paths[i], ps);
                }
            }
        } else {
            EnsembleOptions eo;
            eo.threads = options.threads;
            const Ensemble paths = simulate_ensemble(field, geometry, spec, ctx.x0, n, config.seed, eo);
            if (wants(config, "csv")) {
                if (n == 1) {
                    auto os = open_artifact(result, "trajectory.csv");
                    write_path_csv(os, paths.front());
                } else {
                    auto os = open_artifact(result, "ensemble.csv");
                    for (std::size_t i = 0; i < n; ++i) write_path_csv(os, paths[i], static_cast<long>(i), i == 0);
                }
            }
        }
    } else {
        result.reports = run_suite(ctx);
        if (wants(config, "json")) {
            auto os = open_artifact(result, "report.json");
            write_reports_json(os, result.reports);
        }
        if (wants(config, "text")) {
            auto os = open_artifact(result, "report.txt");
            write_reports_text(os, result.reports);
        }
    }
    const bool ok = std::all_of(result.reports.begin(), result.reports.end(),
                                [](const StatTestReport& r) { return r.pass; });
    result.exit_code = ok ? 0 : 1;
    return result;
}

}  // namespace rsde
