#include "rsde/integrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "rsde/error.hpp"
#include "rsde/format.hpp"

namespace rsde {

std::size_t IntegratorSpec::steps() const {
    return static_cast<std::size_t>(std::llround(horizon / step_size));
}

void IntegratorSpec::validate() const {
    if (!(step_size > 0.0) || !(horizon >= step_size) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::InvalidArgument, "integrator needs 0 < h <= T < inf");
    }
    if (!(density_floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "density floor must be > 0");
    if (drift_cap && !(*drift_cap > 0.0)) throw Error(ErrorCode::InvalidArgument, "drift cap must be > 0");
    if (ladder.max_level < 1) throw Error(ErrorCode::InvalidArgument, "ladder max_level must be >= 1");
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::reflection: return "reflection";
        case EventKind::killed_density: return "killed_density";
        case EventKind::killed_exceptional: return "killed_exceptional";
        case EventKind::killed_ladder: return "killed_ladder";
        case EventKind::killed_inadmissible: return "killed_inadmissible";
    }
    return "unknown";
}

void tame_drift(const IntegratorSpec& spec, VectorRef drift) {
    if (spec.taming == Taming::standard) drift /= (1.0 + spec.step_size * drift.norm());
    if (spec.drift_cap) {
        const double n = drift.norm();
        if (n > *spec.drift_cap) drift *= *spec.drift_cap / n;
    }
}

std::size_t PathSample::last_alive() const {
    std::size_t k = 0;
    while (k + 1 < alive.size() && alive[k + 1]) ++k;
    return k;
}

Stepper::Stepper(const CoefficientField& field, const DomainGeometry& geometry, const IntegratorSpec& spec)
    : field_(field),
      geometry_(geometry),
      spec_(spec),
      coeffs_(field.dim()),
      sigma_(field.dim(), field.dim()),
      proposal_(field.dim()),
      tamed_(field.dim()),
      boundary_a_(field.dim(), field.dim()),
      constant_(field.is_constant()),
      sqrt_2h_(std::sqrt(2.0 * spec.step_size) * spec.noise_scale) {
    if (field.dim() != geometry.dim()) {
        throw Error(ErrorCode::InvalidArgument, "field and geometry dimensions differ");
    }
    if (constant_) {
        if (!field_.evaluate(Vector::Zero(field.dim()), coeffs_, spec_.density_floor)) {
            throw Error(ErrorCode::DensityVanishes, "constant density is below the floor");
        }
        sigma_ = cholesky_factor(coeffs_.a);
    }
}

double Stepper::advance(VectorRef state, VectorCRef noise) {
    reflected_ = false;
    if (!constant_) {
        if (!field_.evaluate(state, coeffs_, spec_.density_floor)) {
            throw Error(ErrorCode::DensityVanishes, "rho at the current state is below the floor");
        }
        Eigen::LLT<Matrix> llt(coeffs_.a);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::NotPositiveDefinite, "diffusion matrix is not positive definite");
        }
        sigma_ = llt.matrixL();
    }
    const double h = spec_.step_size;
    tamed_ = coeffs_.drift;
    tame_drift(spec_, tamed_);
    proposal_ = state;
    proposal_ += h * tamed_;
    proposal_.noalias() += sqrt_2h_ * (sigma_ * noise);

    if (geometry_.signed_distance(proposal_) >= 0.0) {
        state = proposal_;
        return 0.0;
    }

    const Projection p = geometry_.project_to_closure(proposal_);
    if (geometry_.classify(p.point) != BoundaryClass::smooth_boundary) {
        throw Error(ErrorCode::ExceptionalBoundaryHit, "projection lands on the exceptional boundary");
    }
    const Vector nu = geometry_.outward_normal(p.point);
    const double rho = field_.density(p.point);
    if (!(rho > spec_.density_floor)) {
        throw Error(ErrorCode::DensityVanishes, "rho at the reflection point is below the floor");
    }
    field_.matrix_field().evaluate(p.point, boundary_a_);
    const Vector c = rho * (boundary_a_ * nu);
    if (!(nu.dot(c) > 0.0)) {
        throw Error(ErrorCode::CoNormalDegenerate, "nu . rho A nu <= 0 at the reflection point");
    }
    const ParameterRange range = geometry_.line_parameters_inside(proposal_, c);
    if (range.empty() || range.hi < 0.0) {
        throw Error(ErrorCode::ExceptionalBoundaryHit, "co-normal pushback cannot re-enter the domain");
    }
    const double delta = std::max(range.lo, 0.0);
    state = proposal_ - delta * c;
    reflected_ = delta > 0.0;
    contact_ = p.point;
    return delta;
}

StepResult step(const CoefficientField& field, const DomainGeometry& geometry, const IntegratorSpec& spec,
                VectorCRef state, VectorCRef noise) {
    Stepper stepper(field, geometry, spec);
    StepResult r;
    r.next = state;
    r.local_time_increment = stepper.advance(r.next, noise);
    r.reflected = stepper.last_reflected();
    return r;
}

PathWalker::PathWalker(const CoefficientField& field, const DomainGeometry& geometry,
                       const IntegratorSpec& spec, VectorCRef x0, std::uint64_t seed)
    : stepper_(field, geometry, spec),
      noise_(seed),
      state_(x0),
      noise_buffer_(field.dim()),
      scratch_(field.dim()) {
    spec.validate();
    if (x0.size() != field.dim()) throw Error(ErrorCode::InvalidStart, "x0 has the wrong dimension");
    const BoundaryClass cls = geometry.classify(x0);
    if (cls == BoundaryClass::exterior || cls == BoundaryClass::exceptional) {
        throw Error(ErrorCode::InvalidStart, "x0 is not in the interior or on the smooth boundary");
    }
    const double rho = field.density(x0);
    if (!(rho > spec.density_floor)) throw Error(ErrorCode::InvalidStart, "rho(x0) is at or below the floor");
    if (spec.ladder.level(geometry, x0, rho) > spec.ladder.max_level) {
        throw Error(ErrorCode::InvalidStart, "x0 lies beyond the localization cap");
    }
    if (spec.admissible && !spec.admissible(x0)) {
        throw Error(ErrorCode::InvalidStart, "x0 is not admissible");
    }
}

void PathWalker::kill(EventKind reason) {
    alive_ = false;
    kill_reason_ = reason;
    last_increment_ = 0.0;
}

void PathWalker::advance() {
    noise_.fill(noise_buffer_);
    advance(noise_buffer_);
}

void PathWalker::advance(VectorCRef noise) {
    ++k_;
    last_increment_ = 0.0;
    if (!alive_) return;
    scratch_ = state_;
    double dl = 0.0;
    try {
        dl = stepper_.advance(scratch_, noise);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DensityVanishes) {
            kill(EventKind::killed_density);
            return;
        }
        if (e.code() == ErrorCode::ExceptionalBoundaryHit) {
            kill(EventKind::killed_exceptional);
            return;
        }
        throw;
    }
    const auto& spec = stepper_.spec();
    const double rho = stepper_.field().density(scratch_);
    if (!(rho > spec.density_floor)) {
        kill(EventKind::killed_density);
        return;
    }
    if (spec.ladder.level(stepper_.geometry(), scratch_, rho) > spec.ladder.max_level) {
        kill(EventKind::killed_ladder);
        return;
    }
    if (spec.admissible && !spec.admissible(scratch_)) {
        kill(EventKind::killed_inadmissible);
        return;
    }
    state_.swap(scratch_);
    last_increment_ = dl;
    local_time_ += dl;
}

PathSample simulate(const CoefficientField& field, const DomainGeometry& geometry,
                    const IntegratorSpec& spec, VectorCRef x0, std::uint64_t seed) {
    PathWalker walker(field, geometry, spec, x0, seed);
    const std::size_t steps = spec.steps();
    const int d = field.dim();
    PathSample path;
    path.dim = d;
    path.step_size = spec.step_size;
    path.seed = seed;
    path.states.resize((steps + 1) * d);
    path.local_time.resize(steps + 1);
    path.alive.resize(steps + 1);
    auto record = [&](std::size_t k) {
        std::copy(walker.state().data(), walker.state().data() + d, path.states.begin() + k * d);
        path.local_time[k] = walker.local_time();
        path.alive[k] = walker.alive() ? 1 : 0;
    };
    record(0);
    for (std::size_t k = 1; k <= steps; ++k) {
        if (!walker.alive()) {
            std::copy_n(path.states.begin() + (k - 1) * d, d, path.states.begin() + k * d);
            path.local_time[k] = path.local_time[k - 1];
            path.alive[k] = 0;
            continue;
        }
        walker.advance();
        record(k);
        if (!walker.alive()) {
            path.events.push_back({k, *walker.kill_reason()});
        } else if (walker.last_increment() > 0.0) {
            path.events.push_back({k, EventKind::reflection});
            path.contacts.insert(path.contacts.end(), walker.last_contact().data(),
                                 walker.last_contact().data() + d);
        }
    }
    return path;
}

void write_path_csv(std::ostream& os, const PathSample& path, long path_id, bool with_header) {
    if (with_header) {
        if (path_id >= 0) os << "path_id,";
        os << 't';
        for (int i = 0; i < path.dim; ++i) os << ",x_" << (i + 1);
        os << ",ell,alive\n";
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
        if (path_id >= 0) os << path_id << ',';
        os << format_number(path.time(k));
        const auto x = path.state(k);
        for (int i = 0; i < path.dim; ++i) os << ',' << format_number(x[i]);
        os << ',' << format_number(path.local_time[k]) << ',' << static_cast<int>(path.alive[k]) << '\n';
    }
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr first_error;
    std::size_t first_error_index = n;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (i < first_error_index) {
                        first_error_index = i;
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<PathSample> simulate_ensemble(const CoefficientField& field, const DomainGeometry& geometry,
                                          const IntegratorSpec& spec, VectorCRef x0, std::size_t n_paths,
                                          std::uint64_t base_seed, const EnsembleOptions& options) {
    const Vector start = x0;
    std::vector<PathSample> paths(n_paths);
    parallel_for(n_paths, options.threads, [&](std::size_t i) {
        paths[i] = simulate(field, geometry, spec, start, derive_seed(base_seed, options.first_index + i));
    });
    return paths;
}

}  // namespace rsde
