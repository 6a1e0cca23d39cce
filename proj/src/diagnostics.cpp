#include "rsde/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "rsde/error.hpp"
#include "rsde/format.hpp"
#include "rsde/rng.hpp"

namespace rsde {

bool PassRule::evaluate(double estimate, double std_error, double reference) const {
    switch (kind) {
        case RuleKind::z_band:
            return std::abs(estimate - reference) <= z_max * std_error + relative * std::abs(reference) + absolute;
        case RuleKind::exact_zero: return estimate == reference;
        case RuleKind::upper_bound: return estimate <= absolute;
        case RuleKind::lower_bound: return estimate >= absolute;
    }
    return false;
}

std::string PassRule::describe() const {
    std::ostringstream os;
    switch (kind) {
        case RuleKind::z_band:
            os << "|estimate - reference| <= " << format_number(z_max) << " * stderr";
            if (relative != 0.0) os << " + " << format_number(relative) << " * |reference|";
            if (absolute != 0.0) os << " + " << format_number(absolute);
            break;
        case RuleKind::exact_zero: os << "estimate == reference"; break;
        case RuleKind::upper_bound: os << "estimate <= " << format_number(absolute); break;
        case RuleKind::lower_bound: os << "estimate >= " << format_number(absolute); break;
    }
    return os.str();
}

void finalize(StatTestReport& r) {
    const double diff = r.estimate - r.reference;
    if (diff == 0.0) {
        r.z_score = 0.0;
    } else if (r.std_error > 0.0) {
        r.z_score = diff / r.std_error;
    } else {
        r.z_score = std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    r.pass = r.rederive();
}

MeanStat mean_stat(const std::vector<double>& xs) {
    MeanStat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n < 2) return s;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std_error = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
    return s;
}

std::size_t checkpoint_index(const PathSample& path, double t) {
    const double kf = t / path.step_size;
    const double k = std::round(kf);
    if (!(t >= 0.0) || std::abs(kf - k) > 1e-9 * std::max(1.0, k) || k >= static_cast<double>(path.size())) {
        throw Error(ErrorCode::InvalidArgument, "checkpoint is not on the path grid");
    }
    return static_cast<std::size_t>(k);
}

namespace {

void require_ensemble(const Ensemble& ensemble) {
    if (ensemble.empty()) throw Error(ErrorCode::EmptyEnsemble, "ensemble has no paths");
    for (const auto& p : ensemble) {
        if (p.size() != ensemble.front().size() || p.step_size != ensemble.front().step_size ||
            p.dim != ensemble.front().dim) {
            throw Error(ErrorCode::GridMismatch, "paths do not share one grid");
        }
    }
}

Budget budget_of(const Ensemble& ensemble) {
    Budget b;
    b.n_paths = ensemble.size();
    b.step_size = ensemble.front().step_size;
    b.horizon = ensemble.front().time(ensemble.front().size() - 1);
    b.seed = ensemble.front().seed;
    return b;
}

bool alive_at(const PathSample& p, std::size_t k) { return p.alive[k] != 0; }

}  // namespace

std::vector<StatTestReport> martingale_test(const Ensemble& ensemble, const CoefficientField& field,
                                            const DomainGeometry& geometry, const TestFunction& u,
                                            const std::vector<double>& checkpoints,
                                            const MartingaleOptions& options) {
    require_ensemble(ensemble);
    std::vector<std::size_t> idx;
    for (double t : checkpoints) idx.push_back(checkpoint_index(ensemble.front(), t));

    std::vector<std::vector<double>> m(ensemble.size(), std::vector<double>(idx.size()));
    parallel_for(ensemble.size(), options.threads, [&](std::size_t p) {
        const DecompositionRecord rec = decompose(ensemble[p], field, geometry, u, options.decompose);
        for (std::size_t c = 0; c < idx.size(); ++c) m[p][c] = rec.m_values[idx[c]];
    });

    std::vector<StatTestReport> out;
    for (std::size_t c = 0; c < idx.size(); ++c) {
        std::vector<double> xs;
        std::size_t excluded = 0;
        for (std::size_t p = 0; p < ensemble.size(); ++p) {
            if (alive_at(ensemble[p], idx[c])) {
                xs.push_back(m[p][c]);
            } else {
                ++excluded;
            }
        }
        if (xs.empty()) throw Error(ErrorCode::EmptyEnsemble, "no path alive at the checkpoint");
        const MeanStat s = mean_stat(xs);
        StatTestReport r;
        r.name = "martingale";
        r.parameters = {{"u", u.name},
                        {"t", checkpoints[c]},
                        {"excluded", static_cast<double>(excluded)},
                        {"local_time_sign", options.decompose.local_time_sign}};
        r.estimate = s.mean;
        r.std_error = s.std_error;
        r.reference = 0.0;
        r.rule = {RuleKind::z_band, 3.0, 0.0, 0.0};
        r.budget = budget_of(ensemble);
        finalize(r);
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

StatTestReport paired_qv_report(std::string name, std::vector<Parameter> params, const std::vector<double>& qv,
                                const std::vector<double>& ref, std::size_t excluded, const Ensemble& ensemble) {
    if (qv.empty()) throw Error(ErrorCode::EmptyEnsemble, "no path alive at the checkpoint");
    std::vector<double> diff(qv.size());
    for (std::size_t i = 0; i < qv.size(); ++i) diff[i] = qv[i] - ref[i];
    StatTestReport r;
    r.name = std::move(name);
    r.parameters = std::move(params);
    r.parameters.push_back({"excluded", static_cast<double>(excluded)});
    r.estimate = mean_stat(qv).mean;
    r.reference = mean_stat(ref).mean;
    r.std_error = mean_stat(diff).std_error;
    r.rule = {RuleKind::z_band, 3.0, 0.05, 0.0};
    r.budget = budget_of(ensemble);
    finalize(r);
    return r;
}

}  // namespace

StatTestReport qv_test(const Ensemble& ensemble, const CoefficientField& field, const DomainGeometry& geometry,
                       const TestFunction& u, double t, const MartingaleOptions& options) {
    require_ensemble(ensemble);
    const std::size_t k = checkpoint_index(ensemble.front(), t);
    std::vector<double> qv(ensemble.size()), ref(ensemble.size());
    parallel_for(ensemble.size(), options.threads, [&](std::size_t p) {
        const DecompositionRecord rec = decompose(ensemble[p], field, geometry, u, options.decompose);
        qv[p] = rec.qv_estimate[k];
        const Series energy = integrate_dt(ensemble[p], [&](VectorCRef x) {
            const Vector g = u.gradient(x);
            return 2.0 * g.dot(field.matrix(x) * g);
        });
        ref[p] = energy[k];
    });
    std::vector<double> q, r;
    std::size_t excluded = 0;
    for (std::size_t p = 0; p < ensemble.size(); ++p) {
        if (!alive_at(ensemble[p], k)) {
            ++excluded;
            continue;
        }
        q.push_back(qv[p]);
        r.push_back(ref[p]);
    }
    return paired_qv_report("quadratic_variation", {{"u", u.name}, {"t", t}}, q, r, excluded, ensemble);
}

StatTestReport covariation_test(const Ensemble& ensemble, const CoefficientField& field,
                                const DomainGeometry& geometry, const IntegratorSpec& spec, int i, int j, double t,
                                const MartingaleOptions& options) {
    require_ensemble(ensemble);
    if (i < 0 || j < 0 || i >= ensemble.front().dim || j >= ensemble.front().dim) {
        throw Error(ErrorCode::InvalidArgument, "coordinate index out of range");
    }
    const std::size_t k = checkpoint_index(ensemble.front(), t);
    std::vector<double> cv(ensemble.size()), ref(ensemble.size());
    parallel_for(ensemble.size(), options.threads, [&](std::size_t p) {
        const auto recs = coordinate_decomposition(ensemble[p], field, geometry, spec, options.decompose);
        cv[p] = covariation(recs[i].m_values, recs[j].m_values)[k];
        const Series a = integrate_dt(ensemble[p], [&](VectorCRef x) { return 2.0 * field.matrix(x)(i, j); });
        ref[p] = a[k];
    });
    std::vector<double> c, r;
    std::size_t excluded = 0;
    for (std::size_t p = 0; p < ensemble.size(); ++p) {
        if (!alive_at(ensemble[p], k)) {
            ++excluded;
            continue;
        }
        c.push_back(cv[p]);
        r.push_back(ref[p]);
    }
    return paired_qv_report("covariation", {{"i", static_cast<double>(i)}, {"j", static_cast<double>(j)}, {"t", t}},
                            c, r, excluded, ensemble);
}

StatTestReport local_time_support_test(const Ensemble& ensemble, const CoefficientField& field,
                                       const DomainGeometry& geometry, const SupportOptions& options) {
    require_ensemble(ensemble);
    double c_sup = 0.0;
    if (options.c_sup) {
        c_sup = *options.c_sup;
    } else {
        double gamma_max = 0.0;
        for (const auto& p : ensemble) {
            for (std::size_t k = 1; k < p.size(); ++k) {
                if (p.local_time[k] > p.local_time[k - 1]) {
                    Eigen::SelfAdjointEigenSolver<Matrix> es(field.matrix(p.state(k)), Eigen::EigenvaluesOnly);
                    gamma_max = std::max(gamma_max, es.eigenvalues().maxCoeff());
                }
            }
        }
        c_sup = 3.0 * std::sqrt(gamma_max);
    }
    const double h = ensemble.front().step_size;
    const double radius = c_sup * std::sqrt(h);
    double stray = 0.0;
    std::size_t steps = 0, booked = 0;
    for (const auto& p : ensemble) {
        for (std::size_t k = 1; k < p.size(); ++k) {
            ++steps;
            const double dl = p.local_time[k] - p.local_time[k - 1];
            if (dl == 0.0) continue;
            ++booked;
            if (std::abs(geometry.signed_distance(p.state(k))) > radius) stray += std::abs(dl);
        }
    }
    StatTestReport r;
    r.name = "local_time_support";
    r.parameters = {{"c_sup", c_sup},
                    {"radius", radius},
                    {"steps", static_cast<double>(steps)},
                    {"reflection_steps", static_cast<double>(booked)}};
    r.estimate = stray;
    r.std_error = 0.0;
    r.reference = 0.0;
    r.rule = {RuleKind::exact_zero, 0.0, 0.0, 0.0};
    r.budget = budget_of(ensemble);
    finalize(r);
    return r;
}

OccupationHistogram::OccupationHistogram(const DomainGeometry& geometry, int bins_per_axis)
    : dim_(geometry.dim()), bins_(bins_per_axis) {
    if (bins_ < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bin per axis");
    if (dim_ > 3) throw Error(ErrorCode::InvalidArgument, "occupation histograms support dim <= 3");
    auto box = geometry.bounding_box();
    lower_ = box.first;
    upper_ = box.second;
    std::size_t cells = 1;
    for (int i = 0; i < dim_; ++i) cells *= static_cast<std::size_t>(bins_);
    counts_.assign(cells, 0);
}

std::size_t OccupationHistogram::cell_index(VectorCRef x) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim_; ++i) {
        const double s = (x[i] - lower_[i]) / (upper_[i] - lower_[i]);
        const long b = std::clamp(static_cast<long>(std::floor(s * bins_)), 0L, static_cast<long>(bins_ - 1));
        idx = idx * static_cast<std::size_t>(bins_) + static_cast<std::size_t>(b);
    }
    return idx;
}

void OccupationHistogram::add(VectorCRef x) {
    ++counts_[cell_index(x)];
    ++total_;
}

void OccupationHistogram::add_path(const PathSample& path, double burn_in_fraction) {
    const auto first = static_cast<std::size_t>(std::ceil(burn_in_fraction * static_cast<double>(path.size())));
    for (std::size_t k = first; k < path.size() && path.alive[k]; ++k) add(path.state(k));
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by the Golub-Welsch eigenproblem.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    Matrix j = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        j(k, k - 1) = b;
        j(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(j);
    std::vector<double> x(n), w(n);
    for (int k = 0; k < n; ++k) {
        x[k] = es.eigenvalues()[k];
        const double v = es.eigenvectors()(0, k);
        w[k] = 2.0 * v * v;
    }
    return {x, w};
}

}  // namespace

std::vector<double> reference_cell_masses(const OccupationHistogram& hist, const DomainGeometry& geometry,
                                          const DensityField& density, int quadrature_order) {
    const auto [gx, gw] = gauss_legendre(quadrature_order);
    const int d = hist.dim();
    const int bins = hist.bins_per_axis();
    const Vector width = (hist.upper() - hist.lower()) / bins;
    std::vector<double> mass(hist.cell_count(), 0.0);
    std::vector<int> cell(d), node(d);
    Vector x(d);
    double total = 0.0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        std::size_t rem = c;
        for (int i = d - 1; i >= 0; --i) {
            cell[i] = static_cast<int>(rem % bins);
            rem /= bins;
        }
        std::fill(node.begin(), node.end(), 0);
        double m = 0.0;
        for (;;) {
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                x[i] = hist.lower()[i] + width[i] * (cell[i] + 0.5 * (gx[node[i]] + 1.0));
                w *= 0.5 * width[i] * gw[node[i]];
            }
            if (geometry.signed_distance(x) >= 0.0) m += w * density.value(x);
            int i = d - 1;
            while (i >= 0 && ++node[i] == quadrature_order) node[i--] = 0;
            if (i < 0) break;
        }
        mass[c] = m;
        total += m;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw Error(ErrorCode::DensityVanishes, "density does not integrate to a positive finite mass");
    }
    for (double& m : mass) m /= total;
    return mass;
}

StatTestReport stationarity_test(const OccupationHistogram& hist, const DomainGeometry& geometry,
                                 const DensityField& density, const Budget& budget,
                                 const StationarityOptions& options) {
    if (hist.total() == 0) throw Error(ErrorCode::EmptyEnsemble, "histogram holds no samples");
    const std::vector<double> ref = reference_cell_masses(hist, geometry, density, options.quadrature_order);
    const double n = static_cast<double>(hist.total());
    double tv = 0.0, noise = 0.0;
    for (std::size_t c = 0; c < ref.size(); ++c) {
        tv += std::abs(static_cast<double>(hist.counts()[c]) / n - ref[c]);
        noise += std::sqrt(ref[c] * (1.0 - ref[c]) / n);
    }
    StatTestReport r;
    r.name = "stationarity";
    r.parameters = {{"bins_per_axis", static_cast<double>(hist.bins_per_axis())},
                    {"samples", n},
                    {"tolerance", options.tolerance}};
    r.estimate = 0.5 * tv;
    // Expected TV of iid samples; informational only (the chain is correlated).
    r.std_error = 0.5 * noise * std::sqrt(2.0 / M_PI);
    r.reference = 0.0;
    r.rule = {RuleKind::upper_bound, 0.0, 0.0, options.tolerance};
    r.budget = budget;
    finalize(r);
    return r;
}

std::vector<StatTestReport> brownian_reconstruction_test(const Ensemble& ensemble, const CoefficientField& field,
                                                         const DomainGeometry& geometry,
                                                         const IntegratorSpec& spec) {
    require_ensemble(ensemble);
    // Steps are selected by their start point only. Dropping steps that happened
    // to reflect conditions the increment on staying inside and biases it inward.
    constexpr double kInteriorSigmas = 8.0;
    const int d = ensemble.front().dim;
    const double h = ensemble.front().step_size;
    std::vector<double> s1(d, 0.0), s2(d, 0.0), s3(d, 0.0), s4(d, 0.0);
    Matrix cross = Matrix::Zero(d, d), cross2 = Matrix::Zero(d, d);
    std::size_t n = 0;
    PointCoefficients c(d);
    Vector w(d), dm(d);
    for (const auto& p : ensemble) {
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            if (!p.alive[k + 1] || p.local_time[k + 1] != p.local_time[k]) continue;
            const auto x = p.state(k);
            if (!field.evaluate(x, c, spec.density_floor)) continue;
            if (geometry.signed_distance(x) <= kInteriorSigmas * std::sqrt(2.0 * h * c.a.trace())) continue;
            Eigen::LLT<Matrix> llt(c.a);
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorCode::SingularSigma, "sigma is not invertible along the path");
            }
            tame_drift(spec, c.drift);
            dm = p.state(k + 1) - x - h * c.drift;
            w = llt.matrixL().solve(dm) / std::sqrt(2.0 * h);
            if (!w.allFinite()) throw Error(ErrorCode::SingularSigma, "sigma inverse produced non-finite increments");
            ++n;
            for (int i = 0; i < d; ++i) {
                const double wi = w[i], wi2 = wi * wi;
                s1[i] += wi;
                s2[i] += wi2;
                s3[i] += wi2 * wi;
                s4[i] += wi2 * wi2;
                for (int j = i + 1; j < d; ++j) {
                    cross(i, j) += wi * w[j];
                    cross2(i, j) += wi2 * w[j] * w[j];
                }
            }
        }
    }
    if (n < 2) throw Error(ErrorCode::EmptyEnsemble, "no interior increments to reconstruct");
    const double nn = static_cast<double>(n);
    const Budget budget = budget_of(ensemble);
    std::vector<StatTestReport> out;
    auto push = [&](std::string name, std::vector<Parameter> params, double est, double se, double ref,
                    PassRule rule) {
        StatTestReport r;
        r.name = std::move(name);
        r.parameters = std::move(params);
        r.parameters.push_back({"increments", nn});
        r.estimate = est;
        r.std_error = se;
        r.reference = ref;
        r.rule = rule;
        r.budget = budget;
        finalize(r);
        out.push_back(std::move(r));
    };
    for (int i = 0; i < d; ++i) {
        const double m1 = s1[i] / nn, m2 = s2[i] / nn, m3 = s3[i] / nn, m4 = s4[i] / nn;
        const double var = m2 - m1 * m1;
        push("brownian_mean", {{"coordinate", static_cast<double>(i)}}, m1, std::sqrt(var / nn), 0.0,
             {RuleKind::z_band, 3.0, 0.0, 0.0});
        push("brownian_variance", {{"coordinate", static_cast<double>(i)}}, m2, std::sqrt((m4 - m2 * m2) / nn), 1.0,
             {RuleKind::z_band, 3.0, 0.05, 0.0});
        const double c4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1 * m1 * m1 * m1;
        push("brownian_excess_kurtosis", {{"coordinate", static_cast<double>(i)}}, c4 / (var * var) - 3.0,
             std::sqrt(24.0 / nn), 0.0, {RuleKind::z_band, 3.0, 0.0, 0.0});
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            const double m = cross(i, j) / nn;
            const double v = cross2(i, j) / nn - m * m;
            push("brownian_cross_covariance", {{"i", static_cast<double>(i)}, {"j", static_cast<double>(j)}}, m,
                 std::sqrt(v / nn), 0.0, {RuleKind::z_band, 3.0, 0.0, 0.0});
        }
    }
    return out;
}

double PotentialTable::operator()(double at) const {
    if (x.size() < 2) throw Error(ErrorCode::OracleMissing, "potential table is empty");
    const double tol = 1e-12 * std::max(1.0, std::abs(x.back() - x.front()));
    if (at < x.front() - tol || at > x.back() + tol) {
        throw Error(ErrorCode::OracleMissing, "point outside the potential table");
    }
    const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    const double s = std::clamp((at - x.front()) / dx, 0.0, static_cast<double>(x.size() - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(s), x.size() - 2);
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * u[i] + f * u[i + 1];
}

double PotentialTable::max_value() const { return u.empty() ? 0.0 : *std::max_element(u.begin(), u.end()); }

PotentialTable potential_oracle_1d(double alpha, const DomainGeometry& geometry, const CoefficientField& field,
                                   Wall wall, const OracleOptions& options) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
    if (geometry.dim() != 1 || geometry.factor_count() != 1 || field.dim() != 1) {
        throw Error(ErrorCode::InvalidArgument, "potential oracle needs a 1D geometry");
    }
    if (options.cells < 2) throw Error(ErrorCode::InvalidArgument, "oracle needs at least two cells");
    double lo = 0.0, hi = 0.0;
    const Shape& shape = geometry.factor(0);
    if (const auto* iv = std::get_if<Interval>(&shape)) {
        lo = iv->a;
        hi = iv->b;
    } else if (const auto* hs = std::get_if<HalfSpace>(&shape)) {
        if (wall != Wall::lower) throw Error(ErrorCode::InvalidArgument, "a half-line only has a lower wall");
        lo = hs->offset;
        double len = options.truncation;
        if (len <= 0.0) {
            double a_max = 0.0;
            for (int i = 0; i <= 16; ++i) a_max = std::max(a_max, field.matrix(Vector::Constant(1, lo + i))(0, 0));
            len = 40.0 / std::sqrt(alpha / a_max);
        }
        hi = lo + len;
    } else if (const auto* box = std::get_if<Box>(&shape)) {
        lo = box->lower[0];
        hi = box->upper[0];
    } else {
        throw Error(ErrorCode::InvalidArgument, "potential oracle needs an interval or a half-line");
    }

    const std::size_t n = options.cells;
    const double dx = (hi - lo) / static_cast<double>(n);
    PotentialTable t;
    t.alpha = alpha;
    t.wall = wall;
    t.x.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t.x[i] = lo + dx * static_cast<double>(i);
    t.x.back() = hi;

    // p = a rho at cell midpoints, q = rho at nodes.
    std::vector<double> p(n), q(n + 1);
    Vector pt(1);
    for (std::size_t i = 0; i < n; ++i) {
        pt[0] = lo + dx * (static_cast<double>(i) + 0.5);
        p[i] = field.matrix(pt)(0, 0) * field.density(pt);
        if (!(p[i] > 0.0) || !std::isfinite(p[i])) throw Error(ErrorCode::SolverFailure, "a rho is not elliptic");
    }
    for (std::size_t i = 0; i <= n; ++i) {
        pt[0] = t.x[i];
        q[i] = field.density(pt);
        if (!(q[i] >= 0.0) || !std::isfinite(q[i])) throw Error(ErrorCode::SolverFailure, "rho is not admissible");
    }

    // Tridiagonal system from the weak form with hat test functions and
    // lumped mass: sub/diag/super, right-hand side = wall charges.
    std::vector<double> sub(n + 1, 0.0), diag(n + 1, 0.0), sup(n + 1, 0.0), rhs(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
        const double mass = (i == 0 || i == n) ? 0.5 * dx : dx;
        diag[i] = alpha * q[i] * mass;
        if (i > 0) {
            diag[i] += p[i - 1] / dx;
            sub[i] = -p[i - 1] / dx;
        }
        if (i < n) {
            diag[i] += p[i] / dx;
            sup[i] = -p[i] / dx;
        }
    }
    if (wall == Wall::lower || wall == Wall::both) rhs[0] = 1.0;
    if (wall == Wall::upper || wall == Wall::both) rhs[n] = 1.0;

    for (std::size_t i = 1; i <= n; ++i) {
        if (!(diag[i - 1] > 0.0)) throw Error(ErrorCode::SolverFailure, "singular pivot in the oracle solve");
        const double f = sub[i] / diag[i - 1];
        diag[i] -= f * sup[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    if (!(diag[n] > 0.0)) throw Error(ErrorCode::SolverFailure, "singular pivot in the oracle solve");
    t.u.assign(n + 1, 0.0);
    t.u[n] = rhs[n] / diag[n];
    for (std::size_t i = n; i-- > 0;) t.u[i] = (rhs[i] - sup[i] * t.u[i + 1]) / diag[i];
    for (double v : t.u) {
        if (!std::isfinite(v)) throw Error(ErrorCode::SolverFailure, "oracle solution is not finite");
    }
    return t;
}

namespace {

struct WallSpan {
    double lo;
    double hi;
};

WallSpan wall_span(const DomainGeometry& geometry) {
    if (geometry.dim() != 1 || geometry.factor_count() != 1) {
        throw Error(ErrorCode::InvalidArgument, "Revuz check needs a 1D geometry");
    }
    const Shape& shape = geometry.factor(0);
    if (const auto* iv = std::get_if<Interval>(&shape)) return {iv->a, iv->b};
    if (const auto* hs = std::get_if<HalfSpace>(&shape)) {
        return {hs->offset, std::numeric_limits<double>::infinity()};
    }
    if (const auto* box = std::get_if<Box>(&shape)) return {box->lower[0], box->upper[0]};
    throw Error(ErrorCode::InvalidArgument, "Revuz check needs an interval or a half-line");
}

// Whether a reflection that ended at x booked local time on the charged wall.
bool charged_contact(const WallSpan& span, double x, Wall wall) {
    const bool at_lower = std::abs(x - span.lo) <= std::abs(x - span.hi);
    switch (wall) {
        case Wall::lower: return at_lower;
        case Wall::upper: return !at_lower;
        case Wall::both: return true;
    }
    return false;
}

std::uint64_t killing_seed(std::uint64_t path_seed) { return derive_seed(path_seed, 1); }

}  // namespace

std::vector<double> revuz_samples(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                                  double alpha, Wall wall, const RevuzOptions& options) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");
    if (options.n_paths == 0) throw Error(ErrorCode::EmptyEnsemble, "Revuz check needs paths");
    const WallSpan span = wall_span(geometry);
    const double h = options.step_size;
    const double t_max = std::log(1e6) / alpha;
    IntegratorSpec spec;
    spec.step_size = h;
    spec.horizon = std::max(h, t_max);
    const Vector start = Vector::Constant(1, x0);
    std::vector<double> out(options.n_paths);
    parallel_for(options.n_paths, options.threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(options.seed, i);
        PathWalker walker(field, geometry, spec, start, seed);
        double acc = 0.0;
        if (options.estimator == RevuzEstimator::truncated) {
            const auto steps = static_cast<std::size_t>(std::ceil(t_max / h));
            for (std::size_t k = 0; k < steps && walker.alive(); ++k) {
                walker.advance();
                const double dl = walker.last_increment();
                if (dl > 0.0 && charged_contact(span, walker.state()[0], wall)) {
                    acc += std::exp(-alpha * walker.time()) * dl;
                }
            }
        } else {
            std::mt19937_64 engine(killing_seed(seed));
            const double tau = std::exponential_distribution<double>(alpha)(engine);
            while (walker.alive()) {
                if (static_cast<double>(walker.step_index() + 1) * h > tau) break;
                walker.advance();
                const double dl = walker.last_increment();
                if (dl > 0.0 && charged_contact(span, walker.state()[0], wall)) acc += dl;
            }
        }
        out[i] = options.local_time_sign * acc;
    });
    return out;
}

StatTestReport revuz_check(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                           double alpha, const PotentialTable* oracle, const RevuzOptions& options) {
    if (oracle == nullptr || oracle->empty()) throw Error(ErrorCode::OracleMissing, "no potential table supplied");
    if (oracle->alpha != alpha) throw Error(ErrorCode::OracleMissing, "potential table was built for another alpha");
    const double reference = (*oracle)(x0);
    const MeanStat s = mean_stat(revuz_samples(field, geometry, x0, alpha, oracle->wall, options));
    StatTestReport r;
    r.name = "revuz";
    r.parameters = {{"x0", x0},
                    {"alpha", alpha},
                    {"wall", std::string(oracle->wall == Wall::lower   ? "lower"
                                         : oracle->wall == Wall::upper ? "upper"
                                                                       : "both")},
                    {"estimator", std::string(options.estimator == RevuzEstimator::truncated ? "truncated"
                                                                                            : "exponential_killing")}};
    r.estimate = s.mean;
    r.std_error = s.std_error;
    r.reference = reference;
    r.rule = {RuleKind::z_band, 3.0, options.relative_margin, 1e-6 * oracle->max_value()};
    r.budget = {options.n_paths, options.step_size, std::log(1e6) / alpha, options.seed};
    finalize(r);
    return r;
}

BiasLadderReport revuz_bias_ladder(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                                   double alpha, const PotentialTable& oracle, double coarse_step,
                                   const BiasLadderOptions& options) {
    if (oracle.empty()) throw Error(ErrorCode::OracleMissing, "no potential table supplied");
    if (options.n_paths < 2) throw Error(ErrorCode::EmptyEnsemble, "bias ladder needs at least two paths");
    constexpr int levels = 3;
    const WallSpan span = wall_span(geometry);
    const Wall wall = oracle.wall;
    const double reference = oracle(x0);
    std::vector<IntegratorSpec> specs(levels);
    for (int m = 0; m < levels; ++m) {
        specs[m].step_size = coarse_step / static_cast<double>(1 << m);
        specs[m].horizon = std::max(specs[m].step_size, std::log(1e6) / alpha);
    }
    const Vector start = Vector::Constant(1, x0);
    std::vector<std::array<double, levels>> samples(options.n_paths);

    parallel_for(options.n_paths, options.threads, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(options.seed, i);
        std::mt19937_64 engine(killing_seed(seed));
        const double tau = std::exponential_distribution<double>(alpha)(engine);
        NormalSource noise(seed);
        std::vector<PathWalker> walkers;
        walkers.reserve(levels);
        for (int m = 0; m < levels; ++m) walkers.emplace_back(field, geometry, specs[m], start, seed);
        std::array<double, levels> acc{};
        std::array<double, levels> pending{};
        std::array<bool, levels> done{};
        Vector z(1);
        for (std::size_t j = 0;; ++j) {
            bool all_done = true;
            for (int m = 0; m < levels; ++m) all_done = all_done && done[m];
            if (all_done) break;
            const double zf = noise.next();
            for (int m = 0; m < levels; ++m) {
                if (done[m]) continue;
                const std::size_t group = std::size_t{1} << (levels - 1 - m);
                pending[m] += zf;
                if ((j + 1) % group != 0) continue;
                PathWalker& w = walkers[m];
                if (!w.alive() || static_cast<double>(w.step_index() + 1) * specs[m].step_size > tau) {
                    done[m] = true;
                    continue;
                }
                z[0] = pending[m] / std::sqrt(static_cast<double>(group));
                pending[m] = 0.0;
                w.advance(z);
                const double dl = w.last_increment();
                if (dl > 0.0 && charged_contact(span, w.state()[0], wall)) acc[m] += dl;
            }
        }
        samples[i] = acc;
    });

    BiasLadderReport rep;
    rep.reference = reference;
    const double nn = static_cast<double>(options.n_paths);
    for (int m = 0; m < levels; ++m) {
        std::vector<double> xs(options.n_paths);
        for (std::size_t i = 0; i < options.n_paths; ++i) xs[i] = samples[i][m];
        const MeanStat s = mean_stat(xs);
        rep.levels.push_back({specs[m].step_size, s.mean, s.std_error, s.mean - reference});
        StatTestReport r;
        r.name = "revuz_bias_level";
        r.parameters = {{"x0", x0}, {"alpha", alpha}, {"level", static_cast<double>(m)}};
        r.estimate = s.mean;
        r.std_error = s.std_error;
        r.reference = reference;
        r.rule = {RuleKind::z_band, 3.0, 0.05, 1e-6 * oracle.max_value()};
        r.budget = {options.n_paths, specs[m].step_size, specs[m].horizon, options.seed};
        finalize(r);
        rep.reports.push_back(std::move(r));
    }
    rep.monotone = true;
    bool ratios_ok = true;
    for (int m = 0; m + 1 < levels; ++m) {
        const double ratio = rep.levels[m].bias / rep.levels[m + 1].bias;
        rep.ratios.push_back(ratio);
        const double noise = 2.0 * (rep.levels[m].std_error + rep.levels[m + 1].std_error);
        if (std::abs(rep.levels[m].bias) + noise < std::abs(rep.levels[m + 1].bias)) rep.monotone = false;
        if (!(ratio >= options.ratio_lo && ratio <= options.ratio_hi)) ratios_ok = false;
    }
    // Ratio of coupled successive differences, with a delta-method SE.
    std::vector<double> d1(options.n_paths), d2(options.n_paths);
    for (std::size_t i = 0; i < options.n_paths; ++i) {
        d1[i] = samples[i][0] - samples[i][1];
        d2[i] = samples[i][1] - samples[i][2];
    }
    const MeanStat s1 = mean_stat(d1), s2 = mean_stat(d2);
    if (s2.mean != 0.0) {
        double cov = 0.0;
        for (std::size_t i = 0; i < options.n_paths; ++i) cov += (d1[i] - s1.mean) * (d2[i] - s2.mean);
        cov /= (nn - 1.0) * nn;
        const double ratio = s1.mean / s2.mean;
        const double var = (s1.std_error * s1.std_error - 2.0 * ratio * cov + ratio * ratio * s2.std_error * s2.std_error) /
                           (s2.mean * s2.mean);
        rep.difference_ratio = ratio;
        rep.difference_ratio_se = std::sqrt(std::max(var, 0.0));
    }
    rep.pass = rep.monotone && ratios_ok;
    return rep;
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

std::string rule_kind_name(RuleKind k) {
    switch (k) {
        case RuleKind::z_band: return "z_band";
        case RuleKind::exact_zero: return "exact_zero";
        case RuleKind::upper_bound: return "upper_bound";
        case RuleKind::lower_bound: return "lower_bound";
    }
    return "unknown";
}

std::string param_text(const Parameter& p) {
    if (const auto* d = std::get_if<double>(&p.value)) return format_number(*d);
    return std::get<std::string>(p.value);
}

}  // namespace

void write_reports_json(std::ostream& os, const std::vector<StatTestReport>& reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (const auto& p : r.parameters) {
            if (const auto* d = std::get_if<double>(&p.value)) {
                params[p.key] = number(*d);
            } else {
                params[p.key] = std::get<std::string>(p.value);
            }
        }
        j["params"] = params;
        j["estimate"] = number(r.estimate);
        j["stderr"] = number(r.std_error);
        j["reference"] = number(r.reference);
        j["z"] = number(r.z_score);
        j["pass"] = r.pass;
        j["rule"] = {{"kind", rule_kind_name(r.rule.kind)},
                     {"z_max", r.rule.z_max},
                     {"relative", r.rule.relative},
                     {"absolute", r.rule.absolute},
                     {"text", r.rule.describe()}};
        j["budget"] = {{"n_paths", r.budget.n_paths},
                       {"h", r.budget.step_size},
                       {"T", r.budget.horizon},
                       {"seed", r.budget.seed}};
        arr.push_back(std::move(j));
    }
    os << arr.dump(2) << '\n';
}

void write_reports_text(std::ostream& os, const std::vector<StatTestReport>& reports) {
    for (const auto& r : reports) {
        os << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.parameters.empty()) {
            os << " [";
            for (std::size_t i = 0; i < r.parameters.size(); ++i) {
                if (i) os << ", ";
                os << r.parameters[i].key << '=' << param_text(r.parameters[i]);
            }
            os << ']';
        }
        os << " estimate=" << format_number(r.estimate) << " stderr=" << format_number(r.std_error)
           << " reference=" << format_number(r.reference) << " z=" << format_number(r.z_score) << " rule: "
           << r.rule.describe() << '\n';
    }
}

}  // namespace rsde
