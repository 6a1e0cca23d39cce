#include "rsde/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rsde/error.hpp"
#include "rsde/format.hpp"

namespace rsde {
namespace {

double checked(double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteIntegrand, "integrand is not finite on the path");
    return v;
}

// Trapezoid accumulation of per-state integrand values up to `last`.
Series trapezoid(const std::vector<double>& values, std::size_t last, double h, std::size_t n) {
    Series out(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        out[k] = (k <= last) ? out[k - 1] + 0.5 * h * (values[k - 1] + values[k]) : out[k - 1];
    }
    return out;
}

// Boundary point of the reflecting step that ends at grid index k: the
// recorded projection P the pushback used, else the post-step state. Taking
// the integrand at the landing point instead leaves an O(delta^2) error per
// reflection whenever A is not a multiple of the identity, because the
// landing point and P then differ along the boundary.
class ContactCursor {
public:
    explicit ContactCursor(const PathSample& path) : path_(path) {}

    Eigen::Map<const Vector> at(std::size_t k) {
        const auto& events = path_.events;
        while (event_ < events.size() && events[event_].step < k) {
            if (events[event_].kind == EventKind::reflection) ++contact_;
            ++event_;
        }
        const std::size_t d = static_cast<std::size_t>(path_.dim);
        if (event_ < events.size() && events[event_].step == k && events[event_].kind == EventKind::reflection &&
            (contact_ + 1) * d <= path_.contacts.size()) {
            return Eigen::Map<const Vector>(path_.contacts.data() + contact_ * d, path_.dim);
        }
        return path_.state(k);
    }

private:
    const PathSample& path_;
    std::size_t event_ = 0;
    std::size_t contact_ = 0;
};

}  // namespace

double DecompositionRecord::identity_residual() const {
    double worst = 0.0;
    for (std::size_t k = 0; k < u_values.size(); ++k) {
        const double lhs = u_values[k] - u_values[0];
        const double rhs = (n_dt[k] - n_dl[k]) + m_values[k];
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

Series integrate_dt(const PathSample& path, const PointFunction& f) {
    const std::size_t n = path.size();
    const std::size_t last = path.last_alive();
    std::vector<double> values(n, 0.0);
    for (std::size_t k = 0; k <= last; ++k) values[k] = checked(f(path.state(k)));
    return trapezoid(values, last, path.step_size, n);
}

Series integrate_dlocaltime(const PathSample& path, const PointFunction& g) {
    const std::size_t n = path.size();
    Series out(n, 0.0);
    ContactCursor contacts(path);
    for (std::size_t k = 1; k < n; ++k) {
        const double dl = path.local_time[k] - path.local_time[k - 1];
        out[k] = out[k - 1];
        if (dl > 0.0) out[k] += checked(g(contacts.at(k))) * dl;
    }
    return out;
}

DecompositionRecord decompose(const PathSample& path, const CoefficientField& field,
                              const DomainGeometry& geometry, const TestFunction& u,
                              const DecomposeOptions& options) {
    const std::size_t n = path.size();
    const std::size_t last = path.last_alive();
    DecompositionRecord rec;
    rec.u_values.resize(n);
    for (std::size_t k = 0; k <= last; ++k) rec.u_values[k] = u.value(path.state(k));
    for (std::size_t k = last + 1; k < n; ++k) rec.u_values[k] = rec.u_values[last];

    rec.n_dt = integrate_dt(path, [&](VectorCRef x) { return apply_generator(field, u, x); });
    rec.n_dl = integrate_dlocaltime(path, [&](VectorCRef x) {
        const Vector c = co_normal(field, geometry, x);
        return options.local_time_sign * u.gradient(x).dot(c);
    });
    rec.m_values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        rec.m_values[k] = rec.u_values[k] - rec.u_values[0] - rec.n_dt[k] + rec.n_dl[k];
    }
    rec.qv_estimate = quadratic_variation(rec.m_values);
    return rec;
}

Series quadratic_variation(const Series& s) {
    Series out(s.size(), 0.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double d = s[k] - s[k - 1];
        out[k] = out[k - 1] + d * d;
    }
    return out;
}

Series covariation(const Series& s1, const Series& s2) {
    if (s1.size() != s2.size()) throw Error(ErrorCode::GridMismatch, "series live on different grids");
    Series sum(s1.size());
    for (std::size_t k = 0; k < s1.size(); ++k) sum[k] = s1[k] + s2[k];
    const Series q = quadratic_variation(sum);
    const Series q1 = quadratic_variation(s1);
    const Series q2 = quadratic_variation(s2);
    Series out(s1.size());
    for (std::size_t k = 0; k < s1.size(); ++k) out[k] = 0.5 * (q[k] - q1[k] - q2[k]);
    return out;
}

double smoothstep5(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
}

double ladder_cutoff(const DomainGeometry& geometry, VectorCRef x, double density, long n) {
    const double inner = 1.0 / static_cast<double>(n + 1);
    const double outer = 1.0 / static_cast<double>(n + 2);
    const double norm_part = smoothstep5(static_cast<double>(n + 2) - x.norm());
    const double density_part = smoothstep5((density - outer) / (inner - outer));
    const double exc = geometry.distance_to_exceptional(x);
    const double exc_part = std::isinf(exc) ? 1.0 : smoothstep5((exc - outer) / (inner - outer));
    return norm_part * density_part * exc_part;
}

std::vector<DecompositionRecord> coordinate_decomposition(const PathSample& path,
                                                          const CoefficientField& field,
                                                          const DomainGeometry& geometry,
                                                          const IntegratorSpec& spec,
                                                          const DecomposeOptions& options) {
    const int d = path.dim;
    const std::size_t n = path.size();
    const std::size_t last = path.last_alive();
    const double h = path.step_size;
    const long level = spec.ladder.max_level;

    std::vector<DecompositionRecord> recs(d);
    for (auto& r : recs) {
        r.u_values.resize(n);
        r.n_dt.assign(n, 0.0);
        r.n_dl.assign(n, 0.0);
        r.m_values.resize(n);
    }
    PointCoefficients c(d);
    ContactCursor contacts(path);
    Vector prev_b(d);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kk = std::min(k, last);
        const auto x = path.state(kk);
        for (int i = 0; i < d; ++i) recs[i].u_values[k] = x[i];
        if (k == 0 || k > last) {
            if (k == 0) {
                if (!field.evaluate(x, c)) throw Error(ErrorCode::DensityVanishes, "rho vanishes on the path");
                prev_b = c.drift;
            } else {
                for (int i = 0; i < d; ++i) {
                    recs[i].n_dt[k] = recs[i].n_dt[k - 1];
                    recs[i].n_dl[k] = recs[i].n_dl[k - 1];
                }
            }
            continue;
        }
        if (!field.evaluate(x, c)) throw Error(ErrorCode::DensityVanishes, "rho vanishes on the path");
        // The cutoff is identically 1 on every alive state; anything else
        // means the path escaped the localization the record relies on.
        if (ladder_cutoff(geometry, x, c.density, level) != 1.0) {
            throw Error(ErrorCode::InvalidArgument, "alive state outside the localization cutoff");
        }
        const double dl = path.local_time[k] - path.local_time[k - 1];
        Vector conormal;
        if (dl > 0.0) conormal = options.local_time_sign * co_normal(field, geometry, contacts.at(k));
        for (int i = 0; i < d; ++i) {
            recs[i].n_dt[k] = recs[i].n_dt[k - 1] + 0.5 * h * (checked(prev_b[i]) + checked(c.drift[i]));
            recs[i].n_dl[k] = recs[i].n_dl[k - 1] + (dl > 0.0 ? conormal[i] * dl : 0.0);
        }
        prev_b = c.drift;
    }
    for (auto& r : recs) {
        for (std::size_t k = 0; k < n; ++k) {
            r.m_values[k] = r.u_values[k] - r.u_values[0] - r.n_dt[k] + r.n_dl[k];
        }
        r.qv_estimate = quadratic_variation(r.m_values);
    }
    return recs;
}

void write_decomposition_csv(std::ostream& os, const DecompositionRecord& record, double step_size) {
    os << "t,u,n_dt,n_dl,m,qv\n";
    for (std::size_t k = 0; k < record.u_values.size(); ++k) {
        os << format_number(static_cast<double>(k) * step_size) << ',' << format_number(record.u_values[k])
           << ',' << format_number(record.n_dt[k]) << ',' << format_number(record.n_dl[k]) << ','
           << format_number(record.m_values[k]) << ',' << format_number(record.qv_estimate[k]) << '\n';
    }
}

}  // namespace rsde
