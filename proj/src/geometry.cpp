#include "rsde/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "rsde/error.hpp"

namespace rsde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Clip the range by the one-dimensional constraint lo <= y - delta*c <= hi.
void clip_slab(ParameterRange& r, double y, double c, double lo, double hi) {
    if (c == 0.0) {
        if (y < lo || y > hi) {
            r.lo = kInf;
            r.hi = -kInf;
        }
        return;
    }
    double t1 = (y - lo) / c;
    double t2 = (y - hi) / c;
    if (t1 > t2) std::swap(t1, t2);
    r.lo = std::max(r.lo, t1);
    r.hi = std::min(r.hi, t2);
}

double box_signed_distance(const Vector& lower, const Vector& upper, VectorCRef x) {
    double inside = kInf;
    double outside_sq = 0.0;
    int outside_axes = 0;
    double single = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double below = lower[i] - x[i];
        const double above = x[i] - upper[i];
        const double excess = std::max(below, above);
        if (excess > 0.0) {
            outside_sq += excess * excess;
            single = excess;
            ++outside_axes;
        } else {
            inside = std::min(inside, -excess);
        }
    }
    if (outside_axes == 0) return inside;
    if (outside_axes == 1) return -single;
    return -std::sqrt(outside_sq);
}

double shape_signed_distance(const Shape& shape, VectorCRef x) {
    return std::visit(
        Overloaded{
            [&](const HalfSpace& h) { return x[h.axis] - h.offset; },
            [&](const Box& b) { return box_signed_distance(b.lower, b.upper, x); },
            [&](const Ball& b) { return b.radius - (x - b.center).norm(); },
            [&](const Interval& iv) {
                const double xv = x[0];
                if (xv < iv.a) return xv - iv.a;
                if (xv > iv.b) return iv.b - xv;
                return std::min(xv - iv.a, iv.b - xv);
            },
        },
        shape);
}

void shape_project(const Shape& shape, VectorCRef y, VectorRef out) {
    std::visit(Overloaded{
                   [&](const HalfSpace& h) {
                       out = y;
                       out[h.axis] = std::max(y[h.axis], h.offset);
                   },
                   [&](const Box& b) { out = y.cwiseMax(b.lower).cwiseMin(b.upper); },
                   [&](const Ball& b) {
                       const double r = (y - b.center).norm();
                       if (r <= b.radius) {
                           out = y;
                       } else {
                           out = b.center + (b.radius / r) * (y - b.center);
                       }
                   },
                   [&](const Interval& iv) { out[0] = std::clamp(y[0], iv.a, iv.b); },
               },
               shape);
}

bool face_excluded(const Box& b, int face) {
    return std::find(b.excluded_faces.begin(), b.excluded_faces.end(), face) !=
           b.excluded_faces.end();
}

double box_distance_to_exceptional(const Box& b, VectorCRef x) {
    const Eigen::Index d = x.size();
    double best = kInf;
    double s1 = kInf;
    double s2 = kInf;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double dl = std::abs(x[i] - b.lower[i]);
        const double du = std::abs(b.upper[i] - x[i]);
        if (face_excluded(b, static_cast<int>(2 * i))) best = std::min(best, dl);
        if (face_excluded(b, static_cast<int>(2 * i + 1))) best = std::min(best, du);
        const double a = std::min(dl, du);
        if (a < s1) {
            s2 = s1;
            s1 = a;
        } else if (a < s2) {
            s2 = a;
        }
    }
    if (d >= 2) best = std::min(best, std::hypot(s1, s2));
    return best;
}

double shape_distance_to_exceptional(const Shape& shape, VectorCRef x) {
    if (const auto* b = std::get_if<Box>(&shape)) return box_distance_to_exceptional(*b, x);
    return kInf;
}

// Outward normal of a single shape at a point known to be on its smooth
// boundary part.
void shape_normal(const Shape& shape, VectorCRef p, double tol, VectorRef out) {
    out.setZero();
    std::visit(Overloaded{
                   [&](const HalfSpace& h) { out[h.axis] = -1.0; },
                   [&](const Box& b) {
                       int hits = 0;
                       for (Eigen::Index i = 0; i < p.size(); ++i) {
                           if (std::abs(p[i] - b.lower[i]) <= tol) {
                               out[i] = -1.0;
                               ++hits;
                           } else if (std::abs(p[i] - b.upper[i]) <= tol) {
                               out[i] = 1.0;
                               ++hits;
                           }
                       }
                       if (hits != 1) {
                           throw Error(ErrorCode::NotOnSmoothBoundary, "box point not on a single face");
                       }
                   },
                   [&](const Ball& b) { out = (p - b.center) / (p - b.center).norm(); },
                   [&](const Interval& iv) {
                       out[0] = (std::abs(p[0] - iv.a) <= std::abs(p[0] - iv.b)) ? -1.0 : 1.0;
                   },
               },
               shape);
}

void shape_clip_line(const Shape& shape, VectorCRef y, VectorCRef c, ParameterRange& r) {
    std::visit(Overloaded{
                   [&](const HalfSpace& h) { clip_slab(r, y[h.axis], c[h.axis], h.offset, kInf); },
                   [&](const Box& b) {
                       for (Eigen::Index i = 0; i < y.size(); ++i) {
                           clip_slab(r, y[i], c[i], b.lower[i], b.upper[i]);
                       }
                   },
                   [&](const Ball& b) {
                       // |w - delta c|^2 <= R^2 with w = y - center.
                       const Vector w = y - b.center;
                       const double qa = c.squaredNorm();
                       if (qa == 0.0) {
                           if (w.norm() > b.radius) {
                               r.lo = kInf;
                               r.hi = -kInf;
                           }
                           return;
                       }
                       const double half_b = -w.dot(c);
                       const double qc = w.squaredNorm() - b.radius * b.radius;
                       const double disc = half_b * half_b - qa * qc;
                       if (disc < 0.0) {
                           r.lo = kInf;
                           r.hi = -kInf;
                           return;
                       }
                       const double sq = std::sqrt(disc);
                       // Stable root pair of qa*t^2 + 2*half_b*t + qc = 0.
                       const double q = -(half_b + std::copysign(sq, half_b));
                       double t1 = (q != 0.0) ? q / qa : 0.0;
                       double t2 = (q != 0.0) ? qc / q : 0.0;
                       if (t1 > t2) std::swap(t1, t2);
                       r.lo = std::max(r.lo, t1);
                       r.hi = std::min(r.hi, t2);
                   },
                   [&](const Interval& iv) { clip_slab(r, y[0], c[0], iv.a, iv.b); },
               },
               shape);
}

}  // namespace

int shape_dim(const Shape& shape) {
    return std::visit(Overloaded{
                          [](const HalfSpace& h) { return h.dim; },
                          [](const Box& b) { return static_cast<int>(b.lower.size()); },
                          [](const Ball& b) { return static_cast<int>(b.center.size()); },
                          [](const Interval&) { return 1; },
                      },
                      shape);
}

std::string shape_name(const Shape& shape) {
    return std::visit(Overloaded{
                          [](const HalfSpace&) { return std::string("half_space"); },
                          [](const Box&) { return std::string("box"); },
                          [](const Ball&) { return std::string("ball"); },
                          [](const Interval&) { return std::string("interval"); },
                      },
                      shape);
}

std::string_view to_string(BoundaryClass c) noexcept {
    switch (c) {
        case BoundaryClass::interior: return "interior";
        case BoundaryClass::smooth_boundary: return "smooth_boundary";
        case BoundaryClass::exceptional: return "exceptional";
        case BoundaryClass::exterior: return "exterior";
    }
    return "unknown";
}

namespace {

void validate_shape(const Shape& shape) {
    std::visit(Overloaded{
                   [](const HalfSpace& h) {
                       if (h.dim < 1 || h.axis < 0 || h.axis >= h.dim) {
                           throw Error(ErrorCode::InvalidArgument, "half-space axis out of range");
                       }
                   },
                   [](const Box& b) {
                       if (b.lower.size() == 0 || b.lower.size() != b.upper.size() ||
                           (b.upper - b.lower).minCoeff() <= 0.0) {
                           throw Error(ErrorCode::InvalidArgument, "box bounds must satisfy lower < upper");
                       }
                       for (int f : b.excluded_faces) {
                           if (f < 0 || f >= 2 * b.lower.size()) {
                               throw Error(ErrorCode::InvalidArgument, "excluded face index out of range");
                           }
                       }
                   },
                   [](const Ball& b) {
                       if (b.center.size() == 0 || !(b.radius > 0.0)) {
                           throw Error(ErrorCode::InvalidArgument, "ball needs a center and radius > 0");
                       }
                   },
                   [](const Interval& iv) {
                       if (!(iv.a < iv.b)) throw Error(ErrorCode::InvalidArgument, "interval needs a < b");
                   },
               },
               shape);
}

}  // namespace

DomainGeometry::DomainGeometry(Shape shape, double nonsmooth_tolerance, double boundary_tolerance)
    : DomainGeometry(std::vector<Shape>{std::move(shape)}, nonsmooth_tolerance, boundary_tolerance, 0) {}

DomainGeometry DomainGeometry::product(std::vector<Shape> factors, double nonsmooth_tolerance,
                                       double boundary_tolerance) {
    return DomainGeometry(std::move(factors), nonsmooth_tolerance, boundary_tolerance, 0);
}

DomainGeometry::DomainGeometry(std::vector<Shape> factors, double nonsmooth_tolerance,
                               double boundary_tolerance, int)
    : factors_(std::move(factors)),
      nonsmooth_tolerance_(nonsmooth_tolerance),
      boundary_tolerance_(boundary_tolerance) {
    if (factors_.empty()) throw Error(ErrorCode::InvalidArgument, "geometry needs at least one factor");
    if (!(nonsmooth_tolerance_ >= 0.0) || !(boundary_tolerance_ > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "tolerances must be nonnegative");
    }
    for (const auto& f : factors_) {
        validate_shape(f);
        offsets_.push_back(dim_);
        dim_ += shape_dim(f);
    }
}

int DomainGeometry::factor_dim(int j) const { return shape_dim(factors_.at(j)); }

double DomainGeometry::factor_signed_distance(int j, VectorCRef x) const {
    return shape_signed_distance(factors_[j], x.segment(offsets_[j], factor_dim(j)));
}

double DomainGeometry::signed_distance(VectorCRef x) const {
    if (factors_.size() == 1) return shape_signed_distance(factors_[0], x);
    double inside = kInf;
    double outside_sq = 0.0;
    double single = 0.0;
    int outside = 0;
    for (int j = 0; j < factor_count(); ++j) {
        const double phi = factor_signed_distance(j, x);
        if (phi < 0.0) {
            outside_sq += phi * phi;
            single = phi;
            ++outside;
        } else {
            inside = std::min(inside, phi);
        }
    }
    if (outside == 0) return inside;
    if (outside == 1) return single;
    return -std::sqrt(outside_sq);
}

Projection DomainGeometry::project_to_closure(VectorCRef y) const {
    Projection p;
    p.point.resize(dim_);
    for (int j = 0; j < factor_count(); ++j) {
        const int n = factor_dim(j);
        shape_project(factors_[j], y.segment(offsets_[j], n), p.point.segment(offsets_[j], n));
    }
    p.on_boundary = std::abs(signed_distance(p.point)) <= boundary_tolerance_;
    return p;
}

double DomainGeometry::distance_to_exceptional(VectorCRef x) const {
    double best = kInf;
    double s1 = kInf;
    double s2 = kInf;
    for (int j = 0; j < factor_count(); ++j) {
        const int n = factor_dim(j);
        best = std::min(best, shape_distance_to_exceptional(factors_[j], x.segment(offsets_[j], n)));
        const double a = std::abs(factor_signed_distance(j, x));
        if (a < s1) {
            s2 = s1;
            s1 = a;
        } else if (a < s2) {
            s2 = a;
        }
    }
    if (factor_count() >= 2) best = std::min(best, std::hypot(s1, s2));
    return best;
}

BoundaryClass DomainGeometry::classify(VectorCRef p) const {
    const double phi = signed_distance(p);
    if (phi > boundary_tolerance_) return BoundaryClass::interior;
    if (phi < -boundary_tolerance_) return BoundaryClass::exterior;
    if (distance_to_exceptional(p) <= nonsmooth_tolerance_) return BoundaryClass::exceptional;
    return BoundaryClass::smooth_boundary;
}

std::vector<int> DomainGeometry::factors_on_boundary(VectorCRef x) const {
    std::vector<int> out;
    for (int j = 0; j < factor_count(); ++j) {
        if (std::abs(factor_signed_distance(j, x)) <= boundary_tolerance_) out.push_back(j);
    }
    return out;
}

Vector DomainGeometry::outward_normal(VectorCRef p) const {
    if (classify(p) != BoundaryClass::smooth_boundary) {
        throw Error(ErrorCode::NotOnSmoothBoundary, "point is not on the smooth boundary part");
    }
    Vector nu = Vector::Zero(dim_);
    const auto on = factors_on_boundary(p);
    if (on.size() != 1) {
        throw Error(ErrorCode::NotOnSmoothBoundary, "point touches several factor boundaries");
    }
    const int j = on.front();
    const int n = factor_dim(j);
    shape_normal(factors_[j], p.segment(offsets_[j], n), boundary_tolerance_,
                 nu.segment(offsets_[j], n));
    return nu;
}

ParameterRange DomainGeometry::line_parameters_inside(VectorCRef y, VectorCRef direction) const {
    ParameterRange r;
    for (int j = 0; j < factor_count() && !r.empty(); ++j) {
        const int n = factor_dim(j);
        shape_clip_line(factors_[j], y.segment(offsets_[j], n), direction.segment(offsets_[j], n), r);
    }
    return r;
}

bool DomainGeometry::bounded() const {
    return std::none_of(factors_.begin(), factors_.end(),
                        [](const Shape& s) { return std::holds_alternative<HalfSpace>(s); });
}

std::pair<Vector, Vector> DomainGeometry::bounding_box() const {
    if (!bounded()) throw Error(ErrorCode::UnboundedDomain, "half-space factors cannot be bounded");
    Vector lo(dim_);
    Vector hi(dim_);
    for (int j = 0; j < factor_count(); ++j) {
        const int n = factor_dim(j);
        const int o = offsets_[j];
        std::visit(Overloaded{
                       [](const HalfSpace&) {},
                       [&](const Box& b) {
                           lo.segment(o, n) = b.lower;
                           hi.segment(o, n) = b.upper;
                       },
                       [&](const Ball& b) {
                           lo.segment(o, n) = b.center.array() - b.radius;
                           hi.segment(o, n) = b.center.array() + b.radius;
                       },
                       [&](const Interval& iv) {
                           lo[o] = iv.a;
                           hi[o] = iv.b;
                       },
                   },
                   factors_[j]);
    }
    return {lo, hi};
}

long LocalizationLadder::level(const DomainGeometry& geometry, VectorCRef x, double density) const {
    const double cap = static_cast<double>(max_level) + 1.0;
    double n = 1.0;
    n = std::max(n, density > 0.0 ? std::ceil(1.0 / density) : cap);
    const double exc = geometry.distance_to_exceptional(x);
    n = std::max(n, exc > 0.0 ? std::ceil(1.0 / exc) : cap);
    n = std::max(n, std::ceil(x.norm()));
    if (!(n < cap)) return max_level + 1;
    return static_cast<long>(n);
}

}  // namespace rsde
