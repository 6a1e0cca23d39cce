#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rsde/types.hpp"

namespace rsde {

/// {x : x[axis] >= offset} in R^dim.
struct HalfSpace {
    int dim = 2;
    int axis = 0;
    double offset = 0.0;
};

/// Axis-aligned box. Faces are numbered 2*axis (lower side) and 2*axis+1
/// (upper side); faces listed in `excluded_faces` count as exceptional
/// boundary.
struct Box {
    Vector lower;
    Vector upper;
    std::vector<int> excluded_faces;
};

struct Ball {
    Vector center;
    double radius = 1.0;
};

/// [a, b] in one dimension.
struct Interval {
    double a = 0.0;
    double b = 1.0;
};

using Shape = std::variant<HalfSpace, Box, Ball, Interval>;

int shape_dim(const Shape& shape);
std::string shape_name(const Shape& shape);

enum class BoundaryClass { interior, smooth_boundary, exceptional, exterior };

std::string_view to_string(BoundaryClass c) noexcept;

struct Projection {
    Vector point;
    bool on_boundary = false;
};

/// Closed parameter range {delta : y - delta * direction in closure}. Empty
/// when lo > hi.
struct ParameterRange {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool empty() const { return lo > hi; }
};

/// State-space domain: a single analytic shape or a product of shapes (one
/// factor per particle). Immutable after construction.
///
/// The smooth boundary part consists of boundary points that are farther
/// than `nonsmooth_tolerance` from the exceptional set: box edges and
/// corners, excluded box faces, and for products every point where two or
/// more factors sit on their boundaries simultaneously.
class DomainGeometry {
public:
    explicit DomainGeometry(Shape shape, double nonsmooth_tolerance = 1e-6,
                            double boundary_tolerance = 1e-10);

    static DomainGeometry product(std::vector<Shape> factors, double nonsmooth_tolerance = 1e-6,
                                  double boundary_tolerance = 1e-10);

    int dim() const { return dim_; }
    int factor_count() const { return static_cast<int>(factors_.size()); }
    const Shape& factor(int j) const { return factors_.at(j); }
    int factor_offset(int j) const { return offsets_.at(j); }
    int factor_dim(int j) const;

    double nonsmooth_tolerance() const { return nonsmooth_tolerance_; }
    double boundary_tolerance() const { return boundary_tolerance_; }

    /// Positive inside, zero on the boundary, negative outside; equals the
    /// Euclidean distance to the boundary (inside) or to the closure (outside).
    double signed_distance(VectorCRef x) const;

    /// Signed distance of one factor block.
    double factor_signed_distance(int j, VectorCRef x) const;

    Projection project_to_closure(VectorCRef y) const;

    /// Throws NotOnSmoothBoundary unless classify(p) == smooth_boundary.
    Vector outward_normal(VectorCRef p) const;

    BoundaryClass classify(VectorCRef p) const;

    /// Distance from a closure point to the exceptional boundary set;
    /// +infinity when that set is empty.
    double distance_to_exceptional(VectorCRef x) const;

    /// Indices of factors whose block lies on the factor boundary.
    std::vector<int> factors_on_boundary(VectorCRef x) const;

    ParameterRange line_parameters_inside(VectorCRef y, VectorCRef direction) const;

    bool bounded() const;
    /// Axis-aligned bounding box; throws UnboundedDomain for unbounded shapes.
    std::pair<Vector, Vector> bounding_box() const;

private:
    DomainGeometry(std::vector<Shape> factors, double nonsmooth_tolerance,
                   double boundary_tolerance, int);

    std::vector<Shape> factors_;
    std::vector<int> offsets_;
    int dim_ = 0;
    double nonsmooth_tolerance_;
    double boundary_tolerance_;
};

/// Exhaustion of the admissible set by compacts K_n: x is in K_n when
/// rho(x) >= 1/n, the distance to the exceptional boundary is >= 1/n and
/// |x| <= n.
struct LocalizationLadder {
    long max_level = 1'000'000'000L;

    /// Smallest n >= 1 with x in K_n, saturating at max_level + 1.
    long level(const DomainGeometry& geometry, VectorCRef x, double density) const;
};

}  // namespace rsde
