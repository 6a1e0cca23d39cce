#pragma once

#include <functional>
#include <string>

#include "rsde/types.hpp"

namespace rsde {

/// A C^2 function on the closure with analytic first and second derivatives.
struct TestFunction {
    std::string name;
    std::function<double(VectorCRef)> value;
    std::function<Vector(VectorCRef)> gradient;
    std::function<Matrix(VectorCRef)> hessian;
    /// Ladder level n with supp(u) inside K_n; 0 means the whole closure
    /// (only meaningful on bounded domains where every K_n-cutoff is inert).
    long support_level = 0;
    /// Claims (nu, A grad u) = 0 on the smooth boundary for every admissible A.
    bool neumann = false;
};

namespace test_functions {

TestFunction constant(int dim, double c);
/// u(x) = x[i].
TestFunction coordinate(int dim, int i);
/// u(x) = w . x.
TestFunction linear(const Vector& w);
/// u(x) = |x - c|^2.
TestFunction squared_distance(const Vector& center);
/// u(x) = x[i]^2 + x[j].
TestFunction square_plus_coordinate(int dim, int i, int j);
/// u(x) = exp(x[0]) * sin(x[1]).
TestFunction exp_sin(int dim);
/// u(x) = exp(w . x).
TestFunction exp_linear(const Vector& w);

/// Pointwise sum and product; the product is Neumann when either factor has
/// a gradient vanishing on the boundary together with its value.
TestFunction sum(const TestFunction& a, const TestFunction& b);
TestFunction product(const TestFunction& a, const TestFunction& b);

/// Neumann functions on a ball B(c, R), written with s = |x - c|^2 / R^2.
/// (1 - s)^2: gradient vanishes on the sphere, so (nu, A grad u) = 0 for any A.
TestFunction ball_bump(const Vector& center, double radius);
/// x[i] * (1 - s)^2.
TestFunction ball_bump_times_coordinate(const Vector& center, double radius, int i);
/// cos(pi s): radial with derivative sin(pi s) = 0 at s = 1.
TestFunction ball_cosine(const Vector& center, double radius);
/// (1 - s)^3: value, gradient and Hessian all vanish on the sphere.
TestFunction ball_flat_bump(const Vector& center, double radius);

}  // namespace test_functions

/// Worst relative mismatch between the analytic gradient/Hessian and central
/// differences of value/gradient at x.
double derivative_consistency_error(const TestFunction& u, VectorCRef x, double step = 1e-5);

}  // namespace rsde
