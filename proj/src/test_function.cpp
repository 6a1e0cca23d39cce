#include "rsde/test_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rsde {
namespace test_functions {

TestFunction constant(int dim, double c) {
    return {"constant",
            [c](VectorCRef) { return c; },
            [dim](VectorCRef) { return Vector(Vector::Zero(dim)); },
            [dim](VectorCRef) { return Matrix(Matrix::Zero(dim, dim)); },
            0,
            true};
}

TestFunction coordinate(int dim, int i) {
    Vector w = Vector::Zero(dim);
    w[i] = 1.0;
    TestFunction u = linear(w);
    u.name = "x" + std::to_string(i + 1);
    return u;
}

TestFunction linear(const Vector& w) {
    const auto dim = w.size();
    return {"linear",
            [w](VectorCRef x) { return w.dot(x); },
            [w](VectorCRef) { return w; },
            [dim](VectorCRef) { return Matrix(Matrix::Zero(dim, dim)); },
            0,
            false};
}

TestFunction squared_distance(const Vector& center) {
    const auto dim = center.size();
    return {"squared_distance",
            [center](VectorCRef x) { return (x - center).squaredNorm(); },
            [center](VectorCRef x) { return Vector(2.0 * (x - center)); },
            [dim](VectorCRef) { return Matrix(2.0 * Matrix::Identity(dim, dim)); },
            0,
            false};
}

TestFunction square_plus_coordinate(int dim, int i, int j) {
    return {"square_plus_coordinate",
            [i, j](VectorCRef x) { return x[i] * x[i] + x[j]; },
            [dim, i, j](VectorCRef x) {
                Vector g = Vector::Zero(dim);
                g[i] += 2.0 * x[i];
                g[j] += 1.0;
                return g;
            },
            [dim, i](VectorCRef) {
                Matrix h = Matrix::Zero(dim, dim);
                h(i, i) = 2.0;
                return h;
            },
            0,
            false};
}

TestFunction exp_sin(int dim) {
    return {"exp_sin",
            [](VectorCRef x) { return std::exp(x[0]) * std::sin(x[1]); },
            [dim](VectorCRef x) {
                Vector g = Vector::Zero(dim);
                const double e = std::exp(x[0]);
                g[0] = e * std::sin(x[1]);
                g[1] = e * std::cos(x[1]);
                return g;
            },
            [dim](VectorCRef x) {
                Matrix h = Matrix::Zero(dim, dim);
                const double e = std::exp(x[0]);
                h(0, 0) = e * std::sin(x[1]);
                h(0, 1) = h(1, 0) = e * std::cos(x[1]);
                h(1, 1) = -e * std::sin(x[1]);
                return h;
            },
            0,
            false};
}

namespace {

// Radial profile f(s), s = |x - c|^2 / R^2, with f' and f''.
struct Radial {
    std::function<double(double)> f, df, ddf;
};

TestFunction radial(std::string name, const Vector& center, double radius, Radial p) {
    const double inv_r2 = 1.0 / (radius * radius);
    const auto dim = center.size();
    return {std::move(name),
            [=](VectorCRef x) { return p.f((x - center).squaredNorm() * inv_r2); },
            [=](VectorCRef x) {
                const Vector w = x - center;
                return Vector(2.0 * inv_r2 * p.df(w.squaredNorm() * inv_r2) * w);
            },
            [=](VectorCRef x) {
                const Vector w = x - center;
                const double s = w.squaredNorm() * inv_r2;
                Matrix h = 2.0 * inv_r2 * p.df(s) * Matrix::Identity(dim, dim);
                h += 4.0 * inv_r2 * inv_r2 * p.ddf(s) * (w * w.transpose());
                return h;
            },
            0,
            true};
}

}  // namespace

TestFunction ball_bump(const Vector& center, double radius) {
    return radial("ball_bump", center, radius,
                  {[](double s) { return (1 - s) * (1 - s); }, [](double s) { return -2 * (1 - s); },
                   [](double) { return 2.0; }});
}

TestFunction ball_cosine(const Vector& center, double radius) {
    constexpr double pi = std::numbers::pi;
    return radial("ball_cosine", center, radius,
                  {[](double s) { return std::cos(pi * s); }, [](double s) { return -pi * std::sin(pi * s); },
                   [](double s) { return -pi * pi * std::cos(pi * s); }});
}

TestFunction ball_flat_bump(const Vector& center, double radius) {
    return radial("ball_flat_bump", center, radius,
                  {[](double s) { return (1 - s) * (1 - s) * (1 - s); },
                   [](double s) { return -3 * (1 - s) * (1 - s); }, [](double s) { return 6 * (1 - s); }});
}

TestFunction exp_linear(const Vector& w) {
    return {"exp_linear",
            [w](VectorCRef x) { return std::exp(w.dot(x)); },
            [w](VectorCRef x) { return Vector(std::exp(w.dot(x)) * w); },
            [w](VectorCRef x) { return Matrix(std::exp(w.dot(x)) * (w * w.transpose())); },
            0,
            false};
}

TestFunction sum(const TestFunction& a, const TestFunction& b) {
    TestFunction u;
    u.name = a.name + "+" + b.name;
    u.value = [a, b](VectorCRef x) { return a.value(x) + b.value(x); };
    u.gradient = [a, b](VectorCRef x) { return Vector(a.gradient(x) + b.gradient(x)); };
    u.hessian = [a, b](VectorCRef x) { return Matrix(a.hessian(x) + b.hessian(x)); };
    u.support_level = std::max(a.support_level, b.support_level);
    u.neumann = a.neumann && b.neumann;
    return u;
}

TestFunction product(const TestFunction& a, const TestFunction& b) {
    TestFunction u;
    u.name = a.name + "*" + b.name;
    u.value = [a, b](VectorCRef x) { return a.value(x) * b.value(x); };
    u.gradient = [a, b](VectorCRef x) { return Vector(a.value(x) * b.gradient(x) + b.value(x) * a.gradient(x)); };
    u.hessian = [a, b](VectorCRef x) {
        const Vector ga = a.gradient(x);
        const Vector gb = b.gradient(x);
        return Matrix(a.value(x) * b.hessian(x) + b.value(x) * a.hessian(x) + ga * gb.transpose() +
                      gb * ga.transpose());
    };
    u.support_level = std::max(a.support_level, b.support_level);
    u.neumann = a.neumann && b.neumann;
    return u;
}

TestFunction ball_bump_times_coordinate(const Vector& center, double radius, int i) {
    const TestFunction bump = ball_bump(center, radius);
    const auto dim = center.size();
    TestFunction u;
    u.name = "ball_bump_x" + std::to_string(i + 1);
    u.value = [bump, i](VectorCRef x) { return x[i] * bump.value(x); };
    u.gradient = [bump, i](VectorCRef x) {
        Vector g = x[i] * bump.gradient(x);
        g[i] += bump.value(x);
        return g;
    };
    u.hessian = [bump, i, dim](VectorCRef x) {
        Matrix h = x[i] * bump.hessian(x);
        const Vector g = bump.gradient(x);
        Vector e = Vector::Zero(dim);
        e[i] = 1.0;
        h += e * g.transpose() + g * e.transpose();
        return h;
    };
    u.neumann = true;
    return u;
}

}  // namespace test_functions

double derivative_consistency_error(const TestFunction& u, VectorCRef x, double step) {
    const auto d = x.size();
    const Vector g = u.gradient(x);
    const Matrix h = u.hessian(x);
    double worst = 0.0;
    Vector xp = x;
    Vector xm = x;
    for (Eigen::Index i = 0; i < d; ++i) {
        xp = x;
        xm = x;
        xp[i] += step;
        xm[i] -= step;
        const double fd = (u.value(xp) - u.value(xm)) / (2 * step);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
        const Vector fdg = (u.gradient(xp) - u.gradient(xm)) / (2 * step);
        for (Eigen::Index j = 0; j < d; ++j) {
            worst = std::max(worst, std::abs(fdg[j] - h(j, i)) / std::max(1.0, std::abs(h(j, i))));
        }
    }
    return worst;
}

}  // namespace rsde
