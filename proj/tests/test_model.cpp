#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"

#include "rsde/error.hpp"
#include "rsde/model.hpp"

using namespace rsde;

namespace {

Vector v2(double a, double b) {
    Vector x(2);
    x << a, b;
    return x;
}

// Central-difference oracle for div A, independent of MatrixField::divergence.
Vector fd_divergence(const MatrixField& m, const Vector& x) {
    const int d = m.dim();
    Vector out = Vector::Zero(d);
    Matrix ap(d, d), am(d, d);
    const double e = 1e-5;
    for (int j = 0; j < d; ++j) {
        Vector xp = x, xm = x;
        xp[j] += e;
        xm[j] -= e;
        m.evaluate(xp, ap);
        m.evaluate(xm, am);
        for (int i = 0; i < d; ++i) out[i] += (ap(i, j) - am(i, j)) / (2 * e);
    }
    return out;
}

Vector fd_log_gradient(const DensityField& rho, const Vector& x) {
    Vector out(x.size());
    const double e = 1e-6;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        Vector xp = x, xm = x;
        xp[j] += e;
        xm[j] -= e;
        out[j] = (std::log(rho.value(xp)) - std::log(rho.value(xm))) / (2 * e);
    }
    return out;
}

}  // namespace

TEST_CASE("diagonal polynomial divergence matches differences") {
    Vector base(2), curv(2);
    base << 1.0, 2.0;
    curv << 0.5, 3.0;
    const DiagonalPolyMatrix m(base, curv);
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const Vector x = v2(u(eng), u(eng));
        Vector div(2);
        m.divergence(x, div);
        CHECK((div - fd_divergence(m, x)).norm() < 1e-7);
        CHECK(div[0] == doctest::Approx(2 * 0.5 * x[0]));
        CHECK(div[1] == doctest::Approx(2 * 3.0 * x[1]));
    }
}

TEST_CASE("density log gradients match differences of log rho") {
    const GaussianDensity g(v2(0.2, -0.1), 1.5);
    const ExponentialDensity e(v2(0.4, -2.0));
    const PairDensity p(std::make_shared<LennardJones>(1.0, 0.2, 0.5), 1.3, v2(0.0, 0.0));
    std::mt19937_64 eng(2);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    for (int i = 0; i < 50; ++i) {
        const Vector x = v2(u(eng), u(eng));
        Vector lg(2);
        g.log_gradient(x, lg);
        CHECK((lg - fd_log_gradient(g, x)).norm() < 1e-6);
        e.log_gradient(x, lg);
        CHECK((lg - fd_log_gradient(e, x)).norm() < 1e-6);
        if (x.norm() > 0.18 && std::abs(x.norm() - 0.5) > 1e-3) {
            p.log_gradient(x, lg);
            CHECK((lg - fd_log_gradient(p, x)).norm() < 1e-4 * (1.0 + lg.norm()));
        }
    }
}

TEST_CASE("lennard-jones reference values") {
    const LennardJones lj(1.0, 0.2);
    CHECK(lj.radial(0.2) == doctest::Approx(0.0).epsilon(1e-12));
    const double rmin = std::pow(2.0, 1.0 / 6.0) * 0.2;
    CHECK(lj.radial(rmin) == doctest::Approx(-1.0));
    CHECK(lj.radial_derivative(rmin) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lj.singular());

    const LennardJones cut(1.0, 0.2, 0.5, true);
    CHECK(cut.radial(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cut.radial(0.7) == 0.0);
    CHECK(cut.radial(0.3) == doctest::Approx(lj.radial(0.3) - lj.radial(0.5)));
    const LennardJones unshifted(1.0, 0.2, 0.5, false);
    CHECK(unshifted.radial(0.3) == doctest::Approx(lj.radial(0.3)));
}

TEST_CASE("radial potential gradient points along the displacement") {
    const SoftGaussianPotential s(2.0, 0.3);
    const Vector x = v2(0.1, 0.2);
    Vector g(2);
    s.gradient(x, g);
    const double r = x.norm();
    CHECK((g - s.radial_derivative(r) * x / r).norm() < 1e-12);
    const double e = 1e-6;
    CHECK(s.radial_derivative(r) == doctest::Approx((s.radial(r + e) - s.radial(r - e)) / (2 * e)).epsilon(1e-6));
}

TEST_CASE("drift is div A + A grad log rho") {
    Vector base(2), curv(2);
    base << 1.0, 2.0;
    curv << 0.5, 3.0;
    const CoefficientField f(std::make_shared<DiagonalPolyMatrix>(base, curv),
                             std::make_shared<GaussianDensity>(v2(0.0, 0.0), 1.0));
    const Vector x = v2(0.3, -0.4);
    Matrix a(2, 2);
    a << 1.0 + 0.5 * 0.09, 0.0, 0.0, 2.0 + 3.0 * 0.16;
    const Vector expect = v2(2 * 0.5 * 0.3, 2 * 3.0 * -0.4) + a * (-2.0 * x);
    CHECK((drift(f, x) - expect).norm() < 1e-12);
}

TEST_CASE("generator of a quadratic under constant coefficients") {
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const CoefficientField f(std::make_shared<ConstantMatrix>(a), std::make_shared<ExponentialDensity>(v2(1.0, -1.0)));
    const TestFunction u = test_functions::squared_distance(v2(0.0, 0.0));
    const Vector x = v2(0.2, 0.5);
    // tr(A H) + b . grad u with H = 2I, b = A w, grad u = 2x
    const double expect = 2.0 * a.trace() + (a * v2(1.0, -1.0)).dot(2.0 * x);
    CHECK(apply_generator(f, u, x) == doctest::Approx(expect));
}

TEST_CASE("density floor raises DensityVanishes") {
    const CoefficientField f(std::make_shared<ConstantMatrix>(Matrix::Identity(2, 2)),
                             std::make_shared<GaussianDensity>(v2(0.0, 0.0), 100.0));
    CHECK_THROWS_AS(drift(f, v2(3.0, 0.0), 1e-12), Error);
    CHECK_NOTHROW(drift(f, v2(0.1, 0.0), 1e-12));
}

TEST_CASE("cholesky factor reproduces A and rejects indefinite input") {
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const Matrix s = cholesky_factor(a);
    CHECK((s * s.transpose() - a).norm() < 1e-14);
    CHECK(s(0, 1) == 0.0);
    Matrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    try {
        cholesky_factor(bad);
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotPositiveDefinite);
    }
}

TEST_CASE("co-normal on the unit ball") {
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const CoefficientField f(std::make_shared<ConstantMatrix>(a), std::make_shared<UniformDensity>(2));
    const DomainGeometry g(Ball{Vector::Zero(2), 1.0});
    const Vector p = v2(0.6, 0.8);
    CHECK((co_normal(f, g, p) - a * p).norm() < 1e-14);
    // c . nu = rho nu^T A nu > 0 is what makes the pushback well defined
    CHECK(co_normal(f, g, p).dot(p) > 0.0);
}

TEST_CASE("validation accepts a good model and flags a bad one") {
    const DomainGeometry g(Ball{Vector::Zero(2), 1.0});
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 2.0;
    const CoefficientField good(std::make_shared<ConstantMatrix>(a),
                                std::make_shared<GaussianDensity>(v2(0.0, 0.0), 1.0));
    const ValidationReport r = validate(good, g, 2000);
    CHECK(r.ok());
    CHECK(r.min_eigenvalue == doctest::Approx(1.0));
    CHECK(r.max_eigenvalue == doctest::Approx(3.0));

    Vector base(2), curv(2);
    base << 1.0, -0.5;
    curv << 0.0, 0.0;
    const CoefficientField bad(std::make_shared<DiagonalPolyMatrix>(base, curv), std::make_shared<UniformDensity>(2));
    const ValidationReport rb = validate(bad, g, 500);
    CHECK_FALSE(rb.ellipticity_ok);
    CHECK_FALSE(rb.ok());
}
