#include "rsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rsde/error.hpp"

namespace rsde {
namespace {

double fd_step(double xi) {
    static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    return base * std::max(1.0, std::abs(xi));
}

}  // namespace

void MatrixField::divergence(VectorCRef x, VectorRef out) const {
    const int d = dim();
    Matrix ap(d, d);
    Matrix am(d, d);
    Vector xs = x;
    out.setZero();
    for (int j = 0; j < d; ++j) {
        const double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        evaluate(xs, ap);
        xs[j] = x[j] - h;
        evaluate(xs, am);
        xs[j] = x[j];
        out += (ap.col(j) - am.col(j)) / (2.0 * h);
    }
}

void DensityField::log_gradient(VectorCRef x, VectorRef out) const {
    const int d = dim();
    Vector xs = x;
    for (int j = 0; j < d; ++j) {
        const double h = fd_step(x[j]);
        xs[j] = x[j] + h;
        const double lp = std::log(value(xs));
        xs[j] = x[j] - h;
        const double lm = std::log(value(xs));
        xs[j] = x[j];
        out[j] = (lp - lm) / (2.0 * h);
    }
}

ConstantMatrix::ConstantMatrix(Matrix a) : a_(std::move(a)) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) {
        throw Error(ErrorCode::InvalidArgument, "constant matrix must be square and nonempty");
    }
}

DiagonalPolyMatrix::DiagonalPolyMatrix(Vector base, Vector curvature)
    : base_(std::move(base)), curvature_(std::move(curvature)) {
    if (base_.size() == 0 || base_.size() != curvature_.size()) {
        throw Error(ErrorCode::InvalidArgument, "diagonal_poly needs matching base and curvature");
    }
}

void DiagonalPolyMatrix::evaluate(VectorCRef x, MatrixRef out) const {
    out.setZero();
    for (Eigen::Index i = 0; i < base_.size(); ++i) out(i, i) = base_[i] + curvature_[i] * x[i] * x[i];
}

void DiagonalPolyMatrix::divergence(VectorCRef x, VectorRef out) const {
    out = 2.0 * curvature_.cwiseProduct(x);
}

GaussianDensity::GaussianDensity(Vector center, double precision)
    : center_(std::move(center)), precision_(precision) {
    if (!(precision_ >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian precision must be >= 0");
}

double GaussianDensity::value(VectorCRef x) const {
    return std::exp(-precision_ * (x - center_).squaredNorm());
}

void GaussianDensity::log_gradient(VectorCRef x, VectorRef out) const {
    out = -2.0 * precision_ * (x - center_);
}

double ExponentialDensity::value(VectorCRef x) const { return std::exp(w_.dot(x)); }

void RadialPotential::gradient(VectorCRef x, VectorRef out) const {
    const double r = x.norm();
    if (r == 0.0) {
        out.setConstant(singular() ? std::numeric_limits<double>::infinity() : 0.0);
        return;
    }
    out = (radial_derivative(r) / r) * x;
}

LennardJones::LennardJones(double epsilon, double sigma, double cutoff, bool shift)
    : epsilon_(epsilon), sigma_(sigma), cutoff_(cutoff) {
    if (!(epsilon_ > 0.0) || !(sigma_ > 0.0) || !(cutoff_ > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "Lennard-Jones parameters must be positive");
    }
    if (shift && std::isfinite(cutoff_)) shift_ = bare(cutoff_);
}

double LennardJones::bare(double r) const {
    const double s6 = std::pow(sigma_ / r, 6);
    return 4.0 * epsilon_ * (s6 * s6 - s6);
}

double LennardJones::radial(double r) const {
    if (r >= cutoff_) return 0.0;
    if (r == 0.0) return std::numeric_limits<double>::infinity();
    return bare(r) - shift_;
}

double LennardJones::radial_derivative(double r) const {
    if (r >= cutoff_) return 0.0;
    const double s6 = std::pow(sigma_ / r, 6);
    return 4.0 * epsilon_ * (-12.0 * s6 * s6 + 6.0 * s6) / r;
}

double SoftGaussianPotential::radial(double r) const {
    return height_ * std::exp(-r * r / (2 * width_ * width_));
}

double SoftGaussianPotential::radial_derivative(double r) const {
    return -r / (width_ * width_) * radial(r);
}

void SoftGaussianPotential::gradient(VectorCRef x, VectorRef out) const {
    out = (-radial(x.norm()) / (width_ * width_)) * x;
}

PairDensity::PairDensity(std::shared_ptr<const PairPotential> potential, double beta, Vector anchor)
    : potential_(std::move(potential)), beta_(beta), anchor_(std::move(anchor)) {
    if (!potential_ || !(beta_ > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "pair density needs a potential and beta > 0");
    }
}

double PairDensity::value(VectorCRef x) const {
    return std::exp(-beta_ * potential_->value(x - anchor_));
}

void PairDensity::log_gradient(VectorCRef x, VectorRef out) const {
    potential_->gradient(x - anchor_, out);
    out *= -beta_;
}

PointCoefficients::PointCoefficients(int dim)
    : a(dim, dim), divergence(dim), log_gradient(dim), drift(dim) {}

CoefficientField::CoefficientField(std::shared_ptr<const MatrixField> matrix,
                                   std::shared_ptr<const DensityField> density,
                                   double integrability_exponent)
    : matrix_(std::move(matrix)), density_(std::move(density)), p_(integrability_exponent) {
    if (!matrix_ || !density_) throw Error(ErrorCode::InvalidArgument, "field needs matrix and density");
    if (matrix_->dim() != density_->dim()) {
        throw Error(ErrorCode::InvalidArgument, "matrix and density dimensions differ");
    }
    if (p_ == 0.0) p_ = std::max(2.0, std::floor(dim() / 2.0) + 1.0);
    if (p_ < 2.0 || p_ <= dim() / 2.0) {
        throw Error(ErrorCode::InvalidArgument, "integrability exponent needs p >= 2 and p > d/2");
    }
}

Matrix CoefficientField::matrix(VectorCRef x) const {
    Matrix a(dim(), dim());
    matrix_->evaluate(x, a);
    return a;
}

Vector CoefficientField::matrix_divergence(VectorCRef x) const {
    Vector v(dim());
    matrix_->divergence(x, v);
    return v;
}

Vector CoefficientField::log_density_gradient(VectorCRef x) const {
    Vector v(dim());
    density_->log_gradient(x, v);
    return v;
}

bool CoefficientField::evaluate(VectorCRef x, PointCoefficients& out, double density_floor) const {
    out.density = density_->value(x);
    matrix_->evaluate(x, out.a);
    if (!(out.density > density_floor)) return false;
    matrix_->divergence(x, out.divergence);
    density_->log_gradient(x, out.log_gradient);
    out.drift.noalias() = out.a * out.log_gradient;
    out.drift += out.divergence;
    return true;
}

Vector drift(const CoefficientField& field, VectorCRef x, double density_floor) {
    PointCoefficients c(field.dim());
    if (!field.evaluate(x, c, density_floor)) {
        throw Error(ErrorCode::DensityVanishes, "rho(x) is at or below the density floor");
    }
    return c.drift;
}

double apply_generator(const CoefficientField& field, const TestFunction& u, VectorCRef x,
                       double density_floor) {
    PointCoefficients c(field.dim());
    if (!field.evaluate(x, c, density_floor)) {
        throw Error(ErrorCode::DensityVanishes, "rho(x) is at or below the density floor");
    }
    const Matrix h = u.hessian(x);
    return c.a.cwiseProduct(h).sum() + c.drift.dot(u.gradient(x));
}

Matrix cholesky_factor(MatrixCRef a) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "diffusion matrix is not positive definite");
    }
    return llt.matrixL();
}

Matrix diffusion_factor(const CoefficientField& field, VectorCRef x) {
    return cholesky_factor(field.matrix(x));
}

Vector co_normal(const CoefficientField& field, const DomainGeometry& geometry, VectorCRef p,
                 double density_floor) {
    const Vector nu = geometry.outward_normal(p);
    const double rho = field.density(p);
    if (!(rho > density_floor)) {
        throw Error(ErrorCode::DensityVanishes, "rho vanishes at the boundary point");
    }
    return rho * (field.matrix(p) * nu);
}

double ellipticity_probe(const CoefficientField& field, const std::vector<Vector>& points) {
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& x : points) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(field.matrix(x), Eigen::EigenvaluesOnly);
        gamma = std::min(gamma, es.eigenvalues().minCoeff());
    }
    return gamma;
}

ValidationReport validate(const CoefficientField& field, const DomainGeometry& geometry,
                          std::size_t sample_budget, const ValidationOptions& options) {
    const int d = field.dim();
    if (d != geometry.dim()) throw Error(ErrorCode::InvalidArgument, "field and geometry dimensions differ");
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vector lo;
    Vector hi;
    if (geometry.bounded()) {
        std::tie(lo, hi) = geometry.bounding_box();
    } else {
        const double ext = options.unbounded_extent * options.levels;
        lo = Vector::Constant(d, -ext);
        hi = Vector::Constant(d, ext);
    }
    const double box_volume = (hi - lo).prod();
    const LocalizationLadder ladder;
    const double p = field.integrability_exponent();

    ValidationReport rep;
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
    rep.min_density = std::numeric_limits<double>::infinity();
    rep.levels.resize(options.levels);
    std::vector<double> lp_sum(options.levels, 0.0);
    for (int n = 0; n < options.levels; ++n) {
        rep.levels[n].level = n + 1;
        rep.levels[n].min_eigenvalue = std::numeric_limits<double>::infinity();
    }

    Matrix a(d, d);
    Matrix b(d, d);
    Vector lg(d);
    Vector x(d);
    Vector y(d);
    bool density_finite = true;
    double a_scale = 0.0;
    double rho_scale = 0.0;
    std::size_t accepted = 0;
    for (std::size_t s = 0; s < sample_budget; ++s) {
        for (int i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unif(rng);
        if (geometry.signed_distance(x) < 0.0) continue;
        ++accepted;
        field.matrix_field().evaluate(x, a);
        a_scale = std::max(a_scale, a.cwiseAbs().maxCoeff());
        rep.symmetry_defect = std::max(rep.symmetry_defect, (a - a.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);
        rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());
        const double rho = field.density(x);
        if (!std::isfinite(rho) || rho < 0.0) density_finite = false;
        rep.min_density = std::min(rep.min_density, rho);
        rho_scale = std::max(rho_scale, std::abs(rho));

        const long level = ladder.level(geometry, x, rho);
        if (rho > 0.0 && level <= options.levels) {
            field.density_field().log_gradient(x, lg);
            const double integrand = std::pow(lg.norm(), p) * rho;
            for (long n = level; n <= options.levels; ++n) {
                auto& probe = rep.levels[n - 1];
                ++probe.samples;
                probe.min_eigenvalue = std::min(probe.min_eigenvalue, lmin);
                lp_sum[n - 1] += integrand;
            }
        }

        // Continuity moduli along a random direction.
        Vector dir(d);
        for (int i = 0; i < d; ++i) dir[i] = gauss(rng);
        dir.normalize();
        for (int k = 0; k < 2; ++k) {
            const double eps = (k == 0) ? options.coarse_step : options.fine_step;
            y = x + eps * dir;
            if (geometry.signed_distance(y) < 0.0) y = x - eps * dir;
            if (geometry.signed_distance(y) < 0.0) continue;
            field.matrix_field().evaluate(y, b);
            const double dm = (a - b).cwiseAbs().maxCoeff();
            const double dr = std::abs(rho - field.density(y));
            if (k == 0) {
                rep.matrix_modulus_coarse = std::max(rep.matrix_modulus_coarse, dm);
                rep.density_modulus_coarse = std::max(rep.density_modulus_coarse, dr);
            } else {
                rep.matrix_modulus_fine = std::max(rep.matrix_modulus_fine, dm);
                rep.density_modulus_fine = std::max(rep.density_modulus_fine, dr);
            }
        }
    }
    if (accepted == 0) throw Error(ErrorCode::InvalidArgument, "no validation sample fell inside the domain");

    const double n_total = static_cast<double>(sample_budget);
    rep.integrability_ok = true;
    for (int n = 0; n < options.levels; ++n) {
        auto& probe = rep.levels[n];
        probe.lp_integral = box_volume * lp_sum[n] / n_total;
        probe.lp_finite = std::isfinite(probe.lp_integral);
        rep.integrability_ok = rep.integrability_ok && probe.lp_finite;
    }

    rep.ellipticity_ok = rep.min_eigenvalue > 0.0;
    rep.symmetry_ok = rep.symmetry_defect <= 1e-14 * std::max(1.0, a_scale);
    const double ratio = options.fine_step / options.coarse_step;
    // A continuous field's modulus shrinks with the probe distance; a jump
    // keeps it flat.
    auto shrinks = [&](double coarse, double fine, double scale) {
        return fine <= std::max(0.5, 5.0 * ratio) * coarse + 1e-12 * std::max(1.0, scale);
    };
    rep.continuity_ok = shrinks(rep.matrix_modulus_coarse, rep.matrix_modulus_fine, a_scale) &&
                        shrinks(rep.density_modulus_coarse, rep.density_modulus_fine, rho_scale);
    rep.density_ok = density_finite && rep.min_density >= 0.0;
    return rep;
}

}  // namespace rsde
