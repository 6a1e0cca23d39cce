#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rsde/geometry.hpp"
#include "rsde/test_function.hpp"
#include "rsde/types.hpp"

namespace rsde {

/// Symmetric diffusion matrix field x -> A(x).
class MatrixField {
public:
    virtual ~MatrixField() = default;

    virtual int dim() const = 0;
    virtual void evaluate(VectorCRef x, MatrixRef out) const = 0;

    /// out[i] = sum_j d_j a_ij(x). The base version uses central differences
    /// with step cbrt(eps) * max(1, |x_j|).
    virtual void divergence(VectorCRef x, VectorRef out) const;

    /// True when A does not depend on x (lets callers cache factorizations).
    virtual bool is_constant() const { return false; }
};

/// Density x -> rho(x) >= 0 of the reference measure mu = rho dx. Never
/// normalized.
class DensityField {
public:
    virtual ~DensityField() = default;

    virtual int dim() const = 0;
    virtual double value(VectorCRef x) const = 0;

    /// grad(rho)/rho at a point with rho > 0. The base version differentiates
    /// log(rho) by central differences.
    virtual void log_gradient(VectorCRef x, VectorRef out) const;

    virtual bool is_constant() const { return false; }
};

class ConstantMatrix final : public MatrixField {
public:
    explicit ConstantMatrix(Matrix a);

    int dim() const override { return static_cast<int>(a_.rows()); }
    void evaluate(VectorCRef, MatrixRef out) const override { out = a_; }
    void divergence(VectorCRef, VectorRef out) const override { out.setZero(); }
    bool is_constant() const override { return true; }

private:
    Matrix a_;
};

/// a_ii(x) = base_i + curvature_i * x_i^2, off-diagonal entries zero.
class DiagonalPolyMatrix final : public MatrixField {
public:
    DiagonalPolyMatrix(Vector base, Vector curvature);

    int dim() const override { return static_cast<int>(base_.size()); }
    void evaluate(VectorCRef x, MatrixRef out) const override;
    void divergence(VectorCRef x, VectorRef out) const override;

private:
    Vector base_;
    Vector curvature_;
};

class UniformDensity final : public DensityField {
public:
    explicit UniformDensity(int dim) : dim_(dim) {}

    int dim() const override { return dim_; }
    double value(VectorCRef) const override { return 1.0; }
    void log_gradient(VectorCRef, VectorRef out) const override { out.setZero(); }
    bool is_constant() const override { return true; }

private:
    int dim_;
};

/// rho(x) = exp(-precision * |x - center|^2).
class GaussianDensity final : public DensityField {
public:
    GaussianDensity(Vector center, double precision);

    int dim() const override { return static_cast<int>(center_.size()); }
    double value(VectorCRef x) const override;
    void log_gradient(VectorCRef x, VectorRef out) const override;

private:
    Vector center_;
    double precision_;
};

/// rho(x) = exp(w . x).
class ExponentialDensity final : public DensityField {
public:
    explicit ExponentialDensity(Vector w) : w_(std::move(w)) {}

    int dim() const override { return static_cast<int>(w_.size()); }
    double value(VectorCRef x) const override;
    void log_gradient(VectorCRef, VectorRef out) const override { out = w_; }

private:
    Vector w_;
};

/// Pair interaction Phi(x) of a displacement vector x; +infinity allowed.
class PairPotential {
public:
    virtual ~PairPotential() = default;

    virtual std::string name() const = 0;
    virtual double value(VectorCRef displacement) const = 0;
    virtual void gradient(VectorCRef displacement, VectorRef out) const = 0;
    /// Whether Phi blows up at the origin.
    virtual bool singular() const { return false; }
};

/// Phi(x) = phi(|x|) for a radial profile phi.
class RadialPotential : public PairPotential {
public:
    virtual double radial(double r) const = 0;
    virtual double radial_derivative(double r) const = 0;

    double value(VectorCRef x) const override { return radial(x.norm()); }
    void gradient(VectorCRef x, VectorRef out) const override;
};

/// phi(r) = 4 eps ((s/r)^12 - (s/r)^6), optionally cut at r_c and shifted so
/// that phi(r_c) = 0.
class LennardJones final : public RadialPotential {
public:
    LennardJones(double epsilon, double sigma,
                 double cutoff = std::numeric_limits<double>::infinity(), bool shift = true);

    std::string name() const override { return "lennard_jones"; }
    double radial(double r) const override;
    double radial_derivative(double r) const override;
    bool singular() const override { return true; }

    double epsilon() const { return epsilon_; }
    double sigma() const { return sigma_; }
    double cutoff() const { return cutoff_; }

private:
    double bare(double r) const;

    double epsilon_;
    double sigma_;
    double cutoff_;
    double shift_ = 0.0;
};

/// Phi(x) = stiffness * |x|^2 / 2.
class HarmonicPotential final : public RadialPotential {
public:
    explicit HarmonicPotential(double stiffness) : k_(stiffness) {}

    std::string name() const override { return "harmonic"; }
    double radial(double r) const override { return 0.5 * k_ * r * r; }
    double radial_derivative(double r) const override { return k_ * r; }
    void gradient(VectorCRef x, VectorRef out) const override { out = k_ * x; }

private:
    double k_;
};

/// Phi(x) = height * exp(-|x|^2 / (2 width^2)); bounded, soft core.
class SoftGaussianPotential final : public RadialPotential {
public:
    SoftGaussianPotential(double height, double width) : height_(height), width_(width) {}

    std::string name() const override { return "soft_gaussian"; }
    double radial(double r) const override;
    double radial_derivative(double r) const override;
    void gradient(VectorCRef x, VectorRef out) const override;

private:
    double height_;
    double width_;
};

class ZeroPotential final : public PairPotential {
public:
    std::string name() const override { return "zero"; }
    double value(VectorCRef) const override { return 0.0; }
    void gradient(VectorCRef, VectorRef out) const override { out.setZero(); }
};

/// rho(x) = exp(-beta * Phi(x - anchor)): the density of a particle pair's
/// relative coordinate.
class PairDensity final : public DensityField {
public:
    PairDensity(std::shared_ptr<const PairPotential> potential, double beta, Vector anchor);

    int dim() const override { return static_cast<int>(anchor_.size()); }
    double value(VectorCRef x) const override;
    void log_gradient(VectorCRef x, VectorRef out) const override;

private:
    std::shared_ptr<const PairPotential> potential_;
    double beta_;
    Vector anchor_;
};

/// Coefficients at one point, filled by CoefficientField::evaluate without
/// allocating once the buffers are sized.
struct PointCoefficients {
    Matrix a;
    Vector divergence;
    Vector log_gradient;
    Vector drift;
    double density = 0.0;

    explicit PointCoefficients(int dim = 0);
};

/// A(x) together with rho(x) and everything derived from them.
class CoefficientField {
public:
    /// `integrability_exponent` is metadata (p >= 2, p > d/2); 0 picks
    /// max(2, floor(d/2) + 1).
    CoefficientField(std::shared_ptr<const MatrixField> matrix,
                     std::shared_ptr<const DensityField> density, double integrability_exponent = 0.0);

    int dim() const { return matrix_->dim(); }
    double integrability_exponent() const { return p_; }
    bool is_constant() const { return matrix_->is_constant() && density_->is_constant(); }

    const MatrixField& matrix_field() const { return *matrix_; }
    const DensityField& density_field() const { return *density_; }

    Matrix matrix(VectorCRef x) const;
    Vector matrix_divergence(VectorCRef x) const;
    double density(VectorCRef x) const { return density_->value(x); }
    Vector log_density_gradient(VectorCRef x) const;

    /// Fills A, rho and (when rho > density_floor) the drift. Returns false
    /// when rho <= density_floor; the drift is then left untouched.
    bool evaluate(VectorCRef x, PointCoefficients& out, double density_floor = 0.0) const;

private:
    std::shared_ptr<const MatrixField> matrix_;
    std::shared_ptr<const DensityField> density_;
    double p_;
};

/// b(x) = div A(x) + A(x) grad(rho)/rho (x). Throws DensityVanishes when
/// rho(x) <= density_floor.
Vector drift(const CoefficientField& field, VectorCRef x, double density_floor = 0.0);

/// sum a_ij d_i d_j u + sum b_j d_j u at x.
double apply_generator(const CoefficientField& field, const TestFunction& u, VectorCRef x,
                       double density_floor = 0.0);

/// Lower-triangular sigma with sigma sigma^T = a. Throws NotPositiveDefinite.
Matrix cholesky_factor(MatrixCRef a);

Matrix diffusion_factor(const CoefficientField& field, VectorCRef x);

/// rho(p) A(p) nu(p): the direction multiplying dl in the reflection term.
Vector co_normal(const CoefficientField& field, const DomainGeometry& geometry, VectorCRef p,
                 double density_floor = 0.0);

/// Smallest eigenvalue of A over the given points.
double ellipticity_probe(const CoefficientField& field, const std::vector<Vector>& points);

struct LevelProbe {
    long level = 0;
    std::size_t samples = 0;
    double min_eigenvalue = 0.0;
    /// Monte Carlo estimate of int_{K_n} (|grad rho| / rho)^p rho dx.
    double lp_integral = 0.0;
    bool lp_finite = false;
};

struct ValidationReport {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double symmetry_defect = 0.0;
    double min_density = 0.0;
    double matrix_modulus_coarse = 0.0;
    double matrix_modulus_fine = 0.0;
    double density_modulus_coarse = 0.0;
    double density_modulus_fine = 0.0;
    std::vector<LevelProbe> levels;

    bool ellipticity_ok = false;
    bool symmetry_ok = false;
    bool continuity_ok = false;
    bool density_ok = false;
    bool integrability_ok = false;

    bool ok() const {
        return ellipticity_ok && symmetry_ok && continuity_ok && density_ok && integrability_ok;
    }
};

struct ValidationOptions {
    int levels = 4;
    /// Sampling half-width used for unbounded domains (scaled by level).
    double unbounded_extent = 1.0;
    double coarse_step = 1e-3;
    double fine_step = 1e-4;
    std::uint64_t seed = 12345;
};

/// Sampled checks of symmetry, strict ellipticity, continuity, rho >= 0 and
/// local L^p integrability of grad(rho)/rho on the ladder compacts.
ValidationReport validate(const CoefficientField& field, const DomainGeometry& geometry,
                          std::size_t sample_budget, const ValidationOptions& options = {});

}  // namespace rsde
