#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "rsde/geometry.hpp"
#include "rsde/integrator.hpp"
#include "rsde/model.hpp"
#include "rsde/test_function.hpp"

namespace rsde {

using Series = std::vector<double>;
using PointFunction = std::function<double(VectorCRef)>;

/// Discrete Skorokhod decomposition of u(X) along one path:
/// u(X_t) - u(X_0) = N_t + M_t with N_t = n_dt - n_dl.
struct DecompositionRecord {
    Series u_values;
    Series n_dt;  ///< cumulative trapezoid int L u(X_s) ds
    Series n_dl;  ///< cumulative sum (A grad u, nu) rho (X) dl
    Series m_values;
    Series qv_estimate;

    /// max_k |u_k - u_0 - (n_dt_k - n_dl_k) - m_k|.
    double identity_residual() const;
};

/// Cumulative trapezoid integral of f(X_s) ds, frozen after the path dies.
/// Throws NonFiniteIntegrand.
Series integrate_dt(const PathSample& path, const PointFunction& f);

/// Cumulative sum of g(P_k) dl_k over reflection steps, with P_k the contact
/// point the pushback used (PathSample::contacts). Paths without recorded
/// contacts fall back to the post-step state X_{t_{k+1}}.
Series integrate_dlocaltime(const PathSample& path, const PointFunction& g);

struct DecomposeOptions {
    /// Multiplies the dl-integrand. -1 reproduces a wrong-sign fixture.
    double local_time_sign = 1.0;
};

DecompositionRecord decompose(const PathSample& path, const CoefficientField& field,
                              const DomainGeometry& geometry, const TestFunction& u,
                              const DecomposeOptions& options = {});

/// Running sum of squared increments.
Series quadratic_variation(const Series& s);

/// Polarized covariation 1/2 (QV(s1 + s2) - QV(s1) - QV(s2)). Throws
/// GridMismatch on different lengths.
Series covariation(const Series& s1, const Series& s2);

/// Quintic smoothstep: 0 below 0, 1 above 1, C^2 in between.
double smoothstep5(double s);

/// C^2 cutoff chi_n equal to 1 on K_{n+1} and vanishing outside U_{n+2},
/// built from the distance-to-exceptional-set, density and norm ramps.
double ladder_cutoff(const DomainGeometry& geometry, VectorCRef x, double density, long n);

/// One record per coordinate function x_i, localized by the ladder cutoff at
/// spec.ladder.max_level (identically 1 on every alive state). Uses b_i for
/// the dt part and (e_i, A nu) rho for the dl part.
std::vector<DecompositionRecord> coordinate_decomposition(const PathSample& path,
                                                          const CoefficientField& field,
                                                          const DomainGeometry& geometry,
                                                          const IntegratorSpec& spec,
                                                          const DecomposeOptions& options = {});

/// CSV with header t,u,n_dt,n_dl,m,qv.
void write_decomposition_csv(std::ostream& os, const DecompositionRecord& record, double step_size);

}  // namespace rsde
