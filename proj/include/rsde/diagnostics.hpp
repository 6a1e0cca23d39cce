#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rsde/functionals.hpp"
#include "rsde/geometry.hpp"
#include "rsde/integrator.hpp"
#include "rsde/model.hpp"
#include "rsde/test_function.hpp"

namespace rsde {

using Ensemble = std::vector<PathSample>;

enum class RuleKind {
    /// |estimate - reference| <= z_max * stderr + relative * |reference| + absolute
    z_band,
    /// estimate == reference
    exact_zero,
    /// estimate <= absolute
    upper_bound,
    /// estimate >= absolute
    lower_bound,
};

struct PassRule {
    RuleKind kind = RuleKind::z_band;
    double z_max = 3.0;
    double relative = 0.0;
    double absolute = 0.0;

    bool evaluate(double estimate, double std_error, double reference) const;
    std::string describe() const;
};

struct Budget {
    std::size_t n_paths = 0;
    double step_size = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
};

struct Parameter {
    std::string key;
    std::variant<double, std::string> value;
};

struct StatTestReport {
    std::string name;
    std::vector<Parameter> parameters;
    double estimate = 0.0;
    double std_error = 0.0;
    double reference = 0.0;
    double z_score = 0.0;
    bool pass = false;
    PassRule rule;
    Budget budget;

    /// Recomputes pass from the stored fields.
    bool rederive() const { return rule.evaluate(estimate, std_error, reference); }
};

/// Fills z_score and pass from estimate, std_error, reference and rule.
/// z is 0 when estimate == reference and +-inf when std_error is 0 otherwise.
void finalize(StatTestReport& report);

struct MeanStat {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Sample mean with standard error sd / sqrt(n) (0 for n < 2).
MeanStat mean_stat(const std::vector<double>& xs);

/// Grid index of time t on a path with step h. Throws InvalidArgument when t
/// is not (within 1e-9 h) on the grid or beyond the last index.
std::size_t checkpoint_index(const PathSample& path, double t);

struct MartingaleOptions {
    DecomposeOptions decompose;
    unsigned threads = 1;
};

/// Per checkpoint: mean of M^[u]_t over paths alive at t against 0, |z| <= 3.
/// Killed paths are excluded and reported as parameter "excluded".
std::vector<StatTestReport> martingale_test(const Ensemble& ensemble, const CoefficientField& field,
                                            const DomainGeometry& geometry, const TestFunction& u,
                                            const std::vector<double>& checkpoints,
                                            const MartingaleOptions& options = {});

/// Ensemble mean of the discrete QV of M^[u] at t against the mean of
/// 2 int (A grad u, grad u) ds; stderr from paired differences; 5% + 3 SE.
StatTestReport qv_test(const Ensemble& ensemble, const CoefficientField& field, const DomainGeometry& geometry,
                       const TestFunction& u, double t, const MartingaleOptions& options = {});

/// Covariation of the coordinate martingales M^(i), M^(j) at t against
/// 2 int a_ij ds; 5% + 3 SE.
StatTestReport covariation_test(const Ensemble& ensemble, const CoefficientField& field,
                                const DomainGeometry& geometry, const IntegratorSpec& spec, int i, int j, double t,
                                const MartingaleOptions& options = {});

struct SupportOptions {
    /// Distance multiplier in units of sqrt(h). Defaults to 3 sqrt(gamma_max)
    /// with gamma_max the largest eigenvalue of A over the reflection states.
    std::optional<double> c_sup;
};

/// Sum of dl booked at states farther than C_sup sqrt(h) from the smooth
/// boundary. Passes iff exactly 0.
StatTestReport local_time_support_test(const Ensemble& ensemble, const CoefficientField& field,
                                       const DomainGeometry& geometry, const SupportOptions& options = {});

/// Binned occupation counts over the bounding box of a bounded domain.
class OccupationHistogram {
public:
    /// Throws UnboundedDomain for unbounded domains and InvalidArgument for
    /// dim > 3 or bins < 1.
    OccupationHistogram(const DomainGeometry& geometry, int bins_per_axis);

    void add(VectorCRef x);
    /// Adds states with index >= burn_in_fraction * (K + 1) while alive.
    void add_path(const PathSample& path, double burn_in_fraction);

    int dim() const { return dim_; }
    int bins_per_axis() const { return bins_; }
    std::size_t cell_count() const { return counts_.size(); }
    std::size_t total() const { return total_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    std::size_t cell_index(VectorCRef x) const;

private:
    int dim_;
    int bins_;
    Vector lower_;
    Vector upper_;
    std::vector<std::uint64_t> counts_;
    std::size_t total_ = 0;
};

/// Cell probabilities of rho / int rho over the histogram cells, by tensor
/// Gauss-Legendre quadrature restricted to the closure of the domain.
std::vector<double> reference_cell_masses(const OccupationHistogram& hist, const DomainGeometry& geometry,
                                          const DensityField& density, int quadrature_order = 8);

struct StationarityOptions {
    double tolerance = 0.05;
    int quadrature_order = 8;
};

/// Total-variation distance between the occupation frequencies and the
/// normalized density; passes iff TV <= tolerance.
StatTestReport stationarity_test(const OccupationHistogram& hist, const DomainGeometry& geometry,
                                 const DensityField& density, const Budget& budget,
                                 const StationarityOptions& options = {});

/// Reconstructs dW_k = sigma(X_k)^{-1} (dX_k - b_h(X_k) h) / sqrt 2 on steps
/// that start deeper than 8 sqrt(2 h tr A) inside the domain and do not reflect,
/// and tests: mean 0 (|z| <= 3) and variance h (5% + 3 SE)
/// per coordinate, zero cross-covariance (|z| <= 3) and zero excess kurtosis
/// per coordinate (|z| <= 3 with SE sqrt(24 / n)). Throws SingularSigma.
std::vector<StatTestReport> brownian_reconstruction_test(const Ensemble& ensemble, const CoefficientField& field,
                                                         const DomainGeometry& geometry,
                                                         const IntegratorSpec& spec);

enum class Wall { lower, upper, both };

/// u = U_alpha(surface measure at the charged wall) on a uniform grid.
struct PotentialTable {
    double alpha = 0.0;
    Wall wall = Wall::lower;
    std::vector<double> x;
    std::vector<double> u;

    bool empty() const { return x.empty(); }
    /// Piecewise-linear interpolation; throws OracleMissing outside the grid.
    double operator()(double at) const;
    double max_value() const;
};

struct OracleOptions {
    std::size_t cells = 20000;
    /// Length of the truncated half-line; 0 picks 40 / sqrt(alpha / a_max).
    double truncation = 0.0;
};

/// Solves alpha rho u - (a rho u')' = 0 with flux a rho u' = -1 at a charged
/// lower wall, +1 at a charged upper wall and 0 otherwise, by a conservative
/// second-order finite-volume scheme. The geometry is an Interval or a 1D
/// HalfSpace (truncated; the far end is a no-flux boundary). The solution
/// equals E_x int_0^inf e^{-alpha s} dl_s for the simulated process, whose
/// generator rho^{-1} (a rho u')' is the one of the gradient form.
/// Throws SolverFailure on non-elliptic input or a singular system.
PotentialTable potential_oracle_1d(double alpha, const DomainGeometry& geometry, const CoefficientField& field,
                                   Wall wall, const OracleOptions& options = {});

enum class RevuzEstimator {
    /// sum e^{-alpha t_{k+1}} dl_k up to T_max = ln(1e6) / alpha.
    truncated,
    /// sum dl_k over t_{k+1} <= tau with tau ~ Exp(alpha) independent of the
    /// path; same expectation, cost proportional to 1 / alpha.
    exponential_killing,
};

struct RevuzOptions {
    std::size_t n_paths = 10000;
    double step_size = 1e-4;
    std::uint64_t seed = 0;
    RevuzEstimator estimator = RevuzEstimator::exponential_killing;
    unsigned threads = 1;
    double relative_margin = 0.05;
    /// Scales each dl before booking. -1 is the wrong-sign fixture.
    double local_time_sign = 1.0;
};

/// Per-path samples of the discounted wall local time from x0.
std::vector<double> revuz_samples(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                                  double alpha, Wall wall, const RevuzOptions& options);

/// MC estimate of E_x0 int e^{-alpha s} dl_s (wall contacts only) against the
/// oracle u(x0); passes with 5% + 3 SE + 1e-6 max u.
/// Throws OracleMissing for a missing table or mismatched alpha / wall.
StatTestReport revuz_check(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                           double alpha, const PotentialTable* oracle, const RevuzOptions& options);

struct BiasLadderLevel {
    double step_size = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double bias = 0.0;  ///< estimate - reference
};

struct BiasLadderReport {
    double reference = 0.0;
    std::vector<BiasLadderLevel> levels;  ///< coarse to fine
    /// bias(h) / bias(h / 2) per adjacent pair.
    std::vector<double> ratios;
    /// Same ratio from coupled differences (est(h) - est(h/2)) / (est(h/2) - est(h/4)).
    std::optional<double> difference_ratio;
    std::optional<double> difference_ratio_se;
    bool monotone = false;
    bool pass = false;
    std::vector<StatTestReport> reports;
};

struct BiasLadderOptions {
    std::size_t n_paths = 20000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    /// Accepted band for each bias ratio around sqrt 2.
    double ratio_lo = 1.06;
    double ratio_hi = 1.77;
};

/// Runs the Revuz estimator at h, h/2, h/4 (coarsest first) on coupled paths
/// (shared Brownian increments and killing time) and checks that the bias
/// against the oracle shrinks monotonically by about sqrt 2 per halving.
BiasLadderReport revuz_bias_ladder(const CoefficientField& field, const DomainGeometry& geometry, double x0,
                                   double alpha, const PotentialTable& oracle, double coarse_step,
                                   const BiasLadderOptions& options = {});

/// JSON array of reports (name, params, estimate, stderr, reference, z, pass,
/// rule, budget).
void write_reports_json(std::ostream& os, const std::vector<StatTestReport>& reports);
/// One line per report.
void write_reports_text(std::ostream& os, const std::vector<StatTestReport>& reports);

}  // namespace rsde
