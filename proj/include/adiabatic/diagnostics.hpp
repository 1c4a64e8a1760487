#pragma once

#include "adiabatic/operator_core.hpp"
#include "adiabatic/propagator.hpp"
#include "adiabatic/random_matrices.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adiabatic {

/// Unit vectors for strong-operator-topology metrics.
class TestVectorSet {
public:
	enum class Provenance { seeded_random, eigenvector, finite_support };

	TestVectorSet() = default;

	/// `count` normalized complex Gaussian vectors.
	static TestVectorSet seeded(Index dim, int count, Rng& rng);
	/// Orthonormal basis of one level of d.
	static TestVectorSet eigenvectors(const SpectralDecomposition& d, std::size_t level);
	/// Standard basis vectors e_i.
	static TestVectorSet basis(Index dim, const std::vector<Index>& indices);

	/// Throws std::invalid_argument unless ||v|| = 1 to 1e-12.
	void add(ComplexVector v, Provenance p, std::string id);
	void append(const TestVectorSet& other);

	std::size_t size() const noexcept { return vectors_.size(); }
	const ComplexVector& operator[](std::size_t i) const { return vectors_[i]; }
	Provenance provenance(std::size_t i) const { return provenance_[i]; }
	const std::string& id(std::size_t i) const { return ids_[i]; }

private:
	std::vector<ComplexVector> vectors_;
	std::vector<Provenance> provenance_;
	std::vector<std::string> ids_;
};

std::string to_string(TestVectorSet::Provenance p);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// One value per grid point and the sup over the grid.
struct SProfile {
	std::vector<double> s;
	std::vector<double> values;
	double sup = 0.0;
};

/// Per-vector profiles over s (values[v][k] at s[k]) and their sups.
struct VectorProfiles {
	std::vector<double> s;
	std::vector<std::vector<double>> values;
	std::vector<double> sup;
};

/// ||W(s) A W(s)^dagger - A||.
SProfile heisenberg_distance_norm(const PropagatorResult& result, const ComplexMatrix& a);

/// ||(W(s) A W(s)^dagger - A) psi|| per vector.
VectorProfiles heisenberg_distance_sot(
	const PropagatorResult& result, const ComplexMatrix& a, const TestVectorSet& vectors);

struct ResolventReport {
	SProfile profile;
	/// Constant of the bound sup <= C / ((Im z)^2 tau).
	double constant = 0.0;
	double bound = 0.0;
	bool within_bound = false;
};

/// ||W(s) (H_o - z)^{-1} W(s)^dagger - (H_o - z)^{-1}|| with the a-priori bound
/// using C = kappa_dot + 2 kappa max(1, kappa + |Im z|). Throws for real z.
ResolventReport resolvent_distance(const SpectralDecomposition& h0, const GeneratorPath& path,
	const PropagatorResult& result, Complex z);

/// Largest deviation over the grid between the two sides of
///   R(s) - W(s) R(0) W(s)^dagger = W(s) int_0^s W^dagger R' W dt W(s)^dagger,
/// R(s) = (H_o + Lambda(s)/tau - z)^{-1}, with the integral taken by the trapezoid
/// rule on the result grid.
double resolvent_identity_defect(const HermitianOperator& h0, const GeneratorPath& path,
	const PropagatorResult& result, Complex z);

struct OffDiagonalBlock {
	double p1_omega_p2 = 0.0;
	double p2_omega_p1 = 0.0;
	double max() const { return p1_omega_p2 > p2_omega_p1 ? p1_omega_p2 : p2_omega_p1; }
};

/// ||P1 Omega(t,s) P2|| and ||P2 Omega(t,s) P1|| with P1 = chi(H_o <= E1),
/// P2 = chi(H_o >= E2). Requires E2 > E1.
OffDiagonalBlock offdiagonal_block_decay(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e1, double e2, double t, double s);

/// Sup over grid points t >= s of offdiagonal_block_decay.
OffDiagonalBlock offdiagonal_block_sup(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e1, double e2, double s = 0.0);

struct EmbeddedReport {
	/// sup_s ||(1 - P) Omega(s,0) P psi||
	std::vector<double> leak;
	/// sup_s ||(W(s) P W(s)^dagger - P) psi||
	std::vector<double> projection_distance;
	/// ||P_band psi|| with P_band = chi(0 < |H_o - E| <= 1/sqrt(tau)).
	std::vector<double> band_weight;
	double band_halfwidth = 0.0;
	/// max over s and vectors of ||[P, Omega] psi|| - (||P Omega (1-P) psi|| + ||(1-P) Omega P psi||);
	/// nonpositive up to rounding.
	double decomposition_excess = 0.0;
};

/// Throws std::invalid_argument when E is not an eigenvalue of H_o.
EmbeddedReport embedded_eigenprojection_decay(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e, const TestVectorSet& vectors);

struct LimitReport {
	/// sup_s ||(Omega_tau(s,0) - Omega_inf(s)) psi|| per vector.
	std::vector<double> distance;
	/// sup_s ||R(s) psi|| exp(int ||Lambda||), where
	/// R(s) psi = D(s) psi + i int_0^s B(r) D(r) psi dr, B = sum_E P_E Lambda P_E and
	/// D = Omega_tau - Omega_inf. Gronwall gives distance <= envelope.
	std::vector<double> envelope;
};

/// omega_inf must share the result's grid.
LimitReport schrodinger_limit_distance(const SpectralDecomposition& h0, const GeneratorPath& path,
	const PropagatorResult& result, const Evolution& omega_inf, const TestVectorSet& vectors);

struct RateFit {
	double slope = 0.0;
	/// exp(intercept): value ~ constant * tau^slope.
	double constant = 0.0;
	/// RMS residual in log space.
	double residual = 0.0;
	std::size_t excluded = 0;
};

/// Least squares on (log tau, log value). Nonpositive values are excluded and
/// counted; throws std::invalid_argument with fewer than 3 distinct tau left.
RateFit rate_fit(const std::vector<std::pair<double, double>>& rows);

struct BoundCheck {
	double fitted_constant = 0.0;
	/// Largest value * tau / fitted_constant beyond the first decade.
	double worst_ratio = 0.0;
	std::size_t checked = 0;
	bool pass = false;
};

/// C = max value * tau over tau <= 10 tau_min, then value <= C / tau for larger tau.
BoundCheck decade_bound_check(const std::vector<std::pair<double, double>>& rows);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
	double tau;
	double s;
	std::string vector_id; ///< empty for norm metrics
	double value;
};

struct ConvergenceReport {
	std::string scenario;
	std::string metric;
	std::vector<ReportRow> rows;
	std::optional<RateFit> fit;
	std::optional<BoundCheck> bound;
	/// PASS, FAIL or INFO.
	std::string verdict = "INFO";
	std::map<std::string, double> tolerances;
	std::vector<std::string> notes;

	/// Throws std::invalid_argument on negative or non-finite values.
	void add(double tau, double s, std::string vector_id, double value);
	/// Sort rows by (tau, s, vector_id).
	void sort_rows();
};

void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const ConvergenceReport& report);

} // namespace adiabatic
