#pragma once

#include "adiabatic/operator_core.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace adiabatic {

enum class Smoothness { norm_C1, norm_L1 };

/// s in [0, 1] -> Lambda(s), the perturbation in scaled time.
class GeneratorPath {
public:
	using Sampler = std::function<HermitianOperator(double)>;

	struct Options {
		/// sup ||Lambda'||. Estimated by finite differences when omitted (norm_C1 only).
		std::optional<double> kappa_dot;
		/// Points where the path is not smooth (jumps, kinks). Integrators and
		/// quadratures split there.
		std::vector<double> breakpoints;
		/// Lambda(s) does not depend on s.
		bool constant = false;
		/// Intervals of the uniform grid used for kappa, kappa_dot and l1_norm.
		int estimate_intervals = 1000;
	};

	GeneratorPath(Index dim, Sampler sampler, Smoothness smoothness, Options options);
	GeneratorPath(Index dim, Sampler sampler, Smoothness smoothness);

	static GeneratorPath constant(const HermitianOperator& lambda);
	static GeneratorPath zero(Index dim);

	HermitianOperator operator()(double s) const;
	/// Central finite difference (one-sided at the ends).
	ComplexMatrix derivative(double s) const;

	Index dim() const noexcept { return dim_; }
	Smoothness smoothness() const noexcept { return smoothness_; }
	double kappa() const noexcept { return kappa_; }
	/// Present for norm_C1 paths.
	std::optional<double> kappa_dot() const noexcept { return kappa_dot_; }
	double l1_norm() const noexcept { return l1_norm_; }
	bool is_constant() const noexcept { return constant_; }
	const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
	const Sampler& sampler() const noexcept { return sampler_; }

private:
	Index dim_;
	Sampler sampler_;
	Smoothness smoothness_;
	bool constant_;
	std::vector<double> breakpoints_;
	double kappa_ = 0.0;
	std::optional<double> kappa_dot_;
	double l1_norm_ = 0.0;
};

/// Unitaries on a grid of scaled times.
struct Evolution {
	std::vector<double> s_grid;
	std::vector<UnitaryOperator> unitaries;
	double step = 0.0;
	double max_drift = 0.0;
	std::string scheme;

	/// Index of a grid point equal to s. Throws std::out_of_range otherwise.
	std::size_t index_of(double s) const;
	const UnitaryOperator& at(double s) const { return unitaries[index_of(s)]; }
};

struct PropagatorResult : Evolution {
	double tau = 0.0;
	/// Set when a norm_L1 path was evolved directly.
	bool lower_accuracy = false;
};

struct MollifierSpec {
	double epsilon;
	std::function<double(double)> bump;

	/// Normalized exp(-1/(1-x^2)) on (-1, 1).
	static MollifierSpec standard(double epsilon);
	/// Numerical integral of the bump over [-1, 1].
	double bump_integral() const;
};

double default_step(double tau, double h0_norm, double kappa);

/// W(s) solving dW/ds = -i (tau H_o + Lambda(s)) W, W(0) = 1, by the exponential
/// midpoint rule. s_grid must start at 0, be strictly increasing and lie in [0, 1].
/// Steps are uniform between consecutive grid points and path breakpoints.
/// Throws DriftError when unitarity drifts beyond 1e-8.
PropagatorResult evolve(const HermitianOperator& h0, const GeneratorPath& path, double tau,
	const std::vector<double>& s_grid, std::optional<double> step = std::nullopt);

/// exp(i tau (t - s) H_o) W(t) W(s)^dagger for t, s on the result grid.
UnitaryOperator comparison_operator(
	const SpectralDecomposition& h0, const PropagatorResult& result, double t, double s);

/// n-th term of the Dyson series of Omega_tau(t, s) with kernel
/// K(r) = -i exp(i tau (r - s) H_o) Lambda(r) exp(-i tau (r - s) H_o).
struct DysonTerm {
	ComplexMatrix value;
	std::vector<std::string> warnings;
};

struct DysonSeries {
	ComplexMatrix sum;
	/// sum_{n > N} (kappa (t - s))^n / n!
	double remainder_bound = 0.0;
	/// ||S^dagger S - 1|| of the partial sum S.
	double unitarity_defect = 0.0;
	std::vector<DysonTerm> terms;
	std::vector<std::string> warnings;
};

/// All terms are built in one sweep over quad_points uniform intervals of [s, t]:
/// A^k(x_{m+1}) = A^k(x_m) + h/2 (K(x_m) A^{k-1}(x_m) + K(x_{m+1}) A^{k-1}(x_{m+1})).
/// Requires s <= t and n <= 8.
DysonTerm dyson_term(const SpectralDecomposition& h0, const GeneratorPath& path, double tau,
	int n, double t, double s, int quad_points);

DysonSeries dyson_series(const SpectralDecomposition& h0, const GeneratorPath& path,
	double tau, double t, double s, int order, int quad_points);

/// sum_{n > order} x^n / n! for x >= 0.
double exponential_tail(double x, int order);

/// Lambda_eps = phi_eps * Lambda with Lambda extended constantly outside [0, 1].
GeneratorPath mollify(const GeneratorPath& path, const MollifierSpec& spec);

/// int_0^1 ||a(s) - b(s)|| ds by Gauss-Legendre, split at both paths' breakpoints.
double path_l1_distance(const GeneratorPath& a, const GeneratorPath& b, int panels = 200);

/// V(s) solving i V' = Lambda(s) V, V(0) = 1. Default step min(1e-3, 0.1 / kappa).
Evolution interaction_frame(const GeneratorPath& path, const std::vector<double>& s_grid,
	std::optional<double> step = std::nullopt);

/// W(s) rebuilt as V(s) Z(s) where Z solves i Z' = tau V^dagger H_o V Z. V and Z are
/// advanced together by the midpoint rule; used to cross-check evolve.
PropagatorResult interaction_frame_reconstruction(const HermitianOperator& h0,
	const GeneratorPath& path, double tau, const std::vector<double>& s_grid,
	std::optional<double> step = std::nullopt);

/// Omega_inf(s) solving i Omega' = (sum_E P_E Lambda(s) P_E) Omega, Omega(0) = 1.
/// Integrated level by level in the eigenbasis, so the result is block diagonal.
Evolution omega_infinity(const SpectralDecomposition& h0, const GeneratorPath& path,
	const std::vector<double>& s_grid, std::optional<double> step = std::nullopt);

/// Step error estimate (4/3) max_s ||W_h(s) - W_{h/2}(s)|| from two evolve runs.
double richardson_step_error(const PropagatorResult& coarse, const PropagatorResult& fine);

/// Uniform grid of n intervals on [0, 1].
std::vector<double> uniform_grid(int intervals);

// .prop files: one line of JSON metadata, then "s <value>" and a matrix block per
// grid point.
std::string propagator_filename(const std::string& scenario, double tau);
void write_propagator(std::ostream& os, const PropagatorResult& result, const std::string& scenario);
PropagatorResult read_propagator(std::istream& is, std::string* scenario = nullptr);

} // namespace adiabatic
