#pragma once

#include "adiabatic/operator_core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace adiabatic {

// ---------------------------------------------------------------------------
// Spectral projections
// ---------------------------------------------------------------------------

/// chi(H <= E). Levels within cluster_tol above E are included.
HermitianOperator projection_leq(const SpectralDecomposition& d, double E);

/// chi(H >= E). Levels within cluster_tol below E are included.
HermitianOperator projection_geq(const SpectralDecomposition& d, double E);

/// chi(H = E): the unique level within cluster_tol of E, or zero.
/// Throws std::invalid_argument when two levels qualify.
HermitianOperator projection_eq(const SpectralDecomposition& d, double E);

/// Sum of projections with eigenvalue in the interval between a and b. Closed ends
/// admit levels within cluster_tol outside the end point, open ends exclude levels
/// within cluster_tol of it.
HermitianOperator band_projection(
	const SpectralDecomposition& d, double a, double b, bool closed_left, bool closed_right);

// ---------------------------------------------------------------------------
// Bounded-variation functions
// ---------------------------------------------------------------------------

/// Continuous component of a BV function. `derivative(x, side)` returns the
/// one-sided derivative (side = +1 right, -1 left); it may be left empty, in which
/// case central differences are used.
struct ContinuousPart {
	std::string name;
	std::function<double(double)> value;
	std::function<double(double, int)> derivative;
	/// lim_{x -> +inf} value(x), when known.
	std::optional<double> at_infinity;
	/// Total variation over the real line.
	double variation = 0.0;
	/// Points where the derivative is discontinuous; quadrature grids include them.
	std::vector<double> breakpoints;

	static ContinuousPart zero();
	static ContinuousPart constant(double c);
	/// 1 / (1 + exp(beta (x - mu))), beta > 0.
	static ContinuousPart fermi_dirac(double mu, double beta);
	/// Linear interpolation of (x, y) knots (x strictly increasing), constant outside.
	static ContinuousPart piecewise_linear(std::vector<std::pair<double, double>> table);

	double slope(double x, int side) const;
};

/// A discontinuity at `at`. `left` is f(E), `right` is f(E+0) and `below` is
/// f(E-0), all measured on the jump part (the function minus its continuous part).
/// `below` defaults to the previous jump's `right`, or to `left` for the first jump.
struct Jump {
	double at;
	double left;
	double right;
	std::optional<double> below;
};

/// f = c + s with c continuous (ContinuousPart) and s piecewise constant with
/// finitely many jumps.
class BVFunction {
public:
	/// Validates the jump list (strictly increasing, consistent `below` values),
	/// the value at infinity against the continuous part when its limit is known,
	/// and declared_variation >= sum of jump sizes. When declared_variation is
	/// omitted it defaults to continuous variation + jump variation.
	BVFunction(ContinuousPart continuous, std::vector<Jump> jumps, double at_infinity,
		std::optional<double> declared_variation = std::nullopt);

	static BVFunction step_leq(double e0);      ///< chi(x <= e0)
	static BVFunction step_lt(double e0);       ///< chi(x < e0)
	static BVFunction step_geq(double e0);      ///< chi(x >= e0)
	static BVFunction kronecker_delta(double e0);
	static BVFunction from_continuous(ContinuousPart c);

	/// Pointwise sum; jump lists are merged.
	BVFunction operator+(const BVFunction& o) const;

	double operator()(double x) const;
	double left_limit(double x) const;
	double right_limit(double x) const;

	/// Jump-part values s(x), s(x-0), s(x+0).
	double jump_value(double x) const;
	double jump_left_limit(double x) const;
	double jump_right_limit(double x) const;
	/// s(+inf).
	double jump_at_infinity() const;

	const ContinuousPart& continuous() const noexcept { return continuous_; }
	/// Jumps with `below` resolved.
	const std::vector<Jump>& jumps() const noexcept { return jumps_; }
	double at_infinity() const noexcept { return at_infinity_; }
	double declared_variation() const noexcept { return declared_variation_; }
	/// sum over jumps of |f(E-0) - f(E)| + |f(E) - f(E+0)|.
	double jump_variation() const;

private:
	ContinuousPart continuous_;
	std::vector<Jump> jumps_;
	double at_infinity_;
	double declared_variation_;
};

/// Var(f) on a sorted grid, with jump locations inside the grid span inserted and
/// their one-sided limits included.
double total_variation(const BVFunction& f, const std::vector<double>& grid);

// ---------------------------------------------------------------------------
// Functional calculus
// ---------------------------------------------------------------------------

/// sum_E f(E) P_E. Throws std::domain_error naming the eigenvalue if f is not finite.
HermitianOperator calculus_continuous(
	const SpectralDecomposition& d, const std::function<double(double)>& f);

/// f(H) via integration by parts against chi(H <= E):
///   f(inf) 1 - int df(E) chi(H <= E) + sum_E (f(E) - f(E+0)) chi(H = E).
/// Jump contributions are exact; the continuous part is integrated with the
/// trapezoid rule on f' using `quadrature_points` subintervals between each pair of
/// consecutive eigenvalues (breakpoints of the continuous part are added to the grid).
/// Throws std::invalid_argument if the variation measured on the grid exceeds the
/// declared variation.
HermitianOperator calculus_bv(
	const SpectralDecomposition& d, const BVFunction& f, int quadrature_points);

/// Function in one of the classes C_b, C_o, BV, or a sum g + h with g continuous
/// and h of bounded variation.
class SpectralFunction {
public:
	enum class Kind { continuous_bounded, continuous_vanishing, bounded_variation, sum };

	static SpectralFunction continuous_bounded(std::function<double(double)> f, std::string label);
	static SpectralFunction continuous_vanishing(std::function<double(double)> f, std::string label);
	static SpectralFunction bounded_variation(BVFunction f, std::string label);
	/// g must be continuous (C_b or C_o), h of bounded variation.
	static SpectralFunction sum(SpectralFunction g, SpectralFunction h);

	Kind kind() const noexcept { return kind_; }
	const std::string& label() const noexcept { return label_; }
	const std::vector<SpectralFunction>& parts() const noexcept { return parts_; }
	bool is_continuous() const noexcept;

	double operator()(double x) const;

	/// Continuous kinds use calculus_continuous, BV uses calculus_bv, sums add parts.
	HermitianOperator apply(const SpectralDecomposition& d, int quadrature_points = 10000) const;

private:
	Kind kind_ = Kind::continuous_bounded;
	std::string label_;
	std::function<double(double)> continuous_;
	std::optional<BVFunction> bv_;
	std::vector<SpectralFunction> parts_;
};

// ---------------------------------------------------------------------------
// Operators built from the spectral decomposition
// ---------------------------------------------------------------------------

/// sum_E P_E A P_E.
HermitianOperator block_diagonal_part(const SpectralDecomposition& d, const HermitianOperator& a);

/// Solution X of [H, X] = P1 L P2 supported on the P1-P2 block, where
/// P1 = chi(H <= E1) and P2 = chi(H >= E2). In the eigenbasis
/// X_ij = L_ij / (E_i - E_j). Spectrum strictly between E1 and E2 contributes
/// zero rows/columns. Throws std::invalid_argument if E2 - E1 <= cluster_tol.
ComplexMatrix kato_commutator_solution(
	const SpectralDecomposition& d, const HermitianOperator& lambda, double e1, double e2);

} // namespace adiabatic
