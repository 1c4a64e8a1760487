#include "adiabatic/propagator.hpp"
#include "adiabatic/random_matrices.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace adiabatic;
using Catch::Matchers::WithinAbs;

namespace {

ComplexMatrix sx()
{
	ComplexMatrix m(2, 2);
	m << 0.0, 1.0, 1.0, 0.0;
	return m;
}

ComplexMatrix sz()
{
	ComplexMatrix m(2, 2);
	m << 1.0, 0.0, 0.0, -1.0;
	return m;
}

ComplexMatrix expm(const ComplexMatrix& h, double t)
{
	return unitary_exponential(HermitianOperator::hermitian_part(h), t).matrix();
}

// Same sampler without the constant flag, so the stepping code runs.
GeneratorPath stepped(const HermitianOperator& l)
{
	return GeneratorPath(l.dim(), [l](double) { return l; }, Smoothness::norm_C1);
}

GeneratorPath seeded_path(Index dim, Rng& rng)
{
	const auto a = random_hermitian(dim, rng, 1.0);
	const auto b = random_hermitian(dim, rng, 1.0);
	return GeneratorPath(dim, [a, b](double s) {
		return HermitianOperator::hermitian_part(std::cos(M_PI * s) * a.matrix() + std::sin(M_PI * s) * b.matrix());
	}, Smoothness::norm_C1);
}

GeneratorPath step_path()
{
	const HermitianOperator lo(sx());
	const HermitianOperator hi(sz());
	GeneratorPath::Options o;
	o.breakpoints = {0.5};
	return GeneratorPath(2, [lo, hi](double s) { return s < 0.5 ? lo : hi; }, Smoothness::norm_L1, o);
}

} // namespace

TEST_CASE("GeneratorPath estimates kappa, kappa_dot and the L1 norm")
{
	const auto path = GeneratorPath(2, [](double s) { return HermitianOperator(s * sx()); }, Smoothness::norm_C1);
	REQUIRE_THAT(path.kappa(), WithinAbs(1.0, 1e-12));
	REQUIRE_THAT(*path.kappa_dot(), WithinAbs(1.0, 1e-9));
	REQUIRE_THAT(path.l1_norm(), WithinAbs(0.5, 1e-12));
	GeneratorPath::Options o;
	o.kappa_dot = 0.5;
	REQUIRE_THROWS_AS(GeneratorPath(2, [](double s) { return HermitianOperator(s * sx()); }, Smoothness::norm_C1, o),
		std::invalid_argument);
	REQUIRE_FALSE(step_path().kappa_dot());
	REQUIRE_THAT(step_path().l1_norm(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("Lambda = 0 gives the free evolution")
{
	Rng rng(1);
	const auto h0 = random_hermitian(64, rng, 1.0);
	const auto grid = uniform_grid(20);
	const auto r = evolve(h0, GeneratorPath::zero(64), 1e4, grid);
	for(std::size_t k = 0; k < grid.size(); ++k) {
		REQUIRE(operator_norm(r.unitaries[k].matrix() - expm(h0.matrix(), 1e4 * grid[k])) < 1e-9);
	}
	const auto small = random_hermitian(8, rng, 1.0);
	const auto stepped_zero = evolve(small, stepped(HermitianOperator::zero(8)), 1e3, grid);
	for(std::size_t k = 0; k < grid.size(); ++k) {
		REQUIRE(operator_norm(stepped_zero.unitaries[k].matrix() - expm(small.matrix(), 1e3 * grid[k])) < 1e-9);
	}
	REQUIRE(r.unitaries.front().matrix() == ComplexMatrix::Identity(64, 64));
	REQUIRE(r.max_drift <= 1e-8);
}

TEST_CASE("resonant block: H_o = sigma_z / n, Lambda = sigma_x, tau = n")
{
	const auto grid = uniform_grid(10);
	for(int n : {1, 5, 20}) {
		const HermitianOperator h0(sz() / n);
		const auto r = evolve(h0, stepped(HermitianOperator(sx())), n, grid);
		for(std::size_t k = 0; k < grid.size(); ++k) {
			REQUIRE(operator_norm(r.unitaries[k].matrix() - expm(sz() + sx(), grid[k])) < 1e-12);
		}
	}
}

TEST_CASE("exponential midpoint converges at second order")
{
	Rng rng(2);
	const auto h0 = random_hermitian(8, rng, 1.0);
	const auto path = seeded_path(8, rng);
	const auto grid = uniform_grid(4);
	const double tau = 100.0;
	const auto reference = evolve(h0, path, tau, grid, 1.25e-5);
	auto error = [&](double h) {
		const auto r = evolve(h0, path, tau, grid, h);
		return operator_norm(r.unitaries.back().matrix() - reference.unitaries.back().matrix());
	};
	const double e1 = error(4e-4);
	const double e2 = error(2e-4);
	REQUIRE(e2 > 0.0);
	REQUIRE(e1 / e2 == Catch::Approx(4.0).margin(0.4));
}

TEST_CASE("breakpoints and grid points are hit exactly")
{
	const auto grid = uniform_grid(3);
	const auto r = evolve(HermitianOperator(sz()), step_path(), 1.0, grid, 0.01);
	REQUIRE(r.lower_accuracy);
	// Piecewise constant: exact product of two exponentials.
	const ComplexMatrix exact = expm(sz() + sz(), 0.5) * expm(sz() + sx(), 0.5);
	REQUIRE(operator_norm(r.at(1.0).matrix() - exact) < 1e-12);
	REQUIRE_THROWS_AS(r.at(0.5), std::out_of_range);
	REQUIRE_THROWS_AS(evolve(HermitianOperator(sz()), step_path(), 1.0, {0.1, 1.0}), std::invalid_argument);
	REQUIRE_THROWS_AS(evolve(HermitianOperator(sz()), step_path(), 0.0, grid), std::invalid_argument);
}

TEST_CASE("comparison operator")
{
	Rng rng(3);
	const auto h0 = random_hermitian(4, rng, 1.0);
	const auto d = hermitian_eigendecomposition(h0);
	const auto grid = uniform_grid(10);

	const auto free = evolve(h0, GeneratorPath::zero(4), 30.0, grid);
	REQUIRE(operator_norm(comparison_operator(d, free, 0.7, 0.2).matrix() - ComplexMatrix::Identity(4, 4)) < 1e-12);

	const auto r = evolve(h0, seeded_path(4, rng), 30.0, grid);
	REQUIRE(operator_norm(comparison_operator(d, r, 0.4, 0.4).matrix() - ComplexMatrix::Identity(4, 4)) < 1e-12);
	REQUIRE_THROWS_AS(comparison_operator(d, r, 0.45, 0.0), std::out_of_range);

	// A constant Lambda commuting with H_o: Omega(t, s) = exp(-i (t - s) Lambda) for every tau.
	const HermitianOperator lambda = HermitianOperator::hermitian_part(h0.matrix() * h0.matrix());
	for(double tau : {1.0, 50.0}) {
		const auto c = evolve(h0, stepped(lambda), tau, grid);
		const ComplexMatrix om = comparison_operator(d, c, 0.9, 0.3).matrix();
		REQUIRE(operator_norm(om - expm(lambda.matrix(), 0.6)) < 1e-9);
	}
}

TEST_CASE("Dyson terms: closed forms")
{
	Rng rng(4);
	const auto lambda = random_hermitian(3, rng, 1.0);
	const auto zero_h = hermitian_eigendecomposition(HermitianOperator::zero(3));
	const auto path = GeneratorPath::constant(lambda);
	REQUIRE(dyson_term(zero_h, path, 5.0, 0, 0.8, 0.1, 10).value == ComplexMatrix::Identity(3, 3));
	REQUIRE(operator_norm(dyson_term(zero_h, path, 5.0, 1, 0.8, 0.1, 10).value - (-kI * 0.7 * lambda.matrix())) < 1e-14);

	// Commuting kernels: A^2 = (1/2)(-i int K)^2 with K(r) = -i a(r) M.
	const auto m = random_hermitian(3, rng, 1.0);
	const GeneratorPath commuting(3, [m](double r) { return HermitianOperator::hermitian_part((1.0 + r * r) * m.matrix()); },
		Smoothness::norm_C1);
	const double integral = 1.0 + 1.0 / 3.0;
	const ComplexMatrix a2 = dyson_term(zero_h, commuting, 1.0, 2, 1.0, 0.0, 4000).value;
	const ComplexMatrix k = -kI * integral * m.matrix();
	REQUIRE(operator_norm(a2 - 0.5 * k * k) < 1e-6);
	REQUIRE_THROWS_AS(dyson_term(zero_h, path, 1.0, 9, 1.0, 0.0, 10), std::invalid_argument);
	REQUIRE_THROWS_AS(dyson_term(zero_h, path, 1.0, 1, 0.0, 1.0, 10), std::invalid_argument);
}

TEST_CASE("Dyson terms agree with a 4x resolution reference and obey the simplex bound")
{
	Rng rng(5);
	const auto h0 = hermitian_eigendecomposition(random_hermitian(4, rng, 1.0));
	const auto path = seeded_path(4, rng);
	for(int n = 1; n <= 4; ++n) {
		const auto coarse = dyson_term(h0, path, 10.0, n, 1.0, 0.0, 2000);
		const auto fine = dyson_term(h0, path, 10.0, n, 1.0, 0.0, 8000);
		REQUIRE(coarse.warnings.empty());
		REQUIRE(operator_norm(coarse.value - fine.value) < 1e-6);
		REQUIRE(operator_norm(fine.value) <= std::pow(path.kappa(), n) / std::tgamma(n + 1.0) + 1e-6);
	}
	const auto under = dyson_term(h0, path, 100.0, 1, 1.0, 0.0, 20);
	REQUIRE(under.warnings.size() == 1);
}

TEST_CASE("exponential tail")
{
	REQUIRE_THAT(exponential_tail(1.0, 0), WithinAbs(std::exp(1.0) - 1.0, 1e-15));
	double partial = 0.0;
	double term = 1.0;
	for(int n = 0; n <= 8; ++n) {
		partial += term;
		term /= n + 1;
	}
	REQUIRE_THAT(exponential_tail(1.0, 8), WithinAbs(std::exp(1.0) - partial, 1e-15));
	REQUIRE_THAT(exponential_tail(1.0, 8), WithinAbs(3.0586e-6, 1e-10));
	REQUIRE(exponential_tail(0.0, 3) == 0.0);
	REQUIRE_THAT(exponential_tail(2.0, 0) , WithinAbs(std::exp(2.0) - 1.0, 1e-13));
}

TEST_CASE("Dyson series reproduces the ODE comparison operator")
{
	Rng rng(6);
	const auto h0 = random_hermitian(4, rng, 1.0);
	const auto d = hermitian_eigendecomposition(h0);
	const auto path = seeded_path(4, rng);
	const double tau = 50.0;
	const auto ode = evolve(h0, path, tau, {0.0, 1.0}, 1e-5);
	const ComplexMatrix om = comparison_operator(d, ode, 1.0, 0.0).matrix();
	const auto series = dyson_series(d, path, tau, 1.0, 0.0, 8, 20000);
	REQUIRE(series.warnings.empty());
	REQUIRE(operator_norm(series.sum - om) <= series.remainder_bound + 1e-5);
	const auto zeroth = dyson_series(d, path, tau, 1.0, 0.0, 0, 100);
	REQUIRE(zeroth.sum == ComplexMatrix::Identity(4, 4));
	REQUIRE_THAT(zeroth.remainder_bound, WithinAbs(std::exp(path.kappa()) - 1.0, 1e-12));
}

TEST_CASE("mollifier")
{
	const auto spec = MollifierSpec::standard(0.01);
	REQUIRE_THAT(spec.bump_integral(), WithinAbs(1.0, 1e-8));

	const HermitianOperator l(sx());
	const auto smooth_const = mollify(GeneratorPath::constant(l), spec);
	REQUIRE(smooth_const.smoothness() == Smoothness::norm_C1);
	REQUIRE(operator_norm(smooth_const(0.3).matrix() - l.matrix()) == 0.0);
	const auto flagged = mollify(stepped(l), spec);
	REQUIRE(operator_norm(flagged(0.004).matrix() - l.matrix()) < 1e-14);

	// Step at 1/2: int ||Lambda_eps - Lambda|| = eps ||J|| c_phi, c_phi = 2 int_0^1 (1 - Phi(u)) du.
	const auto path = step_path();
	const double jump = operator_norm(sz() - sx());
	double c_phi = 0.0;
	{
		const int n = 20000;
		double cdf = 0.5;
		for(int i = 0; i < n; ++i) {
			const double u0 = static_cast<double>(i) / n;
			const double u1 = static_cast<double>(i + 1) / n;
			const double um = 0.5 * (u0 + u1);
			// Simpson on each cell for the bump, midpoint-cdf for the tail integral.
			const double cell = (spec.bump(u0) + 4.0 * spec.bump(um) + spec.bump(u1)) / (6.0 * n);
			c_phi += 2.0 * (1.0 - (cdf + 0.5 * cell)) / n;
			cdf += cell;
		}
	}
	REQUIRE(c_phi < 1.0);
	for(double eps : {0.05, 0.01}) {
		const auto s = MollifierSpec::standard(eps);
		const auto smooth = mollify(path, s);
		const double dist = path_l1_distance(smooth, path, 400);
		REQUIRE_THAT(dist, WithinAbs(eps * jump * c_phi, 1e-6));
		REQUIRE(dist <= eps * jump);
		// Far from the jump the smoothed path equals the original.
		REQUIRE(operator_norm(smooth(0.2).matrix() - sx()) < 1e-14);
		REQUIRE(operator_norm(smooth(0.8).matrix() - sz()) < 1e-14);
	}
	REQUIRE_THROWS_AS(mollify(path, MollifierSpec::standard(0.6)), std::invalid_argument);
	REQUIRE_THROWS_AS(mollify(path, MollifierSpec{0.1, [](double x) { return std::abs(x) < 1 ? 0.4 : 0.0; }}),
		std::invalid_argument);
}

TEST_CASE("mollified propagator deviation is bounded by the L1 distance")
{
	const HermitianOperator h0(sz());
	const auto path = step_path();
	const auto smooth = mollify(path, MollifierSpec::standard(0.05));
	const double dist = path_l1_distance(smooth, path, 400);
	const auto grid = uniform_grid(20);
	const auto w = evolve(h0, path, 10.0, grid, 1e-4);
	const auto w_half = evolve(h0, path, 10.0, grid, 5e-5);
	const auto we = evolve(h0, smooth, 10.0, grid, 1e-4);
	const auto we_half = evolve(h0, smooth, 10.0, grid, 5e-5);
	const double budget = richardson_step_error(w, w_half) + richardson_step_error(we, we_half);
	double worst = 0.0;
	for(std::size_t k = 0; k < grid.size(); ++k) {
		worst = std::max(worst, operator_norm(we.unitaries[k].matrix() - w.unitaries[k].matrix()));
	}
	REQUIRE(worst <= dist + 2.0 * budget);
}

TEST_CASE("interaction frame")
{
	const auto grid = uniform_grid(10);
	const auto zero = interaction_frame(GeneratorPath::zero(2), grid);
	REQUIRE(zero.at(1.0).matrix() == ComplexMatrix::Identity(2, 2));
	const auto x = interaction_frame(stepped(HermitianOperator(sx())), grid);
	for(double s : grid) {
		REQUIRE(operator_norm(x.at(s).matrix() - expm(sx(), s)) < 1e-12);
	}
	const GeneratorPath commuting(2, [](double s) { return HermitianOperator((1.0 + s * s) * sz()); }, Smoothness::norm_C1);
	const auto v = interaction_frame(commuting, grid, 1e-3);
	for(double s : grid) {
		REQUIRE(operator_norm(v.at(s).matrix() - expm(sz(), s + s * s * s / 3.0)) < 1e-6);
	}
	REQUIRE_THROWS_AS(interaction_frame(step_path(), grid), std::invalid_argument);
}

TEST_CASE("interaction-frame reconstruction matches direct evolution")
{
	Rng rng(7);
	const auto h0 = random_hermitian(4, rng, 1.0);
	const auto path = seeded_path(4, rng);
	const auto grid = uniform_grid(10);
	const auto direct = evolve(h0, path, 20.0, grid, 1e-4);
	const auto frame = interaction_frame_reconstruction(h0, path, 20.0, grid, 1e-4);
	for(std::size_t k = 0; k < grid.size(); ++k) {
		REQUIRE(operator_norm(direct.unitaries[k].matrix() - frame.unitaries[k].matrix()) < 1e-5);
	}
}

TEST_CASE("limit evolution Omega_inf")
{
	const auto grid = uniform_grid(10);
	const auto dz = hermitian_eigendecomposition(HermitianOperator(sz()));
	const auto trivial = omega_infinity(dz, stepped(HermitianOperator(sx())), grid);
	for(const auto& u : trivial.unitaries) {
		REQUIRE(operator_norm(u.matrix() - ComplexMatrix::Identity(2, 2)) < 1e-14);
	}

	// Commuting Lambda: Omega_inf = V.
	const GeneratorPath commuting(2, [](double s) { return HermitianOperator((1.0 + s) * sz()); }, Smoothness::norm_C1);
	const auto om = omega_infinity(dz, commuting, grid, 1e-3);
	const auto v = interaction_frame(commuting, grid, 1e-3);
	for(std::size_t k = 0; k < grid.size(); ++k) {
		REQUIRE(operator_norm(om.unitaries[k].matrix() - v.unitaries[k].matrix()) < 1e-12);
	}

	// Degenerate level: H_o = diag(0, 0, 1); Lambda acts inside the doubled level.
	Rng rng(8);
	Eigen::VectorXd e(3);
	e << 0.0, 0.0, 1.0;
	const auto d3 = hermitian_eigendecomposition(HermitianOperator::diagonal(e));
	const auto a = random_hermitian(3, rng, 1.0);
	const auto b = random_hermitian(3, rng, 1.0);
	const GeneratorPath path(3, [a, b](double s) {
		return HermitianOperator::hermitian_part(std::cos(M_PI * s) * a.matrix() + std::sin(M_PI * s) * b.matrix());
	}, Smoothness::norm_C1);
	const auto full = omega_infinity(d3, path, grid, 1e-3);
	const ComplexMatrix a2 = a.matrix().topLeftCorner(2, 2);
	const ComplexMatrix b2 = b.matrix().topLeftCorner(2, 2);
	const GeneratorPath block(2, [a2, b2](double s) {
		return HermitianOperator::hermitian_part(std::cos(M_PI * s) * a2 + std::sin(M_PI * s) * b2);
	}, Smoothness::norm_C1);
	const auto standalone = interaction_frame(block, grid, 1e-3);
	const ComplexMatrix& v3 = d3.eigenvectors();
	for(std::size_t k = 0; k < grid.size(); ++k) {
		const ComplexMatrix in_basis = v3.adjoint() * full.unitaries[k].matrix() * v3;
		const ComplexMatrix blk = v3.topLeftCorner(2, 2).adjoint() * standalone.unitaries[k].matrix() * v3.topLeftCorner(2, 2);
		REQUIRE(operator_norm(in_basis.topLeftCorner(2, 2) - blk) < 1e-12);
		REQUIRE(std::abs(in_basis(0, 2)) + std::abs(in_basis(2, 1)) < 1e-14);
	}

	Rng rng2(9);
	const auto h0 = random_hermitian(16, rng2, 1.0);
	const auto d = hermitian_eigendecomposition(h0);
	const auto oi = omega_infinity(d, seeded_path(16, rng2), grid);
	for(const auto& u : oi.unitaries) {
		REQUIRE(operator_norm(commutator(u.matrix(), h0.matrix())) <= 1e-9 * operator_norm(h0.matrix()));
	}
}

TEST_CASE(".prop files round-trip")
{
	Rng rng(10);
	const auto h0 = random_hermitian(3, rng, 1.0);
	const auto r = evolve(h0, seeded_path(3, rng), 12.5, uniform_grid(4));
	std::stringstream ss;
	write_propagator(ss, r, "demo");
	std::string scenario;
	const auto back = read_propagator(ss, &scenario);
	REQUIRE(scenario == "demo");
	REQUIRE(back.tau == r.tau);
	REQUIRE(back.step == r.step);
	REQUIRE(back.s_grid == r.s_grid);
	for(std::size_t k = 0; k < r.s_grid.size(); ++k) {
		REQUIRE(back.unitaries[k].matrix() == r.unitaries[k].matrix());
	}
	REQUIRE(propagator_filename("embedded_eigenvalue", 1000.0) == "run_embedded_eigenvalue_1000.prop");
	std::stringstream bad("{\"format\":\"other\"}\n");
	REQUIRE_THROWS_AS(read_propagator(bad), std::invalid_argument);
}
