#include "adiabatic/operator_core.hpp"
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

// Largest singular value by power iteration on A^dagger A.
double power_norm(const ComplexMatrix& a, int iterations = 2000)
{
	ComplexVector v = ComplexVector::Ones(a.cols());
	v(0) += Complex(0.3, 0.1);
	v.normalize();
	double est = 0.0;
	for(int i = 0; i < iterations; ++i) {
		ComplexVector w = a.adjoint() * (a * v);
		est = std::sqrt(w.norm());
		v = w / w.norm();
	}
	return est;
}

// exp(-i t H) by its Taylor series (adequate for small ||tH||).
ComplexMatrix taylor_exp(const ComplexMatrix& h, double t, int terms = 60)
{
	ComplexMatrix sum = ComplexMatrix::Identity(h.rows(), h.cols());
	ComplexMatrix term = sum;
	for(int k = 1; k < terms; ++k) {
		term = term * (-kI * t * h) / static_cast<double>(k);
		sum += term;
	}
	return sum;
}

} // namespace

TEST_CASE("Hermitian operator rejects non-Hermitian and non-finite input")
{
	ComplexMatrix m(2, 2);
	m << 1.0, 2.0, 0.0, 1.0;
	REQUIRE_THROWS_AS(HermitianOperator(m), std::invalid_argument);
	ComplexMatrix bad = sz();
	bad(0, 0) = std::nan("");
	REQUIRE_THROWS_AS(HermitianOperator(bad), std::invalid_argument);
	REQUIRE_NOTHROW(HermitianOperator(sx()));
}

TEST_CASE("Hermitian storage is exactly self-adjoint")
{
	ComplexMatrix m = sx();
	m(0, 1) += 1e-14;
	const HermitianOperator h(m);
	REQUIRE((h.matrix() - h.matrix().adjoint()).norm() == 0.0);
}

TEST_CASE("sigma_z decomposes into two levels with exact projections")
{
	const auto d = hermitian_eigendecomposition(HermitianOperator(sz()));
	REQUIRE(d.levels().size() == 2);
	REQUIRE_THAT(d.levels()[0].eigenvalue, WithinAbs(-1.0, 1e-15));
	REQUIRE_THAT(d.levels()[1].eigenvalue, WithinAbs(1.0, 1e-15));
	ComplexMatrix p_up = ComplexMatrix::Zero(2, 2);
	p_up(0, 0) = 1.0;
	REQUIRE(operator_norm(d.projection(1).matrix() - p_up) < 1e-14);
}

TEST_CASE("eigenvalues within the cluster tolerance merge into one level")
{
	Eigen::VectorXd v(4);
	v << 0.0, 1e-12, 0.5, 1.0;
	const auto d = hermitian_eigendecomposition(HermitianOperator::diagonal(v));
	REQUIRE(d.levels().size() == 3);
	REQUIRE(d.levels()[0].multiplicity == 2);
	const auto wide = hermitian_eigendecomposition(HermitianOperator::diagonal(v), 0.6);
	REQUIRE(wide.levels().size() == 1);
}

TEST_CASE("decomposition reconstructs seeded operators and projections are orthogonal")
{
	Rng rng(7);
	for(int trial = 0; trial < 10; ++trial) {
		const auto h = random_hermitian(12, rng, 2.0);
		const auto d = hermitian_eigendecomposition(h);
		REQUIRE(d.reconstruction_error() < 1e-10);
		REQUIRE(operator_norm(d.reconstruct().matrix() - h.matrix()) < 1e-12 * 2.0 * 12);
		ComplexMatrix sum = ComplexMatrix::Zero(12, 12);
		for(std::size_t l = 0; l < d.levels().size(); ++l) {
			const ComplexMatrix p = d.projection(l).matrix();
			REQUIRE(operator_norm(p * p - p) < 1e-12);
			sum += p;
		}
		REQUIRE(operator_norm(sum - ComplexMatrix::Identity(12, 12)) < 1e-12);
	}
}

TEST_CASE("unitary exponential of pi/2 sigma_x is -i sigma_x")
{
	const auto u = unitary_exponential(HermitianOperator(sx()), M_PI / 2);
	REQUIRE(operator_norm(u.matrix() - (-kI * sx())) < 1e-14);
}

TEST_CASE("unitary exponential matches a truncated Taylor series")
{
	Rng rng(11);
	const auto h = random_hermitian(6, rng, 1.0);
	for(double t : {0.1, 0.7, 1.3}) {
		const auto u = unitary_exponential(h, t);
		REQUIRE(operator_norm(u.matrix() - taylor_exp(h.matrix(), t)) < 1e-12);
		REQUIRE(u.drift() < 1e-13);
	}
}

TEST_CASE("exponential group law exp(-i(a+b)H) = exp(-iaH) exp(-ibH)")
{
	Rng rng(3);
	const auto h = random_hermitian(8, rng, 3.0);
	const auto d = hermitian_eigendecomposition(h);
	const ComplexMatrix lhs = unitary_exponential(d, 1.7).matrix();
	const ComplexMatrix rhs = unitary_exponential(d, 0.4).matrix() * unitary_exponential(d, 1.3).matrix();
	REQUIRE(operator_norm(lhs - rhs) < 1e-12);
}

TEST_CASE("operator norm agrees with power iteration")
{
	Rng rng(5);
	for(int trial = 0; trial < 5; ++trial) {
		ComplexMatrix a = random_unitary(7, rng) * 0.0;
		for(Index i = 0; i < 7; ++i) {
			for(Index j = 0; j < 5; ++j) {
				a(i, j) = Complex(std::sin(3.0 * i + j + trial), std::cos(i * j + 0.5 * trial));
			}
		}
		REQUIRE_THAT(operator_norm(a), WithinAbs(power_norm(a), 1e-9));
	}
	REQUIRE(operator_norm(ComplexMatrix::Zero(3, 3)) == 0.0);
}

TEST_CASE("Haar unitaries are unitary and drift is reported")
{
	Rng rng(9);
	const ComplexMatrix u = random_unitary(10, rng);
	REQUIRE(unitarity_drift(u) < 1e-13);
	REQUIRE_NOTHROW(UnitaryOperator(u));
	REQUIRE_THROWS_AS(UnitaryOperator(1.001 * u), DriftError);
}

TEST_CASE("commutator of Pauli matrices")
{
	ComplexMatrix sy(2, 2);
	sy << 0.0, -kI, kI, 0.0;
	REQUIRE(operator_norm(commutator(sx(), sy) - 2.0 * kI * sz()) < 1e-15);
}

TEST_CASE("matrix text format round-trips exactly")
{
	Rng rng(13);
	const ComplexMatrix u = random_unitary(5, rng);
	std::stringstream ss;
	write_matrix(ss, u);
	const ComplexMatrix back = read_matrix(ss);
	REQUIRE(back == u);
	REQUIRE(parse_complex(format_complex(Complex(-1.5, 2.25e-7))) == Complex(-1.5, 2.25e-7));
}

TEST_CASE("property: conjugation preserves the spectrum")
{
	Rng rng(17);
	for(int trial = 0; trial < 5; ++trial) {
		const auto h = random_hermitian(9, rng, 1.0);
		const ComplexMatrix u = random_unitary(9, rng);
		const auto g = HermitianOperator::hermitian_part(u * h.matrix() * u.adjoint());
		const auto a = hermitian_eigendecomposition(h).eigenvalues();
		const auto b = hermitian_eigendecomposition(g).eigenvalues();
		REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-13);
	}
}
