#include "adiabatic/random_matrices.hpp"

namespace adiabatic {

namespace {

ComplexMatrix ginibre(Index rows, Index cols, Rng& rng)
{
	std::normal_distribution<double> nd;
	ComplexMatrix g(rows, cols);
	for(Index j = 0; j < cols; ++j) {
		for(Index i = 0; i < rows; ++i) {
			g(i, j) = Complex(nd(rng), nd(rng));
		}
	}
	return g;
}

} // namespace

HermitianOperator random_hermitian(Index dim, Rng& rng, double norm)
{
	const ComplexMatrix g = ginibre(dim, dim, rng);
	const ComplexMatrix h = 0.5 * (g + g.adjoint());
	const double n = operator_norm(h);
	return HermitianOperator::hermitian_part(h * (norm / n));
}

ComplexMatrix random_unitary(Index dim, Rng& rng)
{
	const ComplexMatrix g = ginibre(dim, dim, rng);
	Eigen::HouseholderQR<ComplexMatrix> qr(g);
	ComplexMatrix q = qr.householderQ();
	const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
	for(Index j = 0; j < dim; ++j) {
		const Complex d = r(j, j);
		const double a = std::abs(d);
		if(a > 0.0) {
			q.col(j) *= d / a;
		}
	}
	return q;
}

ComplexVector random_unit_vector(Index dim, Rng& rng)
{
	ComplexVector v = ginibre(dim, 1, rng).col(0);
	v.normalize();
	return v;
}

} // namespace adiabatic
