#include "adiabatic/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace adiabatic {

namespace {

double max_abs_entry(const ComplexMatrix& m)
{
	double r = 0.0;
	for(Index j = 0; j < m.cols(); ++j) {
		for(Index i = 0; i < m.rows(); ++i) {
			r = std::max(r, std::abs(m(i, j)));
		}
	}
	return r;
}

bool all_finite(const ComplexMatrix& m)
{
	for(Index j = 0; j < m.cols(); ++j) {
		for(Index i = 0; i < m.rows(); ++i) {
			if(!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) {
				return false;
			}
		}
	}
	return true;
}

// Spectral radius of a Hermitian matrix (only the lower triangle is read).
double hermitian_norm(const ComplexMatrix& h)
{
	if(h.size() == 0) {
		return 0.0;
	}
	const double scale = max_abs_entry(h);
	if(scale == 0.0) {
		return 0.0;
	}
	Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h / scale, Eigen::EigenvaluesOnly);
	const auto& ev = es.eigenvalues();
	return scale * std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

} // namespace

HermitianOperator::HermitianOperator(const ComplexMatrix& m)
{
	if(m.rows() != m.cols() || m.rows() < 1) {
		throw std::invalid_argument("HermitianOperator: matrix must be square with dim >= 1");
	}
	if(!all_finite(m)) {
		throw std::invalid_argument("HermitianOperator: non-finite entry");
	}
	const double scale = max_abs_entry(m);
	const double asym = max_abs_entry(m - m.adjoint());
	if(asym > 1e-12 * scale) {
		std::ostringstream msg;
		msg << "HermitianOperator: input not Hermitian (max |A - A^dagger| = " << asym
			<< ", max |A| = " << scale << ")";
		throw std::invalid_argument(msg.str());
	}
	m_ = 0.5 * (m + m.adjoint());
}

HermitianOperator HermitianOperator::hermitian_part(const ComplexMatrix& m)
{
	if(m.rows() != m.cols() || m.rows() < 1) {
		throw std::invalid_argument("HermitianOperator: matrix must be square with dim >= 1");
	}
	return HermitianOperator(ComplexMatrix(0.5 * (m + m.adjoint())), Unchecked{});
}

HermitianOperator HermitianOperator::zero(Index dim)
{
	return HermitianOperator(ComplexMatrix::Zero(dim, dim), Unchecked{});
}

HermitianOperator HermitianOperator::identity(Index dim)
{
	return HermitianOperator(ComplexMatrix::Identity(dim, dim), Unchecked{});
}

HermitianOperator HermitianOperator::diagonal(const Eigen::VectorXd& d)
{
	return HermitianOperator(ComplexMatrix(d.cast<Complex>().asDiagonal()), Unchecked{});
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const
{
	return HermitianOperator(ComplexMatrix(m_ + o.m_), Unchecked{});
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const
{
	return HermitianOperator(ComplexMatrix(m_ - o.m_), Unchecked{});
}

HermitianOperator HermitianOperator::operator*(double c) const
{
	return HermitianOperator(ComplexMatrix(c * m_), Unchecked{});
}

UnitaryOperator::UnitaryOperator(ComplexMatrix m, double tolerance) : m_(std::move(m))
{
	if(m_.rows() != m_.cols() || m_.rows() < 1) {
		throw std::invalid_argument("UnitaryOperator: matrix must be square with dim >= 1");
	}
	drift_ = unitarity_drift(m_);
	if(!(drift_ <= tolerance)) {
		std::ostringstream msg;
		msg << "UnitaryOperator: drift " << drift_ << " exceeds tolerance " << tolerance;
		throw DriftError(msg.str(), drift_, 0.0);
	}
}

UnitaryOperator UnitaryOperator::identity(Index dim)
{
	return UnitaryOperator(ComplexMatrix::Identity(dim, dim), 0.0, 0);
}

UnitaryOperator UnitaryOperator::adjoint() const
{
	return UnitaryOperator(ComplexMatrix(m_.adjoint()), drift_, 0);
}

SpectralDecomposition::SpectralDecomposition(ComplexMatrix eigenvectors,
	Eigen::VectorXd eigenvalues, double cluster_tol, double reconstruction_error)
	: vectors_(std::move(eigenvectors)), values_(std::move(eigenvalues)),
	  cluster_tol_(cluster_tol), reconstruction_error_(reconstruction_error)
{
	const Index n = values_.size();
	level_of_column_.resize(static_cast<std::size_t>(n));
	Index start = 0;
	for(Index i = 1; i <= n; ++i) {
		if(i == n || values_(i) - values_(i - 1) > cluster_tol_) {
			const Index mult = i - start;
			const double mean = values_.segment(start, mult).mean();
			for(Index k = start; k < i; ++k) {
				level_of_column_[static_cast<std::size_t>(k)] = levels_.size();
			}
			levels_.push_back({mean, mult, start});
			start = i;
		}
	}
}

double SpectralDecomposition::norm() const noexcept
{
	if(values_.size() == 0) {
		return 0.0;
	}
	return std::max(std::abs(values_(0)), std::abs(values_(values_.size() - 1)));
}

HermitianOperator SpectralDecomposition::projection(std::size_t level) const
{
	const ComplexMatrix b = level_basis(level);
	return HermitianOperator::hermitian_part(b * b.adjoint());
}

ComplexMatrix SpectralDecomposition::level_basis(std::size_t level) const
{
	const auto& l = levels_.at(level);
	return vectors_.middleCols(l.offset, l.multiplicity);
}

std::optional<std::size_t> SpectralDecomposition::find_level(double E) const
{
	std::optional<std::size_t> found;
	for(std::size_t k = 0; k < levels_.size(); ++k) {
		if(std::abs(levels_[k].eigenvalue - E) <= cluster_tol_) {
			if(found) {
				std::ostringstream msg;
				msg << "ambiguous level lookup: two levels within cluster_tol of " << E;
				throw std::invalid_argument(msg.str());
			}
			found = k;
		}
	}
	return found;
}

ComplexMatrix SpectralDecomposition::apply_levelwise(const std::function<Complex(double)>& f) const
{
	ComplexVector w(values_.size());
	std::vector<Complex> per_level(levels_.size());
	for(std::size_t k = 0; k < levels_.size(); ++k) {
		per_level[k] = f(levels_[k].eigenvalue);
	}
	for(Index i = 0; i < values_.size(); ++i) {
		w(i) = per_level[level_of_column_[static_cast<std::size_t>(i)]];
	}
	return vectors_ * w.asDiagonal() * vectors_.adjoint();
}

ComplexMatrix SpectralDecomposition::to_eigenbasis(const ComplexMatrix& a) const
{
	return vectors_.adjoint() * a * vectors_;
}

ComplexMatrix SpectralDecomposition::from_eigenbasis(const ComplexMatrix& a) const
{
	return vectors_ * a * vectors_.adjoint();
}

HermitianOperator SpectralDecomposition::reconstruct() const
{
	return HermitianOperator::hermitian_part(apply_levelwise([](double e) { return Complex(e); }));
}

double default_cluster_tol(const HermitianOperator& h)
{
	return 1e-9 * hermitian_norm(h.matrix());
}

SpectralDecomposition hermitian_eigendecomposition(
	const HermitianOperator& h, std::optional<double> cluster_tol)
{
	const double tol = cluster_tol ? *cluster_tol : default_cluster_tol(h);
	if(!(tol >= 0.0)) {
		throw std::invalid_argument("hermitian_eigendecomposition: cluster_tol must be >= 0");
	}
	const ComplexMatrix& a = h.matrix();
	Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
	const double scale = std::max(max_abs_entry(a), 1e-300);
	if(es.info() != Eigen::Success) {
		throw EigensolverError("hermitian_eigendecomposition: eigensolver did not converge",
			std::numeric_limits<double>::infinity());
	}
	const ComplexMatrix& v = es.eigenvectors();
	const Eigen::VectorXd& ev = es.eigenvalues();
	const double hnorm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
	const double denom = hnorm > 0.0 ? hnorm : 1.0;

	const double raw_residual =
		operator_norm(a * v - v * ev.cast<Complex>().asDiagonal()) / denom;
	const double orth = unitarity_drift(v);
	if(raw_residual > 1e-10 || orth > 1e-10) {
		std::ostringstream msg;
		msg << "hermitian_eigendecomposition: residual " << raw_residual
			<< ", eigenvector orthogonality defect " << orth << " (entry scale " << scale << ")";
		throw EigensolverError(msg.str(), std::max(raw_residual, orth));
	}

	SpectralDecomposition d(v, ev, tol, 0.0);
	const double recon = operator_norm(a - d.reconstruct().matrix()) / denom;
	return SpectralDecomposition(v, ev, tol, recon);
}

UnitaryOperator unitary_exponential(const SpectralDecomposition& d, double t)
{
	const Eigen::VectorXd& ev = d.eigenvalues();
	ComplexVector phases(ev.size());
	for(Index i = 0; i < ev.size(); ++i) {
		phases(i) = std::exp(-kI * (t * ev(i)));
	}
	const ComplexMatrix& v = d.eigenvectors();
	return UnitaryOperator(ComplexMatrix(v * phases.asDiagonal() * v.adjoint()));
}

UnitaryOperator unitary_exponential(const HermitianOperator& h, double t)
{
	return unitary_exponential(hermitian_eigendecomposition(h), t);
}

double operator_norm(const ComplexMatrix& a)
{
	if(a.size() == 0) {
		return 0.0;
	}
	const double scale = max_abs_entry(a);
	if(scale == 0.0) {
		return 0.0;
	}
	const ComplexMatrix b = a / scale;
	// The smaller Gram matrix has the same nonzero spectrum.
	const ComplexMatrix gram = b.rows() < b.cols() ? ComplexMatrix(b * b.adjoint())
												   : ComplexMatrix(b.adjoint() * b);
	Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gram, Eigen::EigenvaluesOnly);
	const double top = es.eigenvalues()(es.eigenvalues().size() - 1);
	return scale * std::sqrt(std::max(top, 0.0));
}

double unitarity_drift(const ComplexMatrix& a)
{
	const ComplexMatrix g = a.adjoint() * a - ComplexMatrix::Identity(a.cols(), a.cols());
	return hermitian_norm(0.5 * (g + g.adjoint()));
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b)
{
	return a * b - b * a;
}

std::string format_complex(Complex z)
{
	char buf[64];
	const double im = z.imag();
	const bool negative = std::signbit(im);
	std::snprintf(buf, sizeof buf, "%.17g%c%.17gj", z.real(), negative ? '-' : '+', std::abs(im));
	return buf;
}

Complex parse_complex(const std::string& token)
{
	const char* begin = token.c_str();
	char* end = nullptr;
	const double re = std::strtod(begin, &end);
	if(end == begin || (*end != '+' && *end != '-')) {
		throw std::invalid_argument("parse_complex: malformed entry '" + token + "'");
	}
	const char* im_begin = end;
	const double im = std::strtod(im_begin, &end);
	if(end == im_begin || *end != 'j' || *(end + 1) != '\0') {
		throw std::invalid_argument("parse_complex: malformed entry '" + token + "'");
	}
	if(!std::isfinite(re) || !std::isfinite(im)) {
		throw std::invalid_argument("parse_complex: non-finite entry '" + token + "'");
	}
	return {re, im};
}

void write_matrix(std::ostream& os, const ComplexMatrix& m)
{
	os << "dim " << m.rows() << '\n';
	for(Index i = 0; i < m.rows(); ++i) {
		for(Index j = 0; j < m.cols(); ++j) {
			if(j > 0) {
				os << ' ';
			}
			os << format_complex(m(i, j));
		}
		os << '\n';
	}
}

ComplexMatrix read_matrix(std::istream& is)
{
	std::string keyword;
	long long n = 0;
	if(!(is >> keyword >> n) || keyword != "dim" || n < 1) {
		throw std::invalid_argument("read_matrix: expected header 'dim N' with N >= 1");
	}
	ComplexMatrix m(n, n);
	std::string token;
	for(Index i = 0; i < n; ++i) {
		for(Index j = 0; j < n; ++j) {
			if(!(is >> token)) {
				throw std::invalid_argument("read_matrix: truncated matrix block");
			}
			m(i, j) = parse_complex(token);
		}
	}
	return m;
}

namespace detail {

ComplexMatrix exp_minus_i(const ComplexMatrix& g, double h)
{
	Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g);
	if(es.info() != Eigen::Success) {
		throw EigensolverError("exp_minus_i: eigensolver did not converge",
			std::numeric_limits<double>::infinity());
	}
	const auto& ev = es.eigenvalues();
	const ComplexMatrix& v = es.eigenvectors();
	ComplexVector phases(ev.size());
	for(Index i = 0; i < ev.size(); ++i) {
		phases(i) = std::exp(-kI * (h * ev(i)));
	}
	return v * phases.asDiagonal() * v.adjoint();
}

} // namespace detail

} // namespace adiabatic
