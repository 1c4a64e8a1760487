#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace adiabatic {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

/// Raised when the eigensolver fails or its output does not reproduce the input.
class EigensolverError : public std::runtime_error {
public:
	EigensolverError(const std::string& what, double residual)
		: std::runtime_error(what), residual_(residual) {}
	double residual() const noexcept { return residual_; }

private:
	double residual_;
};

/// Raised when a product of unitaries loses unitarity beyond tolerance.
class DriftError : public std::runtime_error {
public:
	DriftError(const std::string& what, double drift, double suggested_step)
		: std::runtime_error(what), drift_(drift), suggested_step_(suggested_step) {}
	double drift() const noexcept { return drift_; }
	double suggested_step() const noexcept { return suggested_step_; }

private:
	double drift_;
	double suggested_step_;
};

/// Dense Hermitian matrix. The stored matrix is exactly (A + A^dagger)/2.
class HermitianOperator {
public:
	/// Throws std::invalid_argument if the input is not Hermitian to 1e-12 relative
	/// (max-entry norm) or has non-finite entries.
	explicit HermitianOperator(const ComplexMatrix& m);

	/// Hermitian part of m without the symmetry check. Use for products such as
	/// W A W^dagger that are Hermitian only up to rounding.
	static HermitianOperator hermitian_part(const ComplexMatrix& m);
	static HermitianOperator zero(Index dim);
	static HermitianOperator identity(Index dim);
	static HermitianOperator diagonal(const Eigen::VectorXd& d);

	const ComplexMatrix& matrix() const noexcept { return m_; }
	Index dim() const noexcept { return m_.rows(); }

	HermitianOperator operator+(const HermitianOperator& o) const;
	HermitianOperator operator-(const HermitianOperator& o) const;
	HermitianOperator operator*(double c) const;

private:
	struct Unchecked {};
	HermitianOperator(ComplexMatrix m, Unchecked) : m_(std::move(m)) {}
	ComplexMatrix m_;
};

inline HermitianOperator operator*(double c, const HermitianOperator& h) { return h * c; }

/// Unitary matrix together with its measured drift ||U^dagger U - 1||.
class UnitaryOperator {
public:
	static constexpr double kDefaultTolerance = 1e-8;

	/// Measures drift and throws DriftError if it exceeds tolerance.
	explicit UnitaryOperator(ComplexMatrix m, double tolerance = kDefaultTolerance);
	static UnitaryOperator identity(Index dim);

	const ComplexMatrix& matrix() const noexcept { return m_; }
	double drift() const noexcept { return drift_; }
	Index dim() const noexcept { return m_.rows(); }

	UnitaryOperator adjoint() const;

private:
	UnitaryOperator(ComplexMatrix m, double drift, int) : m_(std::move(m)), drift_(drift) {}
	ComplexMatrix m_;
	double drift_ = 0.0;
};

struct SpectralLevel {
	double eigenvalue;
	Index multiplicity;
	Index offset; // first column of this level in SpectralDecomposition::eigenvectors()
};

/// Eigenvalues of a Hermitian operator clustered into distinct levels.
///
/// Eigenvectors are stored once (columns sorted by eigenvalue); each level refers
/// to a contiguous block of columns, so projections are formed on demand.
class SpectralDecomposition {
public:
	SpectralDecomposition(ComplexMatrix eigenvectors, Eigen::VectorXd eigenvalues,
		double cluster_tol, double reconstruction_error);

	const std::vector<SpectralLevel>& levels() const noexcept { return levels_; }
	const ComplexMatrix& eigenvectors() const noexcept { return vectors_; }
	/// Raw eigenvalues, ascending, one per column of eigenvectors().
	const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
	double cluster_tol() const noexcept { return cluster_tol_; }
	Index dim() const noexcept { return vectors_.rows(); }
	/// Spectral radius max|E|.
	double norm() const noexcept;
	/// ||H - sum E P_E|| / ||H|| measured at construction (absolute if H = 0).
	double reconstruction_error() const noexcept { return reconstruction_error_; }

	/// Level index of each eigenvector column.
	const std::vector<std::size_t>& level_of_column() const noexcept { return level_of_column_; }

	HermitianOperator projection(std::size_t level) const;
	/// Eigenvector columns spanning the given level.
	ComplexMatrix level_basis(std::size_t level) const;
	/// Level whose eigenvalue lies within cluster_tol of E, if unique.
	/// Throws std::invalid_argument if two levels qualify.
	std::optional<std::size_t> find_level(double E) const;

	/// sum_E f(E) P_E for a per-level weight.
	ComplexMatrix apply_levelwise(const std::function<Complex(double)>& f) const;
	/// V^dagger A V: A expressed in the eigenbasis.
	ComplexMatrix to_eigenbasis(const ComplexMatrix& a) const;
	ComplexMatrix from_eigenbasis(const ComplexMatrix& a) const;

	HermitianOperator reconstruct() const;

private:
	ComplexMatrix vectors_;
	Eigen::VectorXd values_;
	std::vector<SpectralLevel> levels_;
	std::vector<std::size_t> level_of_column_;
	double cluster_tol_;
	double reconstruction_error_;
};

/// Default clustering tolerance 1e-9 * ||H||.
double default_cluster_tol(const HermitianOperator& h);

/// Eigendecomposition with eigenvalues within cluster_tol merged (chained) into
/// one level. cluster_tol defaults to default_cluster_tol(h).
SpectralDecomposition hermitian_eigendecomposition(
	const HermitianOperator& h, std::optional<double> cluster_tol = std::nullopt);

/// exp(-i t H).
UnitaryOperator unitary_exponential(const HermitianOperator& h, double t);
UnitaryOperator unitary_exponential(const SpectralDecomposition& d, double t);

/// Largest singular value.
double operator_norm(const ComplexMatrix& a);

/// ||A^dagger A - 1|| in operator norm.
double unitarity_drift(const ComplexMatrix& a);

/// Commutator AB - BA.
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

// Fixture text format: "dim N" then N rows of N entries written as re+imj.
void write_matrix(std::ostream& os, const ComplexMatrix& m);
ComplexMatrix read_matrix(std::istream& is);
std::string format_complex(Complex z);
Complex parse_complex(const std::string& token);

namespace detail {

/// exp(-i h G) for Hermitian G, no drift measurement. Hot path of the integrators.
ComplexMatrix exp_minus_i(const ComplexMatrix& g, double h);

} // namespace detail

} // namespace adiabatic
