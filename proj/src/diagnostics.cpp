#include "adiabatic/diagnostics.hpp"

#include "adiabatic/spectral_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace adiabatic {

// ---------------------------------------------------------------------------
// TestVectorSet
// ---------------------------------------------------------------------------

TestVectorSet TestVectorSet::seeded(Index dim, int count, Rng& rng)
{
	TestVectorSet t;
	for(int i = 0; i < count; ++i) {
		t.add(random_unit_vector(dim, rng), Provenance::seeded_random, "r" + std::to_string(i));
	}
	return t;
}

TestVectorSet TestVectorSet::eigenvectors(const SpectralDecomposition& d, std::size_t level)
{
	TestVectorSet t;
	const ComplexMatrix b = d.level_basis(level);
	for(Index j = 0; j < b.cols(); ++j) {
		ComplexVector v = b.col(j);
		v.normalize();
		t.add(std::move(v), Provenance::eigenvector,
			"e" + std::to_string(level) + "_" + std::to_string(j));
	}
	return t;
}

TestVectorSet TestVectorSet::basis(Index dim, const std::vector<Index>& indices)
{
	TestVectorSet t;
	for(Index i : indices) {
		if(i < 0 || i >= dim) {
			throw std::invalid_argument("TestVectorSet::basis: index out of range");
		}
		ComplexVector v = ComplexVector::Zero(dim);
		v(i) = 1.0;
		t.add(std::move(v), Provenance::finite_support, "b" + std::to_string(i));
	}
	return t;
}

void TestVectorSet::add(ComplexVector v, Provenance p, std::string id)
{
	if(!(std::abs(v.norm() - 1.0) <= 1e-12)) {
		throw std::invalid_argument("TestVectorSet: vector '" + id + "' is not unit norm");
	}
	if(!vectors_.empty() && v.size() != vectors_.front().size()) {
		throw std::invalid_argument("TestVectorSet: dimension mismatch");
	}
	vectors_.push_back(std::move(v));
	provenance_.push_back(p);
	ids_.push_back(std::move(id));
}

void TestVectorSet::append(const TestVectorSet& other)
{
	for(std::size_t i = 0; i < other.size(); ++i) {
		add(other.vectors_[i], other.provenance_[i], other.ids_[i]);
	}
}

std::string to_string(TestVectorSet::Provenance p)
{
	switch(p) {
	case TestVectorSet::Provenance::seeded_random: return "seeded_random";
	case TestVectorSet::Provenance::eigenvector: return "eigenvector";
	case TestVectorSet::Provenance::finite_support: return "finite_support";
	}
	return "unknown";
}

// ---------------------------------------------------------------------------
// Heisenberg-picture distances
// ---------------------------------------------------------------------------

namespace {

void check_dim(const PropagatorResult& r, Index dim)
{
	if(r.unitaries.empty() || r.unitaries.front().dim() != dim) {
		throw std::invalid_argument("dimension mismatch between result and operator");
	}
}

void check_vectors(const TestVectorSet& v, Index dim)
{
	if(v.size() > 0 && v[0].size() != dim) {
		throw std::invalid_argument("dimension mismatch between vectors and operator");
	}
}

// Omega(t, s) = exp(i tau (t - s) H_o) W(t) W(s)^dagger without the unitary wrapper.
ComplexMatrix omega(const SpectralDecomposition& h0, const PropagatorResult& r, double t, double s)
{
	const double dt = r.tau * (t - s);
	const ComplexMatrix phase = h0.apply_levelwise([dt](double e) { return std::exp(Complex(0.0, dt * e)); });
	return phase * r.at(t).matrix() * r.at(s).matrix().adjoint();
}

} // namespace

SProfile heisenberg_distance_norm(const PropagatorResult& result, const ComplexMatrix& a)
{
	check_dim(result, a.rows());
	SProfile p;
	p.s = result.s_grid;
	for(const auto& w : result.unitaries) {
		const ComplexMatrix& u = w.matrix();
		const double v = operator_norm(u * a * u.adjoint() - a);
		p.values.push_back(v);
		p.sup = std::max(p.sup, v);
	}
	return p;
}

VectorProfiles heisenberg_distance_sot(
	const PropagatorResult& result, const ComplexMatrix& a, const TestVectorSet& vectors)
{
	check_dim(result, a.rows());
	check_vectors(vectors, a.rows());
	VectorProfiles p;
	p.s = result.s_grid;
	p.values.assign(vectors.size(), {});
	p.sup.assign(vectors.size(), 0.0);
	for(const auto& w : result.unitaries) {
		const ComplexMatrix& u = w.matrix();
		const ComplexMatrix diff = u * a * u.adjoint() - a;
		for(std::size_t i = 0; i < vectors.size(); ++i) {
			const double v = (diff * vectors[i]).norm();
			p.values[i].push_back(v);
			p.sup[i] = std::max(p.sup[i], v);
		}
	}
	return p;
}

// ---------------------------------------------------------------------------
// Resolvent
// ---------------------------------------------------------------------------

namespace {

ComplexMatrix resolvent(const ComplexMatrix& h, Complex z)
{
	ComplexMatrix m = h - z * ComplexMatrix::Identity(h.rows(), h.cols());
	return m.partialPivLu().inverse();
}

} // namespace

ResolventReport resolvent_distance(const SpectralDecomposition& h0, const GeneratorPath& path,
	const PropagatorResult& result, Complex z)
{
	const double eta = std::abs(z.imag());
	if(!(eta > 0.0)) {
		throw std::invalid_argument("resolvent_distance: z must have nonzero imaginary part");
	}
	check_dim(result, h0.dim());
	// (H_o - z)^{-1} from the eigendecomposition.
	const ComplexMatrix r0 = h0.apply_levelwise([z](double e) { return 1.0 / (e - z); });
	ResolventReport rep;
	rep.profile = heisenberg_distance_norm(result, r0);
	const double kappa = path.kappa();
	const double kappa_dot = path.kappa_dot().value_or(0.0);
	rep.constant = kappa_dot + 2.0 * kappa * std::max(1.0, kappa + eta);
	rep.bound = rep.constant / (eta * eta * result.tau);
	rep.within_bound = rep.profile.sup <= rep.bound;
	return rep;
}

double resolvent_identity_defect(const HermitianOperator& h0, const GeneratorPath& path,
	const PropagatorResult& result, Complex z)
{
	if(!(z.imag() != 0.0)) {
		throw std::invalid_argument("resolvent_identity_defect: z must be non-real");
	}
	check_dim(result, h0.dim());
	const double tau = result.tau;
	auto r_at = [&](double s) { return resolvent(h0.matrix() + path(s).matrix() / tau, z); };
	// W^dagger R' W with R' = -(1/tau) R Lambda' R.
	auto integrand = [&](std::size_t k) {
		const double s = result.s_grid[k];
		const ComplexMatrix r = r_at(s);
		const ComplexMatrix rdot = -(r * path.derivative(s) * r) / tau;
		const ComplexMatrix& w = result.unitaries[k].matrix();
		return ComplexMatrix(w.adjoint() * rdot * w);
	};
	const ComplexMatrix r_start = r_at(0.0);
	ComplexMatrix integral = ComplexMatrix::Zero(h0.dim(), h0.dim());
	ComplexMatrix prev = integrand(0);
	double worst = 0.0;
	for(std::size_t k = 1; k < result.s_grid.size(); ++k) {
		const ComplexMatrix cur = integrand(k);
		integral += 0.5 * (result.s_grid[k] - result.s_grid[k - 1]) * (prev + cur);
		prev = cur;
		const ComplexMatrix& w = result.unitaries[k].matrix();
		const ComplexMatrix lhs = r_at(result.s_grid[k]) - w * r_start * w.adjoint();
		const ComplexMatrix rhs = w * integral * w.adjoint();
		worst = std::max(worst, operator_norm(lhs - rhs));
	}
	return worst;
}

// ---------------------------------------------------------------------------
// Off-diagonal blocks
// ---------------------------------------------------------------------------

namespace {

// Eigenvector columns with eigenvalue <= e1 (+tol) and >= e2 (-tol).
std::pair<ComplexMatrix, ComplexMatrix> split_bases(const SpectralDecomposition& h0, double e1, double e2)
{
	if(!(e2 > e1)) {
		throw std::invalid_argument("offdiagonal_block_decay: requires E2 > E1");
	}
	const double tol = h0.cluster_tol();
	std::vector<Index> lo;
	std::vector<Index> hi;
	for(const auto& l : h0.levels()) {
		for(Index j = 0; j < l.multiplicity; ++j) {
			if(l.eigenvalue <= e1 + tol) {
				lo.push_back(l.offset + j);
			}
			if(l.eigenvalue >= e2 - tol) {
				hi.push_back(l.offset + j);
			}
		}
	}
	const ComplexMatrix& v = h0.eigenvectors();
	ComplexMatrix a(h0.dim(), static_cast<Index>(lo.size()));
	ComplexMatrix b(h0.dim(), static_cast<Index>(hi.size()));
	for(std::size_t i = 0; i < lo.size(); ++i) {
		a.col(static_cast<Index>(i)) = v.col(lo[i]);
	}
	for(std::size_t i = 0; i < hi.size(); ++i) {
		b.col(static_cast<Index>(i)) = v.col(hi[i]);
	}
	return {a, b};
}

OffDiagonalBlock block_norms(const ComplexMatrix& om, const ComplexMatrix& p1, const ComplexMatrix& p2)
{
	OffDiagonalBlock out;
	if(p1.cols() == 0 || p2.cols() == 0) {
		return out;
	}
	// ||P1 X P2|| = ||B1^dagger X B2|| for orthonormal bases B1, B2.
	out.p1_omega_p2 = operator_norm(p1.adjoint() * om * p2);
	out.p2_omega_p1 = operator_norm(p2.adjoint() * om * p1);
	return out;
}

} // namespace

OffDiagonalBlock offdiagonal_block_decay(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e1, double e2, double t, double s)
{
	check_dim(result, h0.dim());
	const auto [p1, p2] = split_bases(h0, e1, e2);
	return block_norms(omega(h0, result, t, s), p1, p2);
}

OffDiagonalBlock offdiagonal_block_sup(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e1, double e2, double s)
{
	check_dim(result, h0.dim());
	const auto [p1, p2] = split_bases(h0, e1, e2);
	OffDiagonalBlock out;
	for(std::size_t k = result.index_of(s); k < result.s_grid.size(); ++k) {
		const auto b = block_norms(omega(h0, result, result.s_grid[k], s), p1, p2);
		out.p1_omega_p2 = std::max(out.p1_omega_p2, b.p1_omega_p2);
		out.p2_omega_p1 = std::max(out.p2_omega_p1, b.p2_omega_p1);
	}
	return out;
}

// ---------------------------------------------------------------------------
// Embedded eigenvalue
// ---------------------------------------------------------------------------

EmbeddedReport embedded_eigenprojection_decay(const SpectralDecomposition& h0,
	const PropagatorResult& result, double e, const TestVectorSet& vectors)
{
	check_dim(result, h0.dim());
	check_vectors(vectors, h0.dim());
	const auto level = h0.find_level(e);
	if(!level) {
		std::ostringstream msg;
		msg << "embedded_eigenprojection_decay: " << e << " is not an eigenvalue";
		throw std::invalid_argument(msg.str());
	}
	const ComplexMatrix p = h0.projection(*level).matrix();
	const Index n = h0.dim();
	const ComplexMatrix q = ComplexMatrix::Identity(n, n) - p;
	const double center = h0.levels()[*level].eigenvalue;

	EmbeddedReport rep;
	rep.band_halfwidth = 1.0 / std::sqrt(result.tau);
	const ComplexMatrix band = h0.apply_levelwise([&](double x) {
		const double d = std::abs(x - center);
		return Complex(d > h0.cluster_tol() && d <= rep.band_halfwidth ? 1.0 : 0.0, 0.0);
	});
	rep.leak.assign(vectors.size(), 0.0);
	rep.projection_distance.assign(vectors.size(), 0.0);
	rep.decomposition_excess = -std::numeric_limits<double>::infinity();
	for(std::size_t i = 0; i < vectors.size(); ++i) {
		rep.band_weight.push_back((band * vectors[i]).norm());
	}
	for(std::size_t k = 0; k < result.s_grid.size(); ++k) {
		const ComplexMatrix om = omega(h0, result, result.s_grid[k], 0.0);
		const ComplexMatrix& w = result.unitaries[k].matrix();
		const ComplexMatrix dist = w * p * w.adjoint() - p;
		const ComplexMatrix comm = p * om - om * p;
		for(std::size_t i = 0; i < vectors.size(); ++i) {
			const ComplexVector& psi = vectors[i];
			const double leak = (q * (om * (p * psi))).norm();
			rep.leak[i] = std::max(rep.leak[i], leak);
			rep.projection_distance[i] = std::max(rep.projection_distance[i], (dist * psi).norm());
			const double lhs = (comm * psi).norm();
			const double rhs = (p * (om * (q * psi))).norm() + leak;
			rep.decomposition_excess = std::max(rep.decomposition_excess, lhs - rhs);
		}
	}
	return rep;
}

// ---------------------------------------------------------------------------
// Limit evolution
// ---------------------------------------------------------------------------

LimitReport schrodinger_limit_distance(const SpectralDecomposition& h0, const GeneratorPath& path,
	const PropagatorResult& result, const Evolution& omega_inf, const TestVectorSet& vectors)
{
	check_dim(result, h0.dim());
	check_vectors(vectors, h0.dim());
	if(omega_inf.s_grid != result.s_grid) {
		throw std::invalid_argument("schrodinger_limit_distance: grids differ");
	}
	const double growth = std::exp(path.l1_norm());
	LimitReport rep;
	rep.distance.assign(vectors.size(), 0.0);
	std::vector<double> r_sup(vectors.size(), 0.0);
	// Running integral of B(r) D(r) psi per vector, and the previous integrand.
	std::vector<ComplexVector> integral(vectors.size(), ComplexVector::Zero(h0.dim()));
	std::vector<ComplexVector> prev(vectors.size());
	for(std::size_t k = 0; k < result.s_grid.size(); ++k) {
		const double s = result.s_grid[k];
		const ComplexMatrix d = omega(h0, result, s, 0.0) - omega_inf.unitaries[k].matrix();
		const ComplexMatrix b = block_diagonal_part(h0, path(s)).matrix();
		const double ds = k > 0 ? s - result.s_grid[k - 1] : 0.0;
		for(std::size_t i = 0; i < vectors.size(); ++i) {
			const ComplexVector dpsi = d * vectors[i];
			const ComplexVector cur = b * dpsi;
			if(k > 0) {
				integral[i] += 0.5 * ds * (prev[i] + cur);
			}
			prev[i] = cur;
			rep.distance[i] = std::max(rep.distance[i], dpsi.norm());
			r_sup[i] = std::max(r_sup[i], (dpsi + kI * integral[i]).norm());
		}
	}
	for(double r : r_sup) {
		rep.envelope.push_back(r * growth);
	}
	return rep;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

RateFit rate_fit(const std::vector<std::pair<double, double>>& rows)
{
	RateFit fit;
	std::vector<double> x;
	std::vector<double> y;
	for(const auto& [tau, value] : rows) {
		if(!(value > 0.0) || !(tau > 0.0) || !std::isfinite(value)) {
			++fit.excluded;
			continue;
		}
		x.push_back(std::log(tau));
		y.push_back(std::log(value));
	}
	std::vector<double> distinct = x;
	std::sort(distinct.begin(), distinct.end());
	distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
	if(distinct.size() < 3) {
		throw std::invalid_argument("rate_fit: fewer than 3 distinct tau with positive values");
	}
	const double n = static_cast<double>(x.size());
	double mx = 0.0;
	double my = 0.0;
	for(std::size_t i = 0; i < x.size(); ++i) {
		mx += x[i];
		my += y[i];
	}
	mx /= n;
	my /= n;
	double sxx = 0.0;
	double sxy = 0.0;
	for(std::size_t i = 0; i < x.size(); ++i) {
		sxx += (x[i] - mx) * (x[i] - mx);
		sxy += (x[i] - mx) * (y[i] - my);
	}
	fit.slope = sxy / sxx;
	const double intercept = my - fit.slope * mx;
	fit.constant = std::exp(intercept);
	double ss = 0.0;
	for(std::size_t i = 0; i < x.size(); ++i) {
		const double r = y[i] - (intercept + fit.slope * x[i]);
		ss += r * r;
	}
	fit.residual = std::sqrt(ss / n);
	return fit;
}

BoundCheck decade_bound_check(const std::vector<std::pair<double, double>>& rows)
{
	if(rows.empty()) {
		throw std::invalid_argument("decade_bound_check: no rows");
	}
	double tau_min = rows.front().first;
	for(const auto& r : rows) {
		tau_min = std::min(tau_min, r.first);
	}
	const double cutoff = 10.0 * tau_min * (1.0 + 1e-12);
	BoundCheck b;
	for(const auto& [tau, value] : rows) {
		if(tau <= cutoff) {
			b.fitted_constant = std::max(b.fitted_constant, value * tau);
		}
	}
	b.pass = true;
	for(const auto& [tau, value] : rows) {
		if(tau > cutoff) {
			++b.checked;
			const double ratio = b.fitted_constant > 0.0 ? value * tau / b.fitted_constant
			                                             : (value > 0.0 ? INFINITY : 0.0);
			b.worst_ratio = std::max(b.worst_ratio, ratio);
			if(!(value <= b.fitted_constant / tau)) {
				b.pass = false;
			}
		}
	}
	return b;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void ConvergenceReport::add(double tau, double s, std::string vector_id, double value)
{
	if(!(value >= 0.0) || !std::isfinite(value)) {
		throw std::invalid_argument("ConvergenceReport: values must be finite and nonnegative");
	}
	rows.push_back(ReportRow{tau, s, std::move(vector_id), value});
}

void ConvergenceReport::sort_rows()
{
	std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
		if(a.tau != b.tau) {
			return a.tau < b.tau;
		}
		if(a.s != b.s) {
			return a.s < b.s;
		}
		return a.vector_id < b.vector_id;
	});
}

void write_csv_header(std::ostream& os)
{
	os << "scenario,metric,tau,s,vector_id,value\n";
}

void write_csv_rows(std::ostream& os, const ConvergenceReport& report)
{
	char buf[128];
	for(const auto& r : report.rows) {
		os << report.scenario << ',' << report.metric << ',';
		std::snprintf(buf, sizeof buf, "%.17g,%.17g,", r.tau, r.s);
		os << buf << r.vector_id << ',';
		std::snprintf(buf, sizeof buf, "%.17g", r.value);
		os << buf << '\n';
	}
}

} // namespace adiabatic
