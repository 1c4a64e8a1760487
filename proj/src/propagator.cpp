#include "adiabatic/propagator.hpp"

#include "adiabatic/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adiabatic {

namespace {

constexpr double kDriftTolerance = 1e-8;

void check_breakpoints(const std::vector<double>& b)
{
	for(std::size_t i = 0; i < b.size(); ++i) {
		if(!(b[i] > 0.0 && b[i] < 1.0)) {
			throw std::invalid_argument("GeneratorPath: breakpoints must lie in (0, 1)");
		}
		if(i > 0 && !(b[i] > b[i - 1])) {
			throw std::invalid_argument("GeneratorPath: breakpoints must be strictly increasing");
		}
	}
}

void check_grid(const std::vector<double>& g)
{
	if(g.empty() || g.front() != 0.0) {
		throw std::invalid_argument("s_grid must start at 0");
	}
	for(std::size_t i = 1; i < g.size(); ++i) {
		if(!(g[i] > g[i - 1])) {
			throw std::invalid_argument("s_grid must be strictly increasing");
		}
	}
	if(g.back() > 1.0) {
		throw std::invalid_argument("s_grid must lie in [0, 1]");
	}
}

// A piece [a, b] of the time axis, cut at grid points and breakpoints, taken in n
// equal substeps. grid_index is set when b is a grid point.
struct Segment {
	double a;
	double b;
	int substeps;
	std::optional<std::size_t> grid_index;
};

std::vector<Segment> segments(
	const std::vector<double>& grid, const std::vector<double>& breakpoints, double step)
{
	std::vector<Segment> out;
	for(std::size_t i = 1; i < grid.size(); ++i) {
		std::vector<double> cuts{grid[i - 1]};
		for(double b : breakpoints) {
			if(b > grid[i - 1] && b < grid[i]) {
				cuts.push_back(b);
			}
		}
		cuts.push_back(grid[i]);
		for(std::size_t k = 1; k < cuts.size(); ++k) {
			const double len = cuts[k] - cuts[k - 1];
			const int n = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
			Segment seg{cuts[k - 1], cuts[k], n, std::nullopt};
			if(k + 1 == cuts.size()) {
				seg.grid_index = i;
			}
			out.push_back(seg);
		}
	}
	return out;
}

UnitaryOperator checked(const ComplexMatrix& w, double step, const char* who)
{
	const double drift = unitarity_drift(w);
	if(!(drift <= kDriftTolerance)) {
		std::ostringstream msg;
		msg << who << ": unitarity drift " << drift << " exceeds " << kDriftTolerance
			<< "; retry with step " << 0.5 * step;
		throw DriftError(msg.str(), drift, 0.5 * step);
	}
	return UnitaryOperator(w, kDriftTolerance);
}

struct EigenPair {
	ComplexMatrix vectors;
	Eigen::VectorXd values;
};

EigenPair eigen_pair(const ComplexMatrix& g)
{
	Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(g);
	if(es.info() != Eigen::Success) {
		throw EigensolverError("eigensolver did not converge",
			std::numeric_limits<double>::infinity());
	}
	return {es.eigenvectors(), es.eigenvalues()};
}

// exp(-i h G) from a precomputed eigendecomposition of G.
ComplexMatrix exp_from(const EigenPair& e, double h)
{
	ComplexVector phases(e.values.size());
	for(Index k = 0; k < e.values.size(); ++k) {
		phases(k) = std::exp(Complex(0.0, -h * e.values(k)));
	}
	return e.vectors * phases.asDiagonal() * e.vectors.adjoint();
}

double frame_step(const GeneratorPath& path, std::optional<double> step)
{
	const double h = step.value_or(path.kappa() > 0.0 ? std::min(1e-3, 0.1 / path.kappa()) : 1e-3);
	if(!(h > 0.0)) {
		throw std::invalid_argument("step must be positive");
	}
	return h;
}

void require_c1(const GeneratorPath& path, const char* who)
{
	if(path.smoothness() != Smoothness::norm_C1) {
		throw std::invalid_argument(std::string(who) + ": requires a norm_C1 path");
	}
}

} // namespace

// ---------------------------------------------------------------------------
// GeneratorPath
// ---------------------------------------------------------------------------

GeneratorPath::GeneratorPath(Index dim, Sampler sampler, Smoothness smoothness)
	: GeneratorPath(dim, std::move(sampler), smoothness, Options{})
{
}

GeneratorPath::GeneratorPath(Index dim, Sampler sampler, Smoothness smoothness, Options options)
	: dim_(dim),
	  sampler_(std::move(sampler)),
	  smoothness_(smoothness),
	  constant_(options.constant),
	  breakpoints_(std::move(options.breakpoints))
{
	if(dim_ < 1 || !sampler_) {
		throw std::invalid_argument("GeneratorPath: needs a positive dimension and a sampler");
	}
	if(options.estimate_intervals < 1) {
		throw std::invalid_argument("GeneratorPath: estimate_intervals must be positive");
	}
	check_breakpoints(breakpoints_);

	auto norm_at = [this](double s) { return operator_norm((*this)(s).matrix()); };

	if(constant_) {
		kappa_ = norm_at(0.0);
		l1_norm_ = kappa_;
		if(smoothness_ == Smoothness::norm_C1) {
			kappa_dot_ = 0.0;
		}
		return;
	}

	const int n = options.estimate_intervals;
	std::vector<ComplexMatrix> samples;
	samples.reserve(static_cast<std::size_t>(n) + 1);
	for(int i = 0; i <= n; ++i) {
		const double s = static_cast<double>(i) / n;
		samples.push_back((*this)(s).matrix());
		kappa_ = std::max(kappa_, operator_norm(samples.back()));
	}
	for(double b : breakpoints_) {
		kappa_ = std::max(kappa_, norm_at(b));
	}

	const GaussRule rule = gauss_legendre(8);
	l1_norm_ = integrate_piecewise(
		[&](double s) {
			const double v = norm_at(s);
			kappa_ = std::max(kappa_, v);
			return v;
		},
		0.0, 1.0, breakpoints_, std::max(1, n / 8), rule);

	if(smoothness_ == Smoothness::norm_C1) {
		double fd = 0.0;
		for(int i = 0; i < n; ++i) {
			fd = std::max(fd, operator_norm(samples[static_cast<std::size_t>(i) + 1] - samples[static_cast<std::size_t>(i)]) * n);
		}
		if(options.kappa_dot) {
			if(!(fd <= 1.1 * *options.kappa_dot + 1e-12)) {
				std::ostringstream msg;
				msg << "GeneratorPath: finite-difference derivative norm " << fd
					<< " exceeds 1.1 * kappa_dot = " << 1.1 * *options.kappa_dot;
				throw std::invalid_argument(msg.str());
			}
			kappa_dot_ = *options.kappa_dot;
		} else {
			kappa_dot_ = fd;
		}
	}
	if(!std::isfinite(kappa_)) {
		throw std::invalid_argument("GeneratorPath: kappa is not finite");
	}
}

GeneratorPath GeneratorPath::constant(const HermitianOperator& lambda)
{
	Options o;
	o.constant = true;
	return GeneratorPath(lambda.dim(), [lambda](double) { return lambda; }, Smoothness::norm_C1, o);
}

GeneratorPath GeneratorPath::zero(Index dim)
{
	return constant(HermitianOperator::zero(dim));
}

HermitianOperator GeneratorPath::operator()(double s) const
{
	HermitianOperator l = sampler_(s);
	if(l.dim() != dim_) {
		throw std::invalid_argument("GeneratorPath: sampler returned wrong dimension");
	}
	return l;
}

ComplexMatrix GeneratorPath::derivative(double s) const
{
	constexpr double h = 1e-6;
	if(constant_) {
		return ComplexMatrix::Zero(dim_, dim_);
	}
	if(s - h < 0.0) {
		return ((*this)(s + h).matrix() - (*this)(s).matrix()) / h;
	}
	if(s + h > 1.0) {
		return ((*this)(s).matrix() - (*this)(s - h).matrix()) / h;
	}
	return ((*this)(s + h).matrix() - (*this)(s - h).matrix()) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Evolution helpers
// ---------------------------------------------------------------------------

std::size_t Evolution::index_of(double s) const
{
	const auto it = std::lower_bound(s_grid.begin(), s_grid.end(), s);
	if(it == s_grid.end() || *it != s) {
		std::ostringstream msg;
		msg << "s = " << s << " is not a grid point; interpolation is not supported";
		throw std::out_of_range(msg.str());
	}
	return static_cast<std::size_t>(it - s_grid.begin());
}

double default_step(double tau, double h0_norm, double kappa)
{
	const double rate = tau * h0_norm + kappa;
	return rate > 0.0 ? std::min(1e-3, 0.1 / rate) : 1e-3;
}

std::vector<double> uniform_grid(int intervals)
{
	if(intervals < 1) {
		throw std::invalid_argument("uniform_grid: intervals must be positive");
	}
	std::vector<double> g(static_cast<std::size_t>(intervals) + 1);
	for(int i = 0; i <= intervals; ++i) {
		g[static_cast<std::size_t>(i)] = static_cast<double>(i) / intervals;
	}
	g.back() = 1.0;
	return g;
}

// ---------------------------------------------------------------------------
// evolve / comparison operator
// ---------------------------------------------------------------------------

PropagatorResult evolve(const HermitianOperator& h0, const GeneratorPath& path, double tau,
	const std::vector<double>& s_grid, std::optional<double> step)
{
	if(!(tau > 0.0) || !std::isfinite(tau)) {
		throw std::invalid_argument("evolve: tau must be positive");
	}
	if(h0.dim() != path.dim()) {
		throw std::invalid_argument("evolve: H_o and path dimensions differ");
	}
	check_grid(s_grid);
	const double h = step.value_or(default_step(tau, operator_norm(h0.matrix()), path.kappa()));
	if(!(h > 0.0)) {
		throw std::invalid_argument("evolve: step must be positive");
	}

	PropagatorResult r;
	r.tau = tau;
	r.s_grid = s_grid;
	r.step = h;
	r.lower_accuracy = path.smoothness() == Smoothness::norm_L1;
	r.unitaries.reserve(s_grid.size());
	r.unitaries.push_back(UnitaryOperator::identity(h0.dim()));

	const ComplexMatrix stiff = tau * h0.matrix();
	ComplexMatrix w = ComplexMatrix::Identity(h0.dim(), h0.dim());
	const auto segs = segments(s_grid, path.breakpoints(), h);

	if(path.is_constant()) {
		r.scheme = "exact exponential per grid interval (constant generator)";
		const EigenPair e = eigen_pair(stiff + path(0.0).matrix());
		for(const Segment& seg : segs) {
			w = exp_from(e, seg.b - seg.a) * w;
			if(seg.grid_index) {
				r.unitaries.push_back(checked(w, h, "evolve"));
			}
		}
	} else {
		r.scheme = "exponential midpoint";
		for(const Segment& seg : segs) {
			const double dh = (seg.b - seg.a) / seg.substeps;
			for(int j = 0; j < seg.substeps; ++j) {
				const double mid = seg.a + (j + 0.5) * dh;
				w = detail::exp_minus_i(stiff + path(mid).matrix(), dh) * w;
			}
			if(seg.grid_index) {
				r.unitaries.push_back(checked(w, h, "evolve"));
			}
		}
		if(r.lower_accuracy) {
			r.scheme += " (norm_L1 path, lower accuracy)";
		}
	}
	for(const auto& u : r.unitaries) {
		r.max_drift = std::max(r.max_drift, u.drift());
	}
	return r;
}

UnitaryOperator comparison_operator(
	const SpectralDecomposition& h0, const PropagatorResult& result, double t, double s)
{
	const ComplexMatrix& wt = result.at(t).matrix();
	const ComplexMatrix& ws = result.at(s).matrix();
	const UnitaryOperator phase = unitary_exponential(h0, -result.tau * (t - s));
	return UnitaryOperator(phase.matrix() * wt * ws.adjoint(), kDriftTolerance);
}

// ---------------------------------------------------------------------------
// Dyson series
// ---------------------------------------------------------------------------

namespace {

std::vector<ComplexMatrix> dyson_terms(const SpectralDecomposition& h0, const GeneratorPath& path,
	double tau, int order, double t, double s, int quad_points, std::vector<std::string>& warnings)
{
	if(order < 0 || order > 8) {
		throw std::invalid_argument("dyson: order must be in [0, 8]");
	}
	if(!(s <= t)) {
		throw std::invalid_argument("dyson: requires s <= t");
	}
	if(quad_points < 1) {
		throw std::invalid_argument("dyson: quad_points must be positive");
	}
	if(h0.dim() != path.dim()) {
		throw std::invalid_argument("dyson: H_o and path dimensions differ");
	}
	const double needed = 10.0 * tau * (t - s) * h0.norm() / (2.0 * M_PI);
	if(quad_points < needed) {
		std::ostringstream msg;
		msg << "quad_points = " << quad_points << " below " << std::ceil(needed)
			<< " needed to resolve the kernel oscillation";
		warnings.push_back(msg.str());
	}

	const Index n = h0.dim();
	const ComplexMatrix& v = h0.eigenvectors();
	const Eigen::VectorXd& lam = h0.eigenvalues();
	auto kernel = [&](double r) {
		ComplexMatrix k = v.adjoint() * path(r).matrix() * v;
		ComplexVector p(n);
		for(Index i = 0; i < n; ++i) {
			p(i) = std::exp(Complex(0.0, tau * (r - s) * lam(i)));
		}
		return ComplexMatrix(-kI * (p.asDiagonal() * k * p.conjugate().asDiagonal()));
	};

	std::vector<ComplexMatrix> a(static_cast<std::size_t>(order) + 1, ComplexMatrix::Zero(n, n));
	a[0] = ComplexMatrix::Identity(n, n);
	if(t > s && order > 0) {
		const double h = (t - s) / quad_points;
		ComplexMatrix k_prev = kernel(s);
		// A^{k-1} at the previous node, times the kernel there.
		std::vector<ComplexMatrix> prev_products(static_cast<std::size_t>(order));
		for(int k = 1; k <= order; ++k) {
			prev_products[static_cast<std::size_t>(k - 1)] = k_prev * a[static_cast<std::size_t>(k - 1)];
		}
		for(int m = 0; m < quad_points; ++m) {
			const double x = (m + 1 == quad_points) ? t : s + (m + 1) * h;
			const ComplexMatrix k_next = kernel(x);
			for(int k = 1; k <= order; ++k) {
				const auto ku = static_cast<std::size_t>(k);
				const ComplexMatrix cur = k_next * a[ku - 1];
				a[ku] += 0.5 * h * (prev_products[ku - 1] + cur);
			}
			for(int k = 1; k <= order; ++k) {
				prev_products[static_cast<std::size_t>(k - 1)] = k_next * a[static_cast<std::size_t>(k - 1)];
			}
		}
	}
	for(std::size_t k = 1; k < a.size(); ++k) {
		a[k] = v * a[k] * v.adjoint();
	}
	return a;
}

} // namespace

DysonTerm dyson_term(const SpectralDecomposition& h0, const GeneratorPath& path, double tau,
	int n, double t, double s, int quad_points)
{
	DysonTerm out;
	auto terms = dyson_terms(h0, path, tau, n, t, s, quad_points, out.warnings);
	out.value = std::move(terms.back());
	return out;
}

double exponential_tail(double x, int order)
{
	if(!(x >= 0.0) || order < 0) {
		throw std::invalid_argument("exponential_tail: requires x >= 0 and order >= 0");
	}
	if(x == 0.0) {
		return 0.0;
	}
	double term = 1.0;
	for(int k = 1; k <= order + 1; ++k) {
		term *= x / k;
	}
	double sum = 0.0;
	for(int k = order + 1;; ++k) {
		sum += term;
		if(k > x && term <= 1e-17 * sum) {
			break;
		}
		term *= x / (k + 1);
	}
	return sum;
}

DysonSeries dyson_series(const SpectralDecomposition& h0, const GeneratorPath& path,
	double tau, double t, double s, int order, int quad_points)
{
	DysonSeries out;
	auto terms = dyson_terms(h0, path, tau, order, t, s, quad_points, out.warnings);
	out.sum = ComplexMatrix::Zero(h0.dim(), h0.dim());
	for(auto& m : terms) {
		out.sum += m;
		out.terms.push_back(DysonTerm{std::move(m), {}});
	}
	out.remainder_bound = exponential_tail(path.kappa() * (t - s), order);
	out.unitarity_defect = unitarity_drift(out.sum);
	return out;
}

// ---------------------------------------------------------------------------
// Mollifier
// ---------------------------------------------------------------------------

namespace {

double raw_bump(double x)
{
	return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

} // namespace

MollifierSpec MollifierSpec::standard(double epsilon)
{
	static const double mass = integrate_piecewise(raw_bump, -1.0, 1.0, {}, 64, gauss_legendre(16));
	return MollifierSpec{epsilon, [](double x) { return raw_bump(x) / mass; }};
}

double MollifierSpec::bump_integral() const
{
	return integrate_piecewise(bump, -1.0, 1.0, {}, 64, gauss_legendre(16));
}

GeneratorPath mollify(const GeneratorPath& path, const MollifierSpec& spec)
{
	if(!(spec.epsilon > 0.0 && spec.epsilon < 0.5)) {
		throw std::invalid_argument("mollify: epsilon must lie in (0, 1/2)");
	}
	if(!spec.bump) {
		throw std::invalid_argument("mollify: bump is empty");
	}
	const double mass = spec.bump_integral();
	if(!(std::abs(mass - 1.0) <= 1e-8)) {
		std::ostringstream msg;
		msg << "mollify: bump integral " << mass << " differs from 1 by more than 1e-8";
		throw std::invalid_argument(msg.str());
	}
	GeneratorPath::Options opts;
	opts.breakpoints = path.breakpoints();
	if(path.is_constant()) {
		opts.constant = true;
		return GeneratorPath(path.dim(), path.sampler(), Smoothness::norm_C1, opts);
	}

	const GaussRule rule = gauss_legendre(16);
	std::vector<double> kinks = path.breakpoints();
	kinks.push_back(0.0);
	kinks.push_back(1.0);
	const double eps = spec.epsilon;
	auto sampler = [path, spec, rule, kinks, eps](double s) {
		// Lambda_eps(s) = int phi(u) Lambda(s - eps u) du over u in [-1, 1].
		std::vector<double> cuts{-1.0, 1.0};
		for(double b : kinks) {
			const double u = (s - b) / eps;
			if(u > -1.0 && u < 1.0) {
				cuts.push_back(u);
			}
		}
		std::sort(cuts.begin(), cuts.end());
		constexpr int panels = 4;
		ComplexMatrix acc = ComplexMatrix::Zero(path.dim(), path.dim());
		double weight = 0.0;
		for(std::size_t p = 0; p + 1 < cuts.size(); ++p) {
			const double width = (cuts[p + 1] - cuts[p]) / panels;
			for(int k = 0; k < panels; ++k) {
				const double mid = cuts[p] + (k + 0.5) * width;
				for(std::size_t i = 0; i < rule.nodes.size(); ++i) {
					const double u = mid + 0.5 * width * rule.nodes[i];
					const double w = 0.5 * width * rule.weights[i] * spec.bump(u);
					if(w == 0.0) {
						continue;
					}
					const double r = std::clamp(s - eps * u, 0.0, 1.0);
					acc += w * path(r).matrix();
					weight += w;
				}
			}
		}
		// Dividing by the discrete mass keeps constants exact.
		return HermitianOperator::hermitian_part(acc / weight);
	};
	return GeneratorPath(path.dim(), sampler, Smoothness::norm_C1, opts);
}

double path_l1_distance(const GeneratorPath& a, const GeneratorPath& b, int panels)
{
	if(a.dim() != b.dim()) {
		throw std::invalid_argument("path_l1_distance: dimensions differ");
	}
	std::vector<double> cuts = a.breakpoints();
	cuts.insert(cuts.end(), b.breakpoints().begin(), b.breakpoints().end());
	return integrate_piecewise(
		[&](double s) { return operator_norm(a(s).matrix() - b(s).matrix()); }, 0.0, 1.0, cuts,
		panels, gauss_legendre(8));
}

// ---------------------------------------------------------------------------
// Interaction frame and the limit evolution
// ---------------------------------------------------------------------------

Evolution interaction_frame(const GeneratorPath& path, const std::vector<double>& s_grid,
	std::optional<double> step)
{
	require_c1(path, "interaction_frame");
	check_grid(s_grid);
	const double h = frame_step(path, step);
	Evolution r;
	r.s_grid = s_grid;
	r.step = h;
	r.unitaries.push_back(UnitaryOperator::identity(path.dim()));
	ComplexMatrix v = ComplexMatrix::Identity(path.dim(), path.dim());
	const auto segs = segments(s_grid, path.breakpoints(), h);
	if(path.is_constant()) {
		r.scheme = "exact exponential per grid interval (constant generator)";
		const EigenPair e = eigen_pair(path(0.0).matrix());
		for(const Segment& seg : segs) {
			v = exp_from(e, seg.b - seg.a) * v;
			if(seg.grid_index) {
				r.unitaries.push_back(checked(v, h, "interaction_frame"));
			}
		}
	} else {
		r.scheme = "exponential midpoint";
		for(const Segment& seg : segs) {
			const double dh = (seg.b - seg.a) / seg.substeps;
			for(int j = 0; j < seg.substeps; ++j) {
				v = detail::exp_minus_i(path(seg.a + (j + 0.5) * dh).matrix(), dh) * v;
			}
			if(seg.grid_index) {
				r.unitaries.push_back(checked(v, h, "interaction_frame"));
			}
		}
	}
	for(const auto& u : r.unitaries) {
		r.max_drift = std::max(r.max_drift, u.drift());
	}
	return r;
}

PropagatorResult interaction_frame_reconstruction(const HermitianOperator& h0,
	const GeneratorPath& path, double tau, const std::vector<double>& s_grid,
	std::optional<double> step)
{
	require_c1(path, "interaction_frame_reconstruction");
	if(!(tau > 0.0)) {
		throw std::invalid_argument("interaction_frame_reconstruction: tau must be positive");
	}
	if(h0.dim() != path.dim()) {
		throw std::invalid_argument("interaction_frame_reconstruction: dimensions differ");
	}
	check_grid(s_grid);
	const double h = step.value_or(default_step(tau, operator_norm(h0.matrix()), path.kappa()));
	PropagatorResult r;
	r.tau = tau;
	r.s_grid = s_grid;
	r.step = h;
	r.scheme = "interaction frame: W = V Z";
	r.unitaries.push_back(UnitaryOperator::identity(h0.dim()));
	const Index n = h0.dim();
	ComplexMatrix v = ComplexMatrix::Identity(n, n);
	ComplexMatrix z = ComplexMatrix::Identity(n, n);
	for(const Segment& seg : segments(s_grid, path.breakpoints(), h)) {
		const double dh = (seg.b - seg.a) / seg.substeps;
		for(int j = 0; j < seg.substeps; ++j) {
			const EigenPair e = eigen_pair(path(seg.a + (j + 0.5) * dh).matrix());
			const ComplexMatrix v_mid = exp_from(e, 0.5 * dh) * v;
			ComplexMatrix g = tau * (v_mid.adjoint() * h0.matrix() * v_mid);
			g = 0.5 * (g + g.adjoint()).eval();
			z = detail::exp_minus_i(g, dh) * z;
			v = exp_from(e, dh) * v;
		}
		if(seg.grid_index) {
			r.unitaries.push_back(checked(v * z, h, "interaction_frame_reconstruction"));
		}
	}
	for(const auto& u : r.unitaries) {
		r.max_drift = std::max(r.max_drift, u.drift());
	}
	return r;
}

Evolution omega_infinity(const SpectralDecomposition& h0, const GeneratorPath& path,
	const std::vector<double>& s_grid, std::optional<double> step)
{
	require_c1(path, "omega_infinity");
	if(h0.dim() != path.dim()) {
		throw std::invalid_argument("omega_infinity: dimensions differ");
	}
	check_grid(s_grid);
	const double h = frame_step(path, step);
	const ComplexMatrix& basis = h0.eigenvectors();
	const auto& levels = h0.levels();

	std::vector<ComplexMatrix> blocks;
	for(const auto& l : levels) {
		blocks.push_back(ComplexMatrix::Identity(l.multiplicity, l.multiplicity));
	}
	auto advance = [&](const ComplexMatrix& lambda_eig, double dh) {
		for(std::size_t k = 0; k < levels.size(); ++k) {
			const auto& l = levels[k];
			const ComplexMatrix b = lambda_eig.block(l.offset, l.offset, l.multiplicity, l.multiplicity);
			if(l.multiplicity == 1) {
				blocks[k] *= std::exp(Complex(0.0, -dh * b(0, 0).real()));
			} else {
				blocks[k] = detail::exp_minus_i(0.5 * (b + b.adjoint()), dh) * blocks[k];
			}
		}
	};
	auto assemble = [&]() {
		ComplexMatrix d = ComplexMatrix::Zero(h0.dim(), h0.dim());
		for(std::size_t k = 0; k < levels.size(); ++k) {
			const auto& l = levels[k];
			d.block(l.offset, l.offset, l.multiplicity, l.multiplicity) = blocks[k];
		}
		return ComplexMatrix(basis * d * basis.adjoint());
	};

	Evolution r;
	r.s_grid = s_grid;
	r.step = h;
	r.unitaries.push_back(UnitaryOperator::identity(h0.dim()));
	const auto segs = segments(s_grid, path.breakpoints(), h);
	if(path.is_constant()) {
		r.scheme = "block-diagonal exact exponential per grid interval";
		const ComplexMatrix lam = basis.adjoint() * path(0.0).matrix() * basis;
		for(const Segment& seg : segs) {
			advance(lam, seg.b - seg.a);
			if(seg.grid_index) {
				r.unitaries.push_back(checked(assemble(), h, "omega_infinity"));
			}
		}
	} else {
		r.scheme = "block-diagonal exponential midpoint";
		for(const Segment& seg : segs) {
			const double dh = (seg.b - seg.a) / seg.substeps;
			for(int j = 0; j < seg.substeps; ++j) {
				advance(basis.adjoint() * path(seg.a + (j + 0.5) * dh).matrix() * basis, dh);
			}
			if(seg.grid_index) {
				r.unitaries.push_back(checked(assemble(), h, "omega_infinity"));
			}
		}
	}
	for(const auto& u : r.unitaries) {
		r.max_drift = std::max(r.max_drift, u.drift());
	}
	return r;
}

double richardson_step_error(const PropagatorResult& coarse, const PropagatorResult& fine)
{
	double worst = 0.0;
	for(std::size_t i = 0; i < coarse.s_grid.size(); ++i) {
		const auto& wf = fine.at(coarse.s_grid[i]);
		worst = std::max(worst, operator_norm(coarse.unitaries[i].matrix() - wf.matrix()));
	}
	return 4.0 / 3.0 * worst;
}

} // namespace adiabatic
