#include "adiabatic/spectral_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adiabatic {

namespace {

ComplexMatrix levelwise_sum(const SpectralDecomposition& d, const std::vector<double>& weights)
{
	ComplexVector w(d.dim());
	const auto& owner = d.level_of_column();
	for(Index i = 0; i < d.dim(); ++i) {
		w(i) = weights[owner[static_cast<std::size_t>(i)]];
	}
	const ComplexMatrix& v = d.eigenvectors();
	return v * w.asDiagonal() * v.adjoint();
}

template <typename Pred>
HermitianOperator select_levels(const SpectralDecomposition& d, Pred keep)
{
	std::vector<double> w(d.levels().size(), 0.0);
	for(std::size_t k = 0; k < w.size(); ++k) {
		if(keep(d.levels()[k].eigenvalue)) {
			w[k] = 1.0;
		}
	}
	return HermitianOperator::hermitian_part(levelwise_sum(d, w));
}

bool close(double a, double b)
{
	return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

HermitianOperator projection_leq(const SpectralDecomposition& d, double E)
{
	const double tol = d.cluster_tol();
	return select_levels(d, [&](double e) { return e <= E + tol; });
}

HermitianOperator projection_geq(const SpectralDecomposition& d, double E)
{
	const double tol = d.cluster_tol();
	return select_levels(d, [&](double e) { return e >= E - tol; });
}

HermitianOperator projection_eq(const SpectralDecomposition& d, double E)
{
	const auto level = d.find_level(E);
	if(!level) {
		return HermitianOperator::zero(d.dim());
	}
	return d.projection(*level);
}

HermitianOperator band_projection(
	const SpectralDecomposition& d, double a, double b, bool closed_left, bool closed_right)
{
	if(!(a <= b)) {
		throw std::invalid_argument("band_projection: requires a <= b");
	}
	const double tol = d.cluster_tol();
	return select_levels(d, [&](double e) {
		const bool above = closed_left ? e >= a - tol : e > a + tol;
		const bool below = closed_right ? e <= b + tol : e < b - tol;
		return above && below;
	});
}

// ---------------------------------------------------------------------------

ContinuousPart ContinuousPart::zero()
{
	return constant(0.0);
}

ContinuousPart ContinuousPart::constant(double c)
{
	ContinuousPart p;
	p.name = c == 0.0 ? "zero" : "constant";
	p.value = [c](double) { return c; };
	p.derivative = [](double, int) { return 0.0; };
	p.at_infinity = c;
	p.variation = 0.0;
	return p;
}

ContinuousPart ContinuousPart::fermi_dirac(double mu, double beta)
{
	if(!(beta > 0.0) || !std::isfinite(mu)) {
		throw std::invalid_argument("fermi_dirac: requires beta > 0 and finite mu");
	}
	ContinuousPart p;
	p.name = "fermi_dirac";
	p.value = [mu, beta](double x) {
		const double z = beta * (x - mu);
		if(z > 0.0) {
			const double e = std::exp(-z);
			return e / (1.0 + e);
		}
		return 1.0 / (1.0 + std::exp(z));
	};
	p.derivative = [mu, beta, v = p.value](double x, int) {
		const double f = v(x);
		return -beta * f * (1.0 - f);
	};
	p.at_infinity = 0.0;
	p.variation = 1.0;
	return p;
}

ContinuousPart ContinuousPart::piecewise_linear(std::vector<std::pair<double, double>> table)
{
	if(table.empty()) {
		throw std::invalid_argument("piecewise_linear: empty table");
	}
	for(std::size_t i = 1; i < table.size(); ++i) {
		if(!(table[i].first > table[i - 1].first)) {
			throw std::invalid_argument("piecewise_linear: knots must be strictly increasing");
		}
	}
	ContinuousPart p;
	p.name = "piecewise_linear";
	p.value = [table](double x) {
		if(x <= table.front().first) {
			return table.front().second;
		}
		if(x >= table.back().first) {
			return table.back().second;
		}
		const auto it = std::upper_bound(table.begin(), table.end(), x,
			[](double v, const std::pair<double, double>& k) { return v < k.first; });
		const auto& hi = *it;
		const auto& lo = *(it - 1);
		const double t = (x - lo.first) / (hi.first - lo.first);
		return lo.second + t * (hi.second - lo.second);
	};
	p.derivative = [table](double x, int side) {
		// Slope of the piece containing x on the requested side.
		for(std::size_t i = 1; i < table.size(); ++i) {
			const double a = table[i - 1].first;
			const double b = table[i].first;
			const bool inside = side >= 0 ? (x >= a && x < b) : (x > a && x <= b);
			if(inside) {
				return (table[i].second - table[i - 1].second) / (b - a);
			}
		}
		return 0.0;
	};
	p.at_infinity = table.back().second;
	double var = 0.0;
	for(std::size_t i = 1; i < table.size(); ++i) {
		var += std::abs(table[i].second - table[i - 1].second);
		p.breakpoints.push_back(table[i - 1].first);
	}
	p.breakpoints.push_back(table.back().first);
	p.variation = var;
	return p;
}

double ContinuousPart::slope(double x, int side) const
{
	if(derivative) {
		return derivative(x, side);
	}
	const double h = 1e-5 * std::max(1.0, std::abs(x));
	return (value(x + h) - value(x - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------

BVFunction::BVFunction(ContinuousPart continuous, std::vector<Jump> jumps, double at_infinity,
	std::optional<double> declared_variation)
	: continuous_(std::move(continuous)), jumps_(std::move(jumps)), at_infinity_(at_infinity)
{
	if(!continuous_.value) {
		throw std::invalid_argument("BVFunction: continuous part has no value callable");
	}
	for(std::size_t j = 0; j < jumps_.size(); ++j) {
		auto& jump = jumps_[j];
		if(!std::isfinite(jump.at) || !std::isfinite(jump.left) || !std::isfinite(jump.right)) {
			throw std::invalid_argument("BVFunction: non-finite jump entry");
		}
		if(j > 0 && !(jump.at > jumps_[j - 1].at)) {
			throw std::invalid_argument("BVFunction: jump locations must be strictly increasing");
		}
		const double expected_below = j > 0 ? jumps_[j - 1].right : jump.left;
		if(jump.below) {
			if(j > 0 && !close(*jump.below, expected_below)) {
				std::ostringstream msg;
				msg << "BVFunction: jump at " << jump.at << " has below=" << *jump.below
					<< " but the preceding jump leaves the value at " << expected_below;
				throw std::invalid_argument(msg.str());
			}
		} else {
			jump.below = expected_below;
		}
	}
	if(continuous_.at_infinity && !close(*continuous_.at_infinity + jump_at_infinity(), at_infinity_)) {
		std::ostringstream msg;
		msg << "BVFunction: at_infinity=" << at_infinity_ << " inconsistent with continuous limit "
			<< *continuous_.at_infinity << " plus jump part " << jump_at_infinity();
		throw std::invalid_argument(msg.str());
	}
	const double jv = jump_variation();
	declared_variation_ = declared_variation ? *declared_variation : continuous_.variation + jv;
	if(!std::isfinite(declared_variation_)) {
		throw std::invalid_argument("BVFunction: declared variation must be finite");
	}
	double defects = 0.0;
	for(const auto& jump : jumps_) {
		defects += std::abs(jump.left - jump.right);
	}
	if(defects > declared_variation_ * (1.0 + 1e-12) + 1e-15) {
		throw std::invalid_argument("BVFunction: jump sizes exceed declared variation");
	}
}

BVFunction BVFunction::step_leq(double e0)
{
	return BVFunction(ContinuousPart::zero(), {{e0, 1.0, 0.0, 1.0}}, 0.0);
}

BVFunction BVFunction::step_lt(double e0)
{
	return BVFunction(ContinuousPart::zero(), {{e0, 0.0, 0.0, 1.0}}, 0.0);
}

BVFunction BVFunction::step_geq(double e0)
{
	return BVFunction(ContinuousPart::zero(), {{e0, 1.0, 1.0, 0.0}}, 1.0);
}

BVFunction BVFunction::kronecker_delta(double e0)
{
	return BVFunction(ContinuousPart::zero(), {{e0, 1.0, 0.0, 0.0}}, 0.0);
}

BVFunction BVFunction::from_continuous(ContinuousPart c)
{
	if(!c.at_infinity) {
		throw std::invalid_argument("BVFunction::from_continuous: limit at infinity unknown");
	}
	const double inf = *c.at_infinity;
	return BVFunction(std::move(c), {}, inf);
}

BVFunction BVFunction::operator+(const BVFunction& o) const
{
	ContinuousPart c;
	c.name = continuous_.name + "+" + o.continuous_.name;
	c.value = [a = continuous_, b = o.continuous_](double x) { return a.value(x) + b.value(x); };
	c.derivative = [a = continuous_, b = o.continuous_](double x, int side) {
		return a.slope(x, side) + b.slope(x, side);
	};
	if(continuous_.at_infinity && o.continuous_.at_infinity) {
		c.at_infinity = *continuous_.at_infinity + *o.continuous_.at_infinity;
	}
	c.variation = continuous_.variation + o.continuous_.variation;
	c.breakpoints = continuous_.breakpoints;
	c.breakpoints.insert(c.breakpoints.end(), o.continuous_.breakpoints.begin(),
		o.continuous_.breakpoints.end());
	std::sort(c.breakpoints.begin(), c.breakpoints.end());
	c.breakpoints.erase(std::unique(c.breakpoints.begin(), c.breakpoints.end()), c.breakpoints.end());

	std::vector<double> locations;
	for(const auto& j : jumps_) {
		locations.push_back(j.at);
	}
	for(const auto& j : o.jumps_) {
		locations.push_back(j.at);
	}
	std::sort(locations.begin(), locations.end());
	locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
	std::vector<Jump> merged;
	for(double e : locations) {
		merged.push_back({e, jump_value(e) + o.jump_value(e),
			jump_right_limit(e) + o.jump_right_limit(e),
			jump_left_limit(e) + o.jump_left_limit(e)});
	}
	return BVFunction(std::move(c), std::move(merged), at_infinity_ + o.at_infinity_,
		declared_variation_ + o.declared_variation_);
}

double BVFunction::jump_value(double x) const
{
	if(jumps_.empty()) {
		return 0.0;
	}
	const auto it = std::lower_bound(
		jumps_.begin(), jumps_.end(), x, [](const Jump& j, double v) { return j.at < v; });
	if(it != jumps_.end() && it->at == x) {
		return it->left;
	}
	if(it == jumps_.begin()) {
		return *jumps_.front().below;
	}
	return (it - 1)->right;
}

double BVFunction::jump_left_limit(double x) const
{
	const auto it = std::lower_bound(
		jumps_.begin(), jumps_.end(), x, [](const Jump& j, double v) { return j.at < v; });
	if(it != jumps_.end() && it->at == x) {
		return *it->below;
	}
	return jump_value(x);
}

double BVFunction::jump_right_limit(double x) const
{
	const auto it = std::lower_bound(
		jumps_.begin(), jumps_.end(), x, [](const Jump& j, double v) { return j.at < v; });
	if(it != jumps_.end() && it->at == x) {
		return it->right;
	}
	return jump_value(x);
}

double BVFunction::jump_at_infinity() const
{
	return jumps_.empty() ? 0.0 : jumps_.back().right;
}

double BVFunction::operator()(double x) const
{
	return continuous_.value(x) + jump_value(x);
}

double BVFunction::left_limit(double x) const
{
	return continuous_.value(x) + jump_left_limit(x);
}

double BVFunction::right_limit(double x) const
{
	return continuous_.value(x) + jump_right_limit(x);
}

double BVFunction::jump_variation() const
{
	double v = 0.0;
	for(const auto& j : jumps_) {
		v += std::abs(j.left - *j.below) + std::abs(j.right - j.left);
	}
	return v;
}

double total_variation(const BVFunction& f, const std::vector<double>& grid)
{
	if(!std::is_sorted(grid.begin(), grid.end())) {
		throw std::invalid_argument("total_variation: grid must be sorted");
	}
	if(grid.empty()) {
		return 0.0;
	}
	std::vector<double> points = grid;
	for(const auto& j : f.jumps()) {
		if(j.at >= grid.front() && j.at <= grid.back()) {
			points.push_back(j.at);
		}
	}
	std::sort(points.begin(), points.end());
	points.erase(std::unique(points.begin(), points.end()), points.end());

	const auto& jumps = f.jumps();
	auto is_jump = [&](double x) {
		return std::binary_search(jumps.begin(), jumps.end(), Jump{x, 0, 0, {}},
			[](const Jump& a, const Jump& b) { return a.at < b.at; });
	};

	double var = 0.0;
	bool have_prev = false;
	double prev = 0.0;
	auto visit = [&](double v) {
		if(have_prev) {
			var += std::abs(v - prev);
		}
		prev = v;
		have_prev = true;
	};
	for(double x : points) {
		if(is_jump(x)) {
			// Limits from outside the grid span do not belong to it.
			if(x > grid.front()) {
				visit(f.left_limit(x));
			}
			visit(f(x));
			if(x < grid.back()) {
				visit(f.right_limit(x));
			}
		} else {
			visit(f(x));
		}
	}
	return var;
}

// ---------------------------------------------------------------------------

HermitianOperator calculus_continuous(const SpectralDecomposition& d, const std::function<double(double)>& f)
{
	std::vector<double> w(d.levels().size());
	for(std::size_t k = 0; k < w.size(); ++k) {
		const double e = d.levels()[k].eigenvalue;
		w[k] = f(e);
		if(!std::isfinite(w[k])) {
			std::ostringstream msg;
			msg << "calculus_continuous: function not finite at eigenvalue " << e;
			throw std::domain_error(msg.str());
		}
	}
	return HermitianOperator::hermitian_part(levelwise_sum(d, w));
}

HermitianOperator calculus_bv(const SpectralDecomposition& d, const BVFunction& f, int quadrature_points)
{
	if(quadrature_points < 1) {
		throw std::invalid_argument("calculus_bv: quadrature_points must be positive");
	}
	const auto& levels = d.levels();
	const std::size_t L = levels.size();
	const double tol = d.cluster_tol();
	const ContinuousPart& c = f.continuous();

	// Trapezoid integral of c' over each gap between consecutive eigenvalues, with
	// breakpoints of c inserted so every sub-piece is smooth.
	std::vector<double> segment(L, 0.0);
	std::vector<double> grid;
	grid.reserve(L * static_cast<std::size_t>(quadrature_points) + 1);
	for(std::size_t k = 0; k + 1 < L; ++k) {
		const double lo = levels[k].eigenvalue;
		const double hi = levels[k + 1].eigenvalue;
		std::vector<double> cuts{lo};
		for(double b : c.breakpoints) {
			if(b > lo && b < hi) {
				cuts.push_back(b);
			}
		}
		cuts.push_back(hi);
		double integral = 0.0;
		for(std::size_t p = 0; p + 1 < cuts.size(); ++p) {
			const double a = cuts[p];
			const double b = cuts[p + 1];
			const double h = (b - a) / quadrature_points;
			double acc = 0.5 * (c.slope(a, +1) + c.slope(b, -1));
			grid.push_back(a);
			for(int i = 1; i < quadrature_points; ++i) {
				const double x = a + i * h;
				acc += c.slope(x, +1);
				grid.push_back(x);
			}
			integral += h * acc;
		}
		segment[k] = integral;
	}
	grid.push_back(levels.back().eigenvalue);

	const double measured = total_variation(f, grid);
	if(measured > f.declared_variation() * (1.0 + 1e-9) + 1e-12) {
		std::ostringstream msg;
		msg << "calculus_bv: measured variation " << measured << " exceeds declared variation "
			<< f.declared_variation() << " (malformed BVFunction)";
		throw std::invalid_argument(msg.str());
	}

	const double top = levels.back().eigenvalue;
	// int over (top, inf) of dc = c(inf) - c(top), with c(inf) = f(inf) - s(inf).
	const double tail = (f.at_infinity() - f.jump_at_infinity()) - c.value(top);

	std::vector<double> weights(L);
	double above = 0.0; // int_{lambda_k}^{top} c'
	for(std::size_t kk = L; kk-- > 0;) {
		if(kk + 1 < L) {
			above += segment[kk];
		}
		const double e = levels[kk].eigenvalue;
		double jump_measure = 0.0;
		double defect = 0.0;
		for(const auto& j : f.jumps()) {
			if(std::abs(j.at - e) <= tol) {
				defect += j.left - j.right;
			} else if(j.at > e) {
				jump_measure += j.right - *j.below;
			}
		}
		weights[kk] = f.at_infinity() - (above + tail + jump_measure) + defect;
	}
	return HermitianOperator::hermitian_part(levelwise_sum(d, weights));
}

// ---------------------------------------------------------------------------

SpectralFunction SpectralFunction::continuous_bounded(std::function<double(double)> f, std::string label)
{
	SpectralFunction s;
	s.kind_ = Kind::continuous_bounded;
	s.continuous_ = std::move(f);
	s.label_ = std::move(label);
	return s;
}

SpectralFunction SpectralFunction::continuous_vanishing(std::function<double(double)> f, std::string label)
{
	SpectralFunction s = continuous_bounded(std::move(f), std::move(label));
	s.kind_ = Kind::continuous_vanishing;
	return s;
}

SpectralFunction SpectralFunction::bounded_variation(BVFunction f, std::string label)
{
	SpectralFunction s;
	s.kind_ = Kind::bounded_variation;
	s.bv_ = std::move(f);
	s.label_ = std::move(label);
	return s;
}

SpectralFunction SpectralFunction::sum(SpectralFunction g, SpectralFunction h)
{
	if(!g.is_continuous() || h.kind_ != Kind::bounded_variation) {
		throw std::invalid_argument("SpectralFunction::sum: expects g continuous and h of bounded variation");
	}
	SpectralFunction s;
	s.kind_ = Kind::sum;
	s.label_ = g.label_ + "+" + h.label_;
	s.parts_.push_back(std::move(g));
	s.parts_.push_back(std::move(h));
	return s;
}

bool SpectralFunction::is_continuous() const noexcept
{
	return kind_ == Kind::continuous_bounded || kind_ == Kind::continuous_vanishing;
}

double SpectralFunction::operator()(double x) const
{
	switch(kind_) {
	case Kind::continuous_bounded:
	case Kind::continuous_vanishing:
		return continuous_(x);
	case Kind::bounded_variation:
		return (*bv_)(x);
	case Kind::sum:
		return parts_[0](x) + parts_[1](x);
	}
	return 0.0;
}

HermitianOperator SpectralFunction::apply(const SpectralDecomposition& d, int quadrature_points) const
{
	switch(kind_) {
	case Kind::continuous_bounded:
	case Kind::continuous_vanishing:
		return calculus_continuous(d, continuous_);
	case Kind::bounded_variation:
		return calculus_bv(d, *bv_, quadrature_points);
	case Kind::sum:
		return parts_[0].apply(d, quadrature_points) + parts_[1].apply(d, quadrature_points);
	}
	throw std::logic_error("SpectralFunction: unknown kind");
}

// ---------------------------------------------------------------------------

HermitianOperator block_diagonal_part(const SpectralDecomposition& d, const HermitianOperator& a)
{
	if(a.dim() != d.dim()) {
		throw std::invalid_argument("block_diagonal_part: dimension mismatch");
	}
	ComplexMatrix t = d.to_eigenbasis(a.matrix());
	const auto& owner = d.level_of_column();
	for(Index j = 0; j < t.cols(); ++j) {
		for(Index i = 0; i < t.rows(); ++i) {
			if(owner[static_cast<std::size_t>(i)] != owner[static_cast<std::size_t>(j)]) {
				t(i, j) = 0.0;
			}
		}
	}
	return HermitianOperator::hermitian_part(d.from_eigenbasis(t));
}

ComplexMatrix kato_commutator_solution(
	const SpectralDecomposition& d, const HermitianOperator& lambda, double e1, double e2)
{
	if(lambda.dim() != d.dim()) {
		throw std::invalid_argument("kato_commutator_solution: dimension mismatch");
	}
	const double tol = d.cluster_tol();
	if(!(e2 - e1 > tol)) {
		throw std::invalid_argument("kato_commutator_solution: requires E2 - E1 > cluster_tol");
	}
	const auto& levels = d.levels();
	const auto& owner = d.level_of_column();
	const Index n = d.dim();
	std::vector<char> lower(static_cast<std::size_t>(n)), upper(static_cast<std::size_t>(n));
	for(Index i = 0; i < n; ++i) {
		const double e = levels[owner[static_cast<std::size_t>(i)]].eigenvalue;
		lower[static_cast<std::size_t>(i)] = e <= e1 + tol;
		upper[static_cast<std::size_t>(i)] = e >= e2 - tol;
		if(lower[static_cast<std::size_t>(i)] && upper[static_cast<std::size_t>(i)]) {
			throw std::invalid_argument("kato_commutator_solution: gap narrower than the clustering tolerance");
		}
	}
	const ComplexMatrix t = d.to_eigenbasis(lambda.matrix());
	ComplexMatrix x = ComplexMatrix::Zero(n, n);
	for(Index j = 0; j < n; ++j) {
		if(!upper[static_cast<std::size_t>(j)]) {
			continue;
		}
		const double ej = levels[owner[static_cast<std::size_t>(j)]].eigenvalue;
		for(Index i = 0; i < n; ++i) {
			if(lower[static_cast<std::size_t>(i)]) {
				const double ei = levels[owner[static_cast<std::size_t>(i)]].eigenvalue;
				x(i, j) = t(i, j) / (ei - ej);
			}
		}
	}
	return d.from_eigenbasis(x);
}

} // namespace adiabatic
