#include "adiabatic/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace adiabatic {

GaussRule gauss_legendre(int order)
{
	if(order < 1) {
		throw std::invalid_argument("gauss_legendre: order must be positive");
	}
	GaussRule rule;
	rule.nodes.resize(static_cast<std::size_t>(order));
	rule.weights.resize(static_cast<std::size_t>(order));
	const int half = (order + 1) / 2;
	for(int i = 0; i < half; ++i) {
		// Newton iteration on P_n from the Chebyshev-like initial guess.
		double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
		double dp = 0.0;
		for(int it = 0; it < 100; ++it) {
			double p0 = 1.0;
			double p1 = x;
			for(int k = 2; k <= order; ++k) {
				const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
				p0 = p1;
				p1 = p2;
			}
			if(order == 1) {
				p1 = x;
				p0 = 1.0;
			}
			dp = order * (x * p1 - p0) / (x * x - 1.0);
			const double dx = p1 / dp;
			x -= dx;
			if(std::abs(dx) < 1e-16) {
				break;
			}
		}
		const double w = 2.0 / ((1.0 - x * x) * dp * dp);
		rule.nodes[static_cast<std::size_t>(i)] = -x;
		rule.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
		rule.weights[static_cast<std::size_t>(i)] = w;
		rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
	}
	return rule;
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
	const std::vector<double>& cuts, int panels, const GaussRule& rule)
{
	if(!(b >= a) || panels < 1) {
		throw std::invalid_argument("integrate_piecewise: requires a <= b and panels >= 1");
	}
	std::vector<double> points{a};
	for(double c : cuts) {
		if(c > a && c < b) {
			points.push_back(c);
		}
	}
	points.push_back(b);
	std::sort(points.begin(), points.end());
	double total = 0.0;
	for(std::size_t p = 0; p + 1 < points.size(); ++p) {
		const double width = (points[p + 1] - points[p]) / panels;
		for(int k = 0; k < panels; ++k) {
			const double lo = points[p] + k * width;
			const double mid = lo + 0.5 * width;
			double acc = 0.0;
			for(std::size_t i = 0; i < rule.nodes.size(); ++i) {
				acc += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
			}
			total += 0.5 * width * acc;
		}
	}
	return total;
}

} // namespace adiabatic
