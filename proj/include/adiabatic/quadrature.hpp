#pragma once

#include <functional>
#include <vector>

namespace adiabatic {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
	std::vector<double> nodes;
	std::vector<double> weights;
};

GaussRule gauss_legendre(int order);

/// Composite Gauss-Legendre integral of f over [a, b]. The interval is first cut at
/// every point of `cuts` inside (a, b), then each piece is split into `panels` panels.
/// Nodes never touch a cut, so one-sided values are used at discontinuities.
double integrate_piecewise(const std::function<double(double)>& f, double a, double b,
	const std::vector<double>& cuts, int panels, const GaussRule& rule);

} // namespace adiabatic
