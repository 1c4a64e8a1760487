#include "adiabatic/propagator.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace adiabatic {

namespace {

constexpr const char* kFormat = "adiabatic-prop";

std::string shortest(double x)
{
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof buf, x);
	return std::string(buf, res.ptr);
}

} // namespace

std::string propagator_filename(const std::string& scenario, double tau)
{
	return "run_" + scenario + "_" + shortest(tau) + ".prop";
}

void write_propagator(std::ostream& os, const PropagatorResult& result, const std::string& scenario)
{
	const Index dim = result.unitaries.empty() ? 0 : result.unitaries.front().dim();
	nlohmann::json meta = {
		{"format", kFormat},
		{"version", 1},
		{"scenario", scenario},
		{"tau", result.tau},
		{"step", result.step},
		{"max_drift", result.max_drift},
		{"scheme", result.scheme},
		{"lower_accuracy", result.lower_accuracy},
		{"dim", dim},
		{"points", result.s_grid.size()},
	};
	os << meta.dump() << '\n';
	char buf[64];
	for(std::size_t i = 0; i < result.s_grid.size(); ++i) {
		std::snprintf(buf, sizeof buf, "%.17g", result.s_grid[i]);
		os << "s " << buf << '\n';
		write_matrix(os, result.unitaries[i].matrix());
	}
}

PropagatorResult read_propagator(std::istream& is, std::string* scenario)
{
	std::string line;
	if(!std::getline(is, line)) {
		throw std::invalid_argument("read_propagator: missing metadata line");
	}
	nlohmann::json meta;
	try {
		meta = nlohmann::json::parse(line);
	} catch(const nlohmann::json::exception& e) {
		throw std::invalid_argument(std::string("read_propagator: bad metadata: ") + e.what());
	}
	if(meta.value("format", "") != kFormat) {
		throw std::invalid_argument("read_propagator: not a propagator file");
	}
	PropagatorResult r;
	r.tau = meta.at("tau").get<double>();
	r.step = meta.at("step").get<double>();
	r.scheme = meta.at("scheme").get<std::string>();
	r.lower_accuracy = meta.at("lower_accuracy").get<bool>();
	const auto points = meta.at("points").get<std::size_t>();
	const auto dim = meta.at("dim").get<Index>();
	if(scenario) {
		*scenario = meta.at("scenario").get<std::string>();
	}
	for(std::size_t i = 0; i < points; ++i) {
		std::string tag;
		std::string value;
		if(!(is >> tag >> value) || tag != "s") {
			throw std::invalid_argument("read_propagator: expected 's <value>'");
		}
		r.s_grid.push_back(std::stod(value));
		ComplexMatrix m = read_matrix(is);
		if(m.rows() != dim) {
			throw std::invalid_argument("read_propagator: matrix dimension mismatch");
		}
		r.unitaries.emplace_back(std::move(m));
		r.max_drift = std::max(r.max_drift, r.unitaries.back().drift());
	}
	return r;
}

} // namespace adiabatic
