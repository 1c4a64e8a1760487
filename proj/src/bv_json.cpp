#include "adiabatic/bv_json.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace adiabatic {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const char* where)
{
	for(const auto& item : j.items()) {
		if(!allowed.count(item.key())) {
			throw std::invalid_argument(std::string(where) + ": unknown key '" + item.key() + "'");
		}
	}
}

ContinuousPart continuous_from_json(const nlohmann::json& j)
{
	if(j.is_string()) {
		if(j.get<std::string>() == "zero") {
			return ContinuousPart::zero();
		}
		throw std::invalid_argument("BVFunction JSON: unknown continuous builtin '" + j.get<std::string>() + "'");
	}
	if(!j.is_object()) {
		throw std::invalid_argument("BVFunction JSON: 'continuous' must be a string or object");
	}
	if(j.contains("table")) {
		reject_unknown(j, {"table"}, "BVFunction JSON continuous");
		std::vector<std::pair<double, double>> table;
		for(const auto& row : j.at("table")) {
			if(!row.is_array() || row.size() != 2) {
				throw std::invalid_argument("BVFunction JSON: table rows must be [x, y]");
			}
			table.emplace_back(row[0].get<double>(), row[1].get<double>());
		}
		return ContinuousPart::piecewise_linear(std::move(table));
	}
	const std::string name = j.at("builtin").get<std::string>();
	if(name == "fermi_dirac") {
		reject_unknown(j, {"builtin", "mu", "beta"}, "BVFunction JSON fermi_dirac");
		return ContinuousPart::fermi_dirac(j.at("mu").get<double>(), j.at("beta").get<double>());
	}
	if(name == "constant") {
		reject_unknown(j, {"builtin", "value"}, "BVFunction JSON constant");
		return ContinuousPart::constant(j.at("value").get<double>());
	}
	if(name == "zero") {
		reject_unknown(j, {"builtin"}, "BVFunction JSON zero");
		return ContinuousPart::zero();
	}
	throw std::invalid_argument("BVFunction JSON: unknown continuous builtin '" + name + "'");
}

} // namespace

BVFunction bv_function_from_json(const nlohmann::json& j)
{
	if(!j.is_object()) {
		throw std::invalid_argument("BVFunction JSON: expected an object");
	}
	reject_unknown(j, {"jumps", "continuous", "at_infinity", "variation"}, "BVFunction JSON");
	try {
		ContinuousPart c = j.contains("continuous") ? continuous_from_json(j.at("continuous"))
													: ContinuousPart::zero();
		std::vector<Jump> jumps;
		if(j.contains("jumps")) {
			for(const auto& e : j.at("jumps")) {
				reject_unknown(e, {"at", "left", "right", "below"}, "BVFunction JSON jump");
				Jump jump{e.at("at").get<double>(), e.at("left").get<double>(),
					e.at("right").get<double>(), std::nullopt};
				if(e.contains("below")) {
					jump.below = e.at("below").get<double>();
				}
				jumps.push_back(jump);
			}
		}
		std::optional<double> variation;
		if(j.contains("variation")) {
			variation = j.at("variation").get<double>();
		}
		return BVFunction(std::move(c), std::move(jumps), j.at("at_infinity").get<double>(), variation);
	} catch(const nlohmann::json::exception& e) {
		throw std::invalid_argument(std::string("BVFunction JSON: ") + e.what());
	}
}

BVFunction parse_bv_function(std::string_view text)
{
	nlohmann::json j;
	try {
		j = nlohmann::json::parse(text);
	} catch(const nlohmann::json::exception& e) {
		throw std::invalid_argument(std::string("BVFunction JSON: ") + e.what());
	}
	return bv_function_from_json(j);
}

} // namespace adiabatic
