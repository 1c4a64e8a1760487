#include "adiabatic/scenarios.hpp"

#include "adiabatic/random_matrices.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace adiabatic {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kScenarioNames{
	"two_level_rotating",
	"direct_sum_counterexample",
	"swap_sequence",
	"embedded_eigenvalue",
	"pure_point_omega",
	"fermi_observable",
};

[[noreturn]] void config_error(const std::string& msg)
{
	throw std::invalid_argument("config: " + msg);
}

// Reads scenario parameters with defaults and rejects keys that were never read.
class Params {
public:
	Params(const json& j, std::string scenario) : j_(j), scenario_(std::move(scenario))
	{
		if(!j_.is_object()) {
			config_error("\"params\" must be an object");
		}
	}

	double number(const std::string& key, double fallback)
	{
		used_.insert(key);
		if(!j_.contains(key)) {
			return fallback;
		}
		if(!j_[key].is_number()) {
			config_error("params." + key + " must be a number");
		}
		return j_[key].get<double>();
	}

	int integer(const std::string& key, int fallback, int minimum)
	{
		used_.insert(key);
		if(!j_.contains(key)) {
			return fallback;
		}
		if(!j_[key].is_number_integer() || j_[key].get<long long>() < minimum) {
			config_error("params." + key + " must be an integer >= " + std::to_string(minimum));
		}
		return j_[key].get<int>();
	}

	std::vector<int> integers(const std::string& key, std::vector<int> fallback)
	{
		used_.insert(key);
		if(!j_.contains(key)) {
			return fallback;
		}
		if(!j_[key].is_array()) {
			config_error("params." + key + " must be an array of integers");
		}
		std::vector<int> out;
		for(const auto& v : j_[key]) {
			if(!v.is_number_integer()) {
				config_error("params." + key + " must be an array of integers");
			}
			out.push_back(v.get<int>());
		}
		return out;
	}

	void finish() const
	{
		for(const auto& [key, value] : j_.items()) {
			if(!used_.count(key)) {
				config_error("unknown parameter \"" + key + "\" for scenario " + scenario_);
			}
		}
	}

private:
	const json& j_;
	std::string scenario_;
	std::set<std::string> used_;
};

ComplexMatrix pauli_x()
{
	ComplexMatrix m(2, 2);
	m << 0.0, 1.0, 1.0, 0.0;
	return m;
}

ComplexMatrix pauli_z()
{
	ComplexMatrix m(2, 2);
	m << 1.0, 0.0, 0.0, -1.0;
	return m;
}

std::vector<std::string> default_metrics(const std::string& scenario, const json& params)
{
	if(scenario == "two_level_rotating") {
		return {"heisenberg_norm", "resolvent"};
	}
	if(scenario == "direct_sum_counterexample" || scenario == "fermi_observable") {
		return {"heisenberg_norm", "heisenberg_sot"};
	}
	if(scenario == "swap_sequence") {
		return {"swap_norm", "swap_sot"};
	}
	if(scenario == "embedded_eigenvalue") {
		return {"resolvent", "embedded_projection"};
	}
	if(params.contains("gap") && params["gap"].is_number() && params["gap"].get<double>() > 0.0) {
		return {"schrodinger_limit", "offdiagonal_block"};
	}
	return {"schrodinger_limit"};
}

HermitianOperator rotated(const Eigen::VectorXd& spectrum, Rng& rng)
{
	const ComplexMatrix u = random_unitary(spectrum.size(), rng);
	return HermitianOperator::hermitian_part(u * spectrum.cast<Complex>().asDiagonal() * u.adjoint());
}

GeneratorPath select_path(const ScenarioConfig& config, Index dim, Rng& rng, double scale)
{
	// The seeded path is always drawn so the random stream does not depend on "lambda".
	GeneratorPath path = seeded_smooth_path(dim, rng, scale);
	if(config.lambda == "zero") {
		return GeneratorPath::zero(dim);
	}
	return path;
}

TestVectorSet default_vectors(Index dim, Rng& rng)
{
	return TestVectorSet::seeded(dim, 8, rng);
}

} // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

const std::vector<std::string>& known_metrics()
{
	static const std::vector<std::string> names{
		"heisenberg_norm",
		"heisenberg_sot",
		"resolvent",
		"offdiagonal_block",
		"embedded_projection",
		"schrodinger_limit",
		"swap_norm",
		"swap_sot",
	};
	return names;
}

ScenarioConfig ScenarioConfig::from_json(const json& j)
{
	static const std::set<std::string> allowed{"scenario", "params", "lambda", "tau", "s_grid",
		"step", "metrics", "z", "output", "seed", "save_propagators"};
	if(!j.is_object()) {
		config_error("document must be a JSON object");
	}
	for(const auto& [key, value] : j.items()) {
		if(!allowed.count(key)) {
			config_error("unknown key \"" + key + "\"");
		}
	}
	ScenarioConfig c;
	if(!j.contains("scenario") || !j["scenario"].is_string()) {
		config_error("\"scenario\" (string) is required");
	}
	c.scenario = j["scenario"].get<std::string>();
	if(std::find(kScenarioNames.begin(), kScenarioNames.end(), c.scenario) == kScenarioNames.end()) {
		config_error("unknown scenario \"" + c.scenario + "\"");
	}
	if(j.contains("params")) {
		if(!j["params"].is_object()) {
			config_error("\"params\" must be an object");
		}
		c.params = j["params"];
	}
	if(j.contains("lambda")) {
		if(!j["lambda"].is_string()) {
			config_error("\"lambda\" must be \"default\" or \"zero\"");
		}
		c.lambda = j["lambda"].get<std::string>();
		if(c.lambda != "default" && c.lambda != "zero") {
			config_error("\"lambda\" must be \"default\" or \"zero\"");
		}
	}
	if(j.contains("tau")) {
		if(!j["tau"].is_array()) {
			config_error("\"tau\" must be an array of positive numbers");
		}
		for(const auto& t : j["tau"]) {
			if(!t.is_number() || !(t.get<double>() > 0.0) || !std::isfinite(t.get<double>())) {
				config_error("\"tau\" values must be positive numbers");
			}
			c.tau.push_back(t.get<double>());
		}
		std::vector<double> sorted = c.tau;
		std::sort(sorted.begin(), sorted.end());
		if(std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
			config_error("\"tau\" values must be distinct");
		}
	}
	if(c.tau.empty() && c.scenario != "swap_sequence") {
		config_error("\"tau\" must list at least one value");
	}
	if(!j.contains("s_grid")) {
		c.s_grid = uniform_grid(100);
	} else if(j["s_grid"].is_number_integer()) {
		if(j["s_grid"].get<long long>() < 1) {
			config_error("\"s_grid\" interval count must be positive");
		}
		c.s_grid = uniform_grid(j["s_grid"].get<int>());
	} else if(j["s_grid"].is_array()) {
		for(const auto& s : j["s_grid"]) {
			if(!s.is_number()) {
				config_error("\"s_grid\" entries must be numbers");
			}
			c.s_grid.push_back(s.get<double>());
		}
		if(c.s_grid.empty() || c.s_grid.front() != 0.0 || c.s_grid.back() > 1.0 ||
			std::adjacent_find(c.s_grid.begin(), c.s_grid.end(), std::greater_equal<>()) != c.s_grid.end()) {
			config_error("\"s_grid\" must be strictly increasing in [0, 1] and start at 0");
		}
	} else {
		config_error("\"s_grid\" must be an interval count or an array");
	}
	if(j.contains("step")) {
		if(!j["step"].is_number() || !(j["step"].get<double>() > 0.0)) {
			config_error("\"step\" must be a positive number");
		}
		c.step = j["step"].get<double>();
	}
	if(j.contains("metrics")) {
		if(!j["metrics"].is_array()) {
			config_error("\"metrics\" must be an array of names");
		}
		for(const auto& m : j["metrics"]) {
			if(!m.is_string()) {
				config_error("\"metrics\" must be an array of names");
			}
			const auto name = m.get<std::string>();
			const auto& known = known_metrics();
			if(std::find(known.begin(), known.end(), name) == known.end()) {
				config_error("unknown metric \"" + name + "\"");
			}
			c.metrics.push_back(name);
		}
	} else {
		c.metrics = default_metrics(c.scenario, c.params);
	}
	if(j.contains("z")) {
		const auto& z = j["z"];
		if(!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number()) {
			config_error("\"z\" must be [re, im]");
		}
		c.z = Complex(z[0].get<double>(), z[1].get<double>());
		if(c.z.imag() == 0.0) {
			config_error("\"z\" must have nonzero imaginary part");
		}
	}
	if(j.contains("output")) {
		if(!j["output"].is_string()) {
			config_error("\"output\" must be a string");
		}
		c.output = j["output"].get<std::string>();
	}
	if(j.contains("seed")) {
		if(!j["seed"].is_number_unsigned()) {
			config_error("\"seed\" must be a nonnegative integer");
		}
		c.seed = j["seed"].get<std::uint64_t>();
	}
	if(j.contains("save_propagators")) {
		if(!j["save_propagators"].is_boolean()) {
			config_error("\"save_propagators\" must be a boolean");
		}
		c.save_propagators = j["save_propagators"].get<bool>();
	}
	return c;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& file)
{
	std::ifstream in(file);
	if(!in) {
		throw std::invalid_argument("config: cannot open " + file.string());
	}
	json j;
	try {
		j = json::parse(in);
	} catch(const json::exception& e) {
		throw std::invalid_argument("config: " + file.string() + ": " + e.what());
	}
	return from_json(j);
}

json ScenarioConfig::to_json() const
{
	json j = {
		{"scenario", scenario},
		{"params", params},
		{"lambda", lambda},
		{"tau", tau},
		{"s_grid", s_grid},
		{"metrics", metrics},
		{"z", {z.real(), z.imag()}},
		{"output", output.string()},
		{"seed", seed},
		{"save_propagators", save_propagators},
	};
	if(step) {
		j["step"] = *step;
	}
	return j;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

HermitianOperator direct_sum_h0(int blocks)
{
	if(blocks < 1) {
		throw std::invalid_argument("direct_sum_h0: blocks must be positive");
	}
	Eigen::VectorXd d(2 * blocks);
	for(int k = 1; k <= blocks; ++k) {
		d(2 * (k - 1)) = 1.0 / k;
		d(2 * (k - 1) + 1) = -1.0 / k;
	}
	return HermitianOperator::diagonal(d);
}

HermitianOperator direct_sum_lambda(int blocks)
{
	if(blocks < 1) {
		throw std::invalid_argument("direct_sum_lambda: blocks must be positive");
	}
	ComplexMatrix m = ComplexMatrix::Zero(2 * blocks, 2 * blocks);
	for(int k = 0; k < blocks; ++k) {
		m.block(2 * k, 2 * k, 2, 2) = pauli_x();
	}
	return HermitianOperator(m);
}

ComplexMatrix swap_unitary(int half_width, int n)
{
	if(half_width < 1 || n < -half_width || n > half_width) {
		throw std::invalid_argument("swap_unitary: n must lie in [-M, M]");
	}
	const int dim = 2 * half_width + 1;
	ComplexMatrix v = ComplexMatrix::Identity(dim, dim);
	const int zero = half_width;
	const int target = n + half_width;
	if(target != zero) {
		v(zero, zero) = 0.0;
		v(target, target) = 0.0;
		v(zero, target) = 1.0;
		v(target, zero) = 1.0;
	}
	return v;
}

HermitianOperator swap_h0(int half_width)
{
	if(half_width < 1) {
		throw std::invalid_argument("swap_h0: M must be positive");
	}
	Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * half_width + 1);
	for(int m = -half_width; m <= half_width; ++m) {
		if(m != 0) {
			d(m + half_width) = 1.0 / m;
		}
	}
	return HermitianOperator::diagonal(d);
}

GeneratorPath seeded_smooth_path(Index dim, Rng& rng, double scale)
{
	const HermitianOperator a = random_hermitian(dim, rng, scale);
	const HermitianOperator b = random_hermitian(dim, rng, scale);
	auto sampler = [a, b](double s) {
		return HermitianOperator::hermitian_part(
			std::cos(std::numbers::pi * s) * a.matrix() + std::sin(std::numbers::pi * s) * b.matrix());
	};
	return GeneratorPath(dim, sampler, Smoothness::norm_C1);
}

Eigen::VectorXd embedded_spectrum(int grid_points, int multiplicity)
{
	if(grid_points < 1 || multiplicity < 1) {
		throw std::invalid_argument("embedded_spectrum: counts must be positive");
	}
	Eigen::VectorXd e(grid_points + multiplicity);
	for(int k = 0; k < grid_points; ++k) {
		e(k) = -1.0 + 2.0 * (k + 0.25) / grid_points;
	}
	for(int k = 0; k < multiplicity; ++k) {
		e(grid_points + k) = 0.0;
	}
	return e;
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

namespace {

ScenarioInstance make_instance(std::string name, HermitianOperator h0)
{
	SpectralDecomposition d = hermitian_eigendecomposition(h0);
	return ScenarioInstance{.name = std::move(name), .h0 = std::move(h0), .decomposition = std::move(d)};
}

ScenarioInstance two_level(const ScenarioConfig& c, Params& p, Rng& rng)
{
	const double field = p.number("field", 1.0);
	const double tilt = p.number("tilt", std::numbers::pi / 3.0);
	const double omega = p.number("omega", 1.0);
	p.finish();
	if(!(field > 0.0)) {
		config_error("params.field must be positive");
	}
	// Rotating frame about z: H_o = B sigma.n(0), Lambda = -(omega/2) sigma_z.
	ComplexMatrix h = field * (std::sin(tilt) * pauli_x() + std::cos(tilt) * pauli_z());
	ScenarioInstance inst = make_instance("two_level_rotating", HermitianOperator(h));
	const HermitianOperator lambda(-0.5 * omega * pauli_z());
	inst.path = c.lambda == "zero" ? GeneratorPath::zero(2) : GeneratorPath::constant(lambda);
	inst.observables.push_back({"P_neg", projection_leq(inst.decomposition, 0.0)});
	inst.vectors = TestVectorSet::eigenvectors(inst.decomposition, 0);
	inst.vectors.append(default_vectors(2, rng));
	return inst;
}

ScenarioInstance direct_sum(const ScenarioConfig& c, Params& p, Rng& rng)
{
	const int blocks = p.integer("blocks", 64, 1);
	p.finish();
	ScenarioInstance inst = make_instance("direct_sum_counterexample", direct_sum_h0(blocks));
	inst.blocks = blocks;
	inst.path = c.lambda == "zero" ? GeneratorPath::zero(2 * blocks)
	                               : GeneratorPath::constant(direct_sum_lambda(blocks));
	inst.observables.push_back({"P_neg", projection_leq(inst.decomposition, 0.0)});
	inst.vectors = TestVectorSet::basis(2 * blocks, {0, 1});
	inst.vectors.append(default_vectors(2 * blocks, rng));
	return inst;
}

ScenarioInstance swap_sequence(const ScenarioConfig&, Params& p, Rng& rng)
{
	const int m = p.integer("half_width", 32, 1);
	std::vector<int> ns = p.integers("n", {2, 4, 8, 16});
	p.finish();
	for(int n : ns) {
		if(n < 1 || n > m) {
			config_error("params.n entries must lie in [1, half_width]");
		}
	}
	ScenarioInstance inst = make_instance("swap_sequence", swap_h0(m));
	inst.half_width = m;
	inst.swap_n = ns;
	const Index dim = 2 * m + 1;
	ComplexMatrix p0 = ComplexMatrix::Zero(dim, dim);
	p0(m, m) = 1.0;
	inst.observables.push_back({"P0", HermitianOperator(p0)});
	inst.vectors = TestVectorSet::basis(dim, {m});
	ComplexVector local = ComplexVector::Zero(dim);
	local.segment(m - 1, 3).setConstant(1.0 / std::sqrt(3.0));
	inst.vectors.add(local, TestVectorSet::Provenance::finite_support, "local3");
	inst.vectors.append(default_vectors(dim, rng));
	return inst;
}

ScenarioInstance embedded(const ScenarioConfig& c, Params& p, Rng& rng, const std::string& name)
{
	const int grid = p.integer("grid_points", 61, 1);
	const int mult = p.integer("multiplicity", 3, 1);
	const double scale = p.number("lambda_scale", 1.0);
	double mu = 0.0;
	double beta = 10.0;
	if(name == "fermi_observable") {
		mu = p.number("mu", 0.0);
		beta = p.number("beta", 10.0);
		if(!(beta > 0.0)) {
			config_error("params.beta must be positive");
		}
	}
	p.finish();
	const Eigen::VectorXd spectrum = embedded_spectrum(grid, mult);
	const Index dim = spectrum.size();
	ScenarioInstance inst = make_instance(name, rotated(spectrum, rng));
	inst.path = select_path(c, dim, rng, scale);
	inst.embedded_energy = 0.0;
	inst.observables.push_back({"P_E0", projection_eq(inst.decomposition, 0.0)});
	if(name == "fermi_observable") {
		inst.observables.push_back({"fermi",
			calculus_bv(inst.decomposition, BVFunction::from_continuous(ContinuousPart::fermi_dirac(mu, beta)), 10000)});
		inst.observables.push_back({"chi_leq_mu", calculus_bv(inst.decomposition, BVFunction::step_leq(mu), 10000)});
	}
	inst.vectors = default_vectors(dim, rng);
	if(const auto level = inst.decomposition.find_level(0.0)) {
		inst.vectors.append(TestVectorSet::eigenvectors(inst.decomposition, *level));
	}
	return inst;
}

ScenarioInstance pure_point(const ScenarioConfig& c, Params& p, Rng& rng)
{
	const int dim = p.integer("dim", 16, 2);
	const double gap = p.number("gap", 0.0);
	const int degeneracy = p.integer("degeneracy", 1, 1);
	const double scale = p.number("lambda_scale", 1.0);
	p.finish();
	if(dim % degeneracy != 0) {
		config_error("params.degeneracy must divide params.dim");
	}
	if(!(gap >= 0.0 && gap < 2.0)) {
		config_error("params.gap must lie in [0, 2)");
	}
	const int levels = dim / degeneracy;
	if(gap > 0.0 && levels % 2 != 0) {
		config_error("a gapped spectrum needs an even number of levels");
	}
	std::uniform_real_distribution<double> jitter(-0.35, 0.35);
	std::vector<double> e;
	if(gap > 0.0) {
		const int half = levels / 2;
		const double width = 1.0 - 0.5 * gap;
		for(int k = 0; k < half; ++k) {
			e.push_back(-1.0 + width * (k + 0.5 + jitter(rng)) / half);
		}
		for(int k = 0; k < half; ++k) {
			e.push_back(0.5 * gap + width * (k + 0.5 + jitter(rng)) / half);
		}
	} else {
		for(int k = 0; k < levels; ++k) {
			e.push_back(-1.0 + 2.0 * (k + 0.5 + jitter(rng)) / levels);
		}
	}
	Eigen::VectorXd spectrum(dim);
	for(int k = 0; k < levels; ++k) {
		for(int r = 0; r < degeneracy; ++r) {
			spectrum(k * degeneracy + r) = e[static_cast<std::size_t>(k)];
		}
	}
	ScenarioInstance inst = make_instance("pure_point_omega", rotated(spectrum, rng));
	inst.path = select_path(c, dim, rng, scale);
	if(gap > 0.0) {
		inst.split = std::make_pair(-0.5 * gap, 0.5 * gap);
	}
	inst.observables.push_back({"P_neg", projection_leq(inst.decomposition, 0.0)});
	inst.vectors = default_vectors(dim, rng);
	return inst;
}

} // namespace

ScenarioInstance build_scenario(const ScenarioConfig& config)
{
	Rng rng(config.seed);
	Params p(config.params, config.scenario);
	const std::string& n = config.scenario;
	if(n == "two_level_rotating") {
		return two_level(config, p, rng);
	}
	if(n == "direct_sum_counterexample") {
		return direct_sum(config, p, rng);
	}
	if(n == "swap_sequence") {
		return swap_sequence(config, p, rng);
	}
	if(n == "embedded_eigenvalue" || n == "fermi_observable") {
		return embedded(config, p, rng, n);
	}
	if(n == "pure_point_omega") {
		return pure_point(config, p, rng);
	}
	config_error("unknown scenario \"" + n + "\"");
}

std::vector<ScenarioInfo> list_scenarios()
{
	return {
		{"two_level_rotating",
			"spin-1/2 in a slowly rotating field, recast in the rotating frame as H_o + Lambda/tau",
			"anchor: two-level spin in a rotating field"},
		{"direct_sum_counterexample",
			"N blocks (1/k) sigma_z with Lambda = sigma_x per block; norm convergence fails at tau = n",
			"anchor: direct-sum counterexample to norm convergence"},
		{"swap_sequence",
			"static swaps of |0> and |n>: V_n H_o V_n^dagger -> H_o in norm while V_n P_0 V_n^dagger does not converge strongly",
			"anchor: swap sequence, norm versus strong convergence"},
		{"embedded_eigenvalue",
			"degenerate E = 0 embedded in a dense spectrum on [-1, 1] with a seeded smooth Lambda",
			"anchor: embedded eigenvalue of arbitrary degeneracy"},
		{"pure_point_omega",
			"pure point H_o (optionally gapped or block degenerate) for the limit evolution Omega_inf",
			"anchor: limit evolution for pure point spectrum"},
		{"fermi_observable",
			"embedded_eigenvalue plus Fermi-Dirac and chi(H_o <= mu) observables with mu at an eigenvalue",
			"anchor: eigenvalue at the chemical potential"},
	};
}

} // namespace adiabatic
