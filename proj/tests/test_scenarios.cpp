#include "adiabatic/scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace adiabatic;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name)
{
	const auto dir = std::filesystem::temp_directory_path() / ("adiabatic_test_" + name);
	std::filesystem::remove_all(dir);
	return dir;
}

std::string slurp(const std::filesystem::path& p)
{
	std::ifstream in(p);
	std::ostringstream os;
	os << in.rdbuf();
	return os.str();
}

const SummaryEntry* find_entry(const SweepOutcome& o, const std::string& metric)
{
	for(const auto& e : o.summary) {
		if(e.metric == metric) {
			return &e;
		}
	}
	return nullptr;
}

} // namespace

TEST_CASE("direct sum with two blocks")
{
	ComplexMatrix h = ComplexMatrix::Zero(4, 4);
	h.diagonal() << 1.0, -1.0, 0.5, -0.5;
	REQUIRE((direct_sum_h0(2).matrix() - h).norm() == 0.0);
	ComplexMatrix l = ComplexMatrix::Zero(4, 4);
	l(0, 1) = l(1, 0) = l(2, 3) = l(3, 2) = 1.0;
	REQUIRE((direct_sum_lambda(2).matrix() - l).norm() == 0.0);
}

TEST_CASE("swap unitaries converge in norm on H_o but not strongly on P_0")
{
	const int m = 8;
	const auto h = swap_h0(m).matrix();
	REQUIRE(h(m, m) == 0.0);
	REQUIRE_THAT(h(m + 3, m + 3).real(), WithinAbs(1.0 / 3.0, 0.0));
	REQUIRE_THAT(h(m - 2, m - 2).real(), WithinAbs(-0.5, 0.0));
	for(int n = 1; n <= m; ++n) {
		const ComplexMatrix v = swap_unitary(m, n);
		REQUIRE(unitarity_drift(v) == 0.0);
		REQUIRE_THAT(operator_norm(v * h * v.adjoint() - h), WithinAbs(1.0 / n, 1e-14));
		ComplexMatrix p0 = ComplexMatrix::Zero(2 * m + 1, 2 * m + 1);
		p0(m, m) = 1.0;
		ComplexVector e0 = ComplexVector::Zero(2 * m + 1);
		e0(m) = 1.0;
		REQUIRE_THAT(((v * p0 * v.adjoint() - p0) * e0).norm(), WithinAbs(1.0, 0.0));
	}
	REQUIRE_THROWS_AS(swap_unitary(m, m + 1), std::invalid_argument);
}

TEST_CASE("embedded spectrum layout")
{
	const auto e = embedded_spectrum(63, 1);
	REQUIRE(e.size() == 64);
	const auto d = hermitian_eigendecomposition(HermitianOperator::diagonal(e));
	REQUIRE(d.levels().size() == 64);
	const auto e3 = embedded_spectrum(61, 3);
	const auto d3 = hermitian_eigendecomposition(HermitianOperator::diagonal(e3));
	REQUIRE(d3.levels().size() == 62);
	const auto zero = d3.find_level(0.0);
	REQUIRE(zero);
	REQUIRE(d3.levels()[*zero].multiplicity == 3);
	REQUIRE(e3.head(61).minCoeff() > -1.0);
	REQUIRE(e3.head(61).maxCoeff() < 1.0);
}

TEST_CASE("scenario catalogue")
{
	const auto list = list_scenarios();
	REQUIRE(list.size() == 6);
	for(const auto& name : {"two_level_rotating", "direct_sum_counterexample", "swap_sequence", "embedded_eigenvalue",
			"pure_point_omega", "fermi_observable"}) {
		const auto it = std::find_if(list.begin(), list.end(), [&](const ScenarioInfo& i) { return i.name == name; });
		REQUIRE(it != list.end());
		REQUIRE_FALSE(it->description.empty());
		REQUIRE_THAT(it->anchor, ContainsSubstring("anchor"));
	}
}

TEST_CASE("scenario construction")
{
	auto build = [](json j) { return build_scenario(ScenarioConfig::from_json(j)); };
	const auto a = build({{"scenario", "two_level_rotating"}, {"tau", {1}}});
	REQUIRE(a.h0.dim() == 2);
	REQUIRE(a.path->is_constant());
	REQUIRE_THAT(a.path->kappa(), WithinAbs(0.5, 1e-15));

	const auto b = build({{"scenario", "direct_sum_counterexample"}, {"tau", {1}}, {"params", {{"blocks", 3}}}});
	REQUIRE(b.h0.dim() == 6);
	REQUIRE(b.vectors.id(0) == "b0");

	const auto c = build({{"scenario", "swap_sequence"}, {"params", {{"half_width", 4}, {"n", {1, 2}}}}});
	REQUIRE(c.h0.dim() == 9);
	REQUIRE(c.vectors.id(1) == "local3");

	const auto d = build({{"scenario", "embedded_eigenvalue"}, {"tau", {1}}, {"params", {{"grid_points", 13}}}});
	REQUIRE(d.h0.dim() == 16);
	// Eight seeded vectors followed by the three E = 0 eigenvectors.
	REQUIRE(d.vectors.size() == 11);
	REQUIRE_THAT(d.path->kappa(), WithinAbs(1.0, 0.05));

	const auto e = build({{"scenario", "pure_point_omega"}, {"tau", {1}}, {"params", {{"gap", 0.5}, {"degeneracy", 2}}}});
	REQUIRE(e.split);
	REQUIRE(e.decomposition.levels().size() == 8);
	for(const auto& l : e.decomposition.levels()) {
		REQUIRE(l.multiplicity == 2);
		REQUIRE(std::abs(l.eigenvalue) >= 0.25 - 1e-12);
	}

	const auto f = build({{"scenario", "fermi_observable"}, {"tau", {1}}, {"params", {{"grid_points", 13}}}});
	REQUIRE(f.observables.size() == 3);

	// The same seed gives the same operators.
	const auto d2 = build({{"scenario", "embedded_eigenvalue"}, {"tau", {1}}, {"params", {{"grid_points", 13}}}});
	REQUIRE((d.h0.matrix() - d2.h0.matrix()).norm() == 0.0);
	REQUIRE(((*d.path)(0.3).matrix() - (*d2.path)(0.3).matrix()).norm() == 0.0);
}

TEST_CASE("strict configuration parsing")
{
	const json ok = {{"scenario", "embedded_eigenvalue"}, {"tau", {10, 100}}};
	REQUIRE_NOTHROW(ScenarioConfig::from_json(ok));
	auto with = [&](const std::string& key, json value) {
		json j = ok;
		j[key] = std::move(value);
		return j;
	};
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("colour", "red")), ContainsSubstring("unknown key"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("scenario", "nope")), ContainsSubstring("unknown scenario"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("metrics", {"speed"})), ContainsSubstring("unknown metric"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("tau", {10, 10})), ContainsSubstring("distinct"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("tau", {-1})), ContainsSubstring("positive"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("z", {1, 0})), ContainsSubstring("imaginary"));
	REQUIRE_THROWS_WITH(ScenarioConfig::from_json(with("s_grid", {0.5, 1})), ContainsSubstring("start at 0"));
	REQUIRE_THROWS_WITH(build_scenario(ScenarioConfig::from_json(with("params", {{"grid", 3}}))),
		ContainsSubstring("unknown parameter"));
	REQUIRE_THROWS_AS(
		run_sweep(ScenarioConfig::from_json(with("metrics", {"swap_norm"})), {.write_files = false}), std::invalid_argument);
	REQUIRE_THROWS_AS(run_sweep(ScenarioConfig::from_json(with("metrics", {"offdiagonal_block"})), {.write_files = false}),
		std::invalid_argument);

	const auto c = ScenarioConfig::from_json(ok);
	REQUIRE(c.s_grid.size() == 101);
	REQUIRE(c.metrics == std::vector<std::string>{"resolvent", "embedded_projection"});
	REQUIRE(ScenarioConfig::from_json(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("zero Lambda passes every check")
{
	for(const auto& [scenario, params] : std::vector<std::pair<std::string, json>>{
			{"two_level_rotating", json::object()},
			{"direct_sum_counterexample", {{"blocks", 4}}},
			{"embedded_eigenvalue", {{"grid_points", 13}}},
			{"pure_point_omega", {{"dim", 8}, {"gap", 0.5}}},
			{"fermi_observable", {{"grid_points", 13}}}}) {
		json j = {{"scenario", scenario}, {"params", params}, {"lambda", "zero"}, {"tau", {10, 100, 1000}}, {"s_grid", 10}};
		if(scenario == "pure_point_omega") {
			j["metrics"] = {"schrodinger_limit", "offdiagonal_block", "heisenberg_norm", "resolvent"};
		}
		const auto out = run_sweep(ScenarioConfig::from_json(j), {.write_files = false});
		for(const auto& e : out.summary) {
			// Band weight describes the test vector, not a distance.
			if(e.metric == "embedded_band_weight") {
				continue;
			}
			INFO(scenario << " " << e.metric);
			REQUIRE(e.verdict == "PASS");
		}
	}
}

TEST_CASE("sweeps are deterministic and write one CSV per metric")
{
	const json j = {{"scenario", "pure_point_omega"}, {"params", {{"dim", 8}, {"gap", 0.5}}}, {"tau", {10, 30, 100}},
		{"s_grid", 10}, {"metrics", {"schrodinger_limit", "offdiagonal_block", "heisenberg_sot"}}};
	auto c1 = ScenarioConfig::from_json(j);
	auto c2 = c1;
	c1.output = fresh_dir("det1");
	c2.output = fresh_dir("det2");
	const auto o1 = run_sweep(c1, {.threads = 1, .timestamp = "fixed"});
	const auto o2 = run_sweep(c2, {.threads = 3, .timestamp = "fixed"});
	REQUIRE(o1.files.size() == o2.files.size());
	for(const auto& f : o1.files) {
		if(f.extension() == ".csv") {
			REQUIRE(slurp(f) == slurp(c2.output / f.filename()));
		}
	}
	for(const auto& name : {"pure_point_omega_schrodinger_limit.csv", "pure_point_omega_schrodinger_envelope.csv",
			"pure_point_omega_offdiagonal_block_p1p2.csv", "pure_point_omega_heisenberg_sot_P_neg.csv",
			"summary.json"}) {
		REQUIRE(std::filesystem::exists(c1.output / name));
	}
	const std::string csv = slurp(c1.output / "pure_point_omega_offdiagonal_block_p1p2.csv");
	REQUIRE(csv.rfind("scenario,metric,tau,s,vector_id,value\npure_point_omega,offdiagonal_block_p1p2,10,0,,", 0) == 0);
	const json summary = json::parse(slurp(c1.output / "summary.json"));
	REQUIRE(summary["status"] == "complete");
	REQUIRE(summary["config"]["tau"] == json({10, 30, 100}));
	REQUIRE(find_entry(o1, "schrodinger_envelope")->verdict == "PASS");
	REQUIRE(find_entry(o1, "unitarity")->verdict == "PASS");
	REQUIRE(find_entry(o1, "heisenberg_sot_P_neg")->details.contains("nonuniform_in_s_flags"));
}

TEST_CASE("a failing tau flushes the finished ones")
{
	auto c = ScenarioConfig::from_json({{"scenario", "two_level_rotating"}, {"tau", {1, 2, 3}}, {"s_grid", 4},
		{"save_propagators", true}});
	c.output = fresh_dir("flush");
	// A directory in place of the propagator file makes tau = 2 fail.
	std::filesystem::create_directories(c.output / propagator_filename("two_level_rotating", 2.0));
	REQUIRE_THROWS_WITH(run_sweep(c, {.timestamp = "fixed"}), ContainsSubstring("tau 2"));
	const json summary = json::parse(slurp(c.output / "summary.json"));
	REQUIRE(summary["status"] == "aborted");
	REQUIRE_THAT(summary["error"].get<std::string>(), ContainsSubstring("two_level_rotating"));
	const std::string csv = slurp(c.output / "two_level_rotating_heisenberg_norm_P_neg.csv");
	REQUIRE(csv.find(",1,") != std::string::npos);
	REQUIRE(csv.find(",3,") != std::string::npos);
	REQUIRE(csv.find(",2,") == std::string::npos);
}

TEST_CASE("direct sum resonance and swap sweep verdicts")
{
	const auto b = run_sweep(ScenarioConfig::from_json({{"scenario", "direct_sum_counterexample"},
								 {"params", {{"blocks", 4}}}, {"tau", {1, 2, 3, 4}}, {"s_grid", 4}}),
		{.write_files = false});
	const auto* res = find_entry(b, "resonance_lower_bound");
	REQUIRE(res);
	REQUIRE(res->verdict == "PASS");
	REQUIRE(res->details["checked"] == 4);

	const auto s = run_sweep(ScenarioConfig::from_json({{"scenario", "swap_sequence"}}), {.write_files = false});
	REQUIRE(find_entry(s, "swap_norm")->verdict == "PASS");
	REQUIRE(find_entry(s, "swap_sot")->verdict == "INFO");
	for(const auto& r : s.reports) {
		if(r.metric == "swap_sot") {
			for(const auto& row : r.rows) {
				if(row.vector_id == "b32") {
					REQUIRE(row.value == 1.0);
				}
			}
		}
	}
}

TEST_CASE("propagator files from a run")
{
	auto c = ScenarioConfig::from_json({{"scenario", "two_level_rotating"}, {"tau", {10, 100}}, {"s_grid", 4}});
	c.output = fresh_dir("run");
	const auto files = run_propagators(c);
	REQUIRE(files.size() == 2);
	REQUIRE(files[1].filename() == "run_two_level_rotating_100.prop");
	std::ifstream in(files[0]);
	std::string scenario;
	const auto r = read_propagator(in, &scenario);
	REQUIRE(scenario == "two_level_rotating");
	REQUIRE(r.tau == 10.0);
	REQUIRE(r.s_grid.size() == 5);
}
