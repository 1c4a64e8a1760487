#pragma once

#include "adiabatic/diagnostics.hpp"
#include "adiabatic/operator_core.hpp"
#include "adiabatic/propagator.hpp"
#include "adiabatic/spectral_calculus.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace adiabatic {

/// Parsed run configuration. Unknown keys are rejected.
///
///   {
///     "scenario": "embedded_eigenvalue",
///     "params":   { scenario-specific, see list_scenarios() },
///     "lambda":   "default" | "zero",
///     "tau":      [10, 100, 1000],
///     "s_grid":   100 | [0, 0.25, 0.5, 1],
///     "step":     1e-4,
///     "metrics":  ["heisenberg_norm", "resolvent", ...],
///     "z":        [0, 1],
///     "output":   "out",
///     "seed":     1234,
///     "save_propagators": false
///   }
struct ScenarioConfig {
	std::string scenario;
	nlohmann::json params = nlohmann::json::object();
	std::string lambda = "default";
	std::vector<double> tau;
	std::vector<double> s_grid;
	std::optional<double> step;
	std::vector<std::string> metrics;
	Complex z{0.0, 1.0};
	std::filesystem::path output = "out";
	std::uint64_t seed = 20240601;
	bool save_propagators = false;

	/// Throws std::invalid_argument describing the first problem found.
	static ScenarioConfig from_json(const nlohmann::json& j);
	static ScenarioConfig load(const std::filesystem::path& file);
	nlohmann::json to_json() const;
};

/// Every metric name accepted in "metrics".
const std::vector<std::string>& known_metrics();

struct Observable {
	std::string label;
	HermitianOperator op;
};

/// Concrete data of one scenario.
struct ScenarioInstance {
	std::string name;
	HermitianOperator h0;
	SpectralDecomposition decomposition;
	/// Absent for the static swap sequence.
	std::optional<GeneratorPath> path{};
	std::vector<Observable> observables{};
	TestVectorSet vectors{};
	/// E1 < E2 split for the off-diagonal block metric.
	std::optional<std::pair<double, double>> split{};
	/// Eigenvalue studied by the embedded-projection metric.
	std::optional<double> embedded_energy{};

	// Direct-sum counterexample.
	int blocks = 0;

	// Swap sequence: V_n for n in swap_n on dimension 2M+1, P_0 = |0><0|.
	int half_width = 0;
	std::vector<int> swap_n{};
};

ScenarioInstance build_scenario(const ScenarioConfig& config);

struct ScenarioInfo {
	std::string name;
	std::string description;
	std::string anchor;
};

std::vector<ScenarioInfo> list_scenarios();

// Building blocks shared by scenarios and tests.

/// H_o = block_k (1/k) sigma_z for k = 1..n.
HermitianOperator direct_sum_h0(int blocks);
/// Lambda = sigma_x in every block.
HermitianOperator direct_sum_lambda(int blocks);
/// Permutation swapping |0> and |n> on indices m = -M..M (stored at m + M).
ComplexMatrix swap_unitary(int half_width, int n);
/// sum_{m != 0} (1/m) |m><m|.
HermitianOperator swap_h0(int half_width);
/// Lambda(s) = cos(pi s) A + sin(pi s) B with A, B seeded, ||A|| = ||B|| = scale.
GeneratorPath seeded_smooth_path(Index dim, Rng& rng, double scale);
/// Points -1 + 2 (k + 0.25) / g, k = 0..g-1 (never 0), plus E = 0 repeated.
Eigen::VectorXd embedded_spectrum(int grid_points, int multiplicity);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SummaryEntry {
	std::string scenario;
	std::string metric;
	std::optional<double> slope;
	std::optional<double> constant;
	std::optional<double> residual;
	std::string verdict;
	nlohmann::json details = nlohmann::json::object();
};

struct SweepOutcome {
	std::vector<ConvergenceReport> reports;
	std::vector<SummaryEntry> summary;
	std::vector<std::filesystem::path> files;
	bool any_fail() const;
};

struct SweepOptions {
	unsigned threads = 1;
	bool write_files = true;
	/// Timestamp string stored in summary.json; current UTC time when empty.
	std::string timestamp;
};

/// Evolves the scenario at every tau, computes the configured metrics and writes
/// <output>/<scenario>_<metric>.csv plus summary.json. On failure the finished
/// tau values are flushed first and the exception is rethrown with context.
SweepOutcome run_sweep(const ScenarioConfig& config, const SweepOptions& options = {});

/// Evolution only: writes run_<scenario>_<tau>.prop into the output directory.
std::vector<std::filesystem::path> run_propagators(
	const ScenarioConfig& config, const SweepOptions& options = {});

} // namespace adiabatic
