// adiabatic_lab: scenario catalog, propagator runs and convergence sweeps.
//
//   adiabatic_lab list
//   adiabatic_lab run   config.json [--out DIR] [--seed N] [--step H] [--threads N]
//   adiabatic_lab sweep config.json [--out DIR] [--seed N] [--step H] [--threads N]
//
// Exit codes: 0 all verdicts PASS or INFO, 2 some bound check FAILed, 1 error.

#include "adiabatic/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
	std::optional<std::string> out;
	std::optional<std::uint64_t> seed;
	std::optional<double> step;
	unsigned threads = 1;
};

adiabatic::ScenarioConfig load(const std::string& file, const Overrides& o)
{
	auto c = adiabatic::ScenarioConfig::load(file);
	if(o.out) {
		c.output = *o.out;
	}
	if(o.seed) {
		c.seed = *o.seed;
	}
	if(o.step) {
		if(!(*o.step > 0.0)) {
			throw std::invalid_argument("--step must be positive");
		}
		c.step = *o.step;
	}
	return c;
}

void add_common(CLI::App* cmd, std::string& config, Overrides& o)
{
	cmd->add_option("config", config, "scenario configuration (JSON)")->required()->check(CLI::ExistingFile);
	cmd->add_option("--out", o.out, "output directory (overrides \"output\")");
	cmd->add_option("--seed", o.seed, "random seed (overrides \"seed\")");
	cmd->add_option("--step", o.step, "integrator step in scaled time (overrides \"step\")");
	cmd->add_option("--threads", o.threads, "parallel tau jobs")->check(CLI::PositiveNumber);
}

int cmd_list()
{
	for(const auto& s : adiabatic::list_scenarios()) {
		std::printf("%-26s %s\n%-26s [%s]\n", s.name.c_str(), s.description.c_str(), "", s.anchor.c_str());
	}
	return 0;
}

int cmd_run(const std::string& file, const Overrides& o)
{
	const auto c = load(file, o);
	adiabatic::SweepOptions opts;
	opts.threads = o.threads;
	for(const auto& f : adiabatic::run_propagators(c, opts)) {
		std::printf("wrote %s\n", f.string().c_str());
	}
	return 0;
}

int cmd_sweep(const std::string& file, const Overrides& o)
{
	const auto c = load(file, o);
	adiabatic::SweepOptions opts;
	opts.threads = o.threads;
	const auto outcome = adiabatic::run_sweep(c, opts);
	for(const auto& e : outcome.summary) {
		std::printf("%-4s %s/%s", e.verdict.c_str(), e.scenario.c_str(), e.metric.c_str());
		if(e.slope) {
			std::printf("  slope %.4f", *e.slope);
		}
		std::printf("\n");
	}
	std::printf("outputs in %s\n", c.output.string().c_str());
	return outcome.any_fail() ? 2 : 0;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Adiabatic evolution lab: propagators, convergence metrics and sweeps"};
	app.require_subcommand(1);

	std::string config;
	Overrides o;
	auto* list = app.add_subcommand("list", "list scenarios");
	auto* run = app.add_subcommand("run", "evolve each tau and write .prop files");
	auto* sweep = app.add_subcommand("sweep", "evolve, measure, write CSV and summary.json");
	add_common(run, config, o);
	add_common(sweep, config, o);

	try {
		app.parse(argc, argv);
	} catch(const CLI::ParseError& e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 1;
	}

	try {
		if(list->parsed()) {
			return cmd_list();
		}
		if(run->parsed()) {
			return cmd_run(config, o);
		}
		return cmd_sweep(config, o);
	} catch(const std::exception& e) {
		std::cerr << "adiabatic_lab: " << e.what() << '\n';
		return 1;
	}
}
