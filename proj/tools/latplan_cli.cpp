/*
 * Copyright (C) 2026 The latplan Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/
// Scenario runner: plan, replan-sim and multirobot subcommands.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "latplan/runner.hpp"

int main(int argc, char** argv)
{
  using namespace latplan::io;
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL=info, debug, ...

  CLI::App app{"Kinodynamic state-lattice planner"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool svg = true;
  bool compare = false;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Seed for randomized scenario content");
    sub->add_flag("--svg,!--no-svg", svg, "Write an SVG plot")->capture_default_str();
  };
  CLI::App* plan = app.add_subcommand("plan", "Plan every run of a scenario");
  common(plan);
  CLI::App* replan = app.add_subcommand("replan-sim", "Receding-horizon replanning simulation");
  common(replan);
  replan->add_flag("--compare-astar", compare, "Also plan each epoch from scratch with A*");
  CLI::App* team = app.add_subcommand("multirobot", "Plan a robot team");
  common(team);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try
  {
    const Scenario sc = load_scenario(scenario_path, seed);
    const OutputOptions opt{out_dir, svg};
    if (plan->parsed())
      return run_plan(sc, opt);
    if (replan->parsed())
    {
      if (!sc.replan)
      {
        std::cerr << scenario_path << ": no replan section\n";
        return kExitUsage;
      }
      return run_replan_sim(sc, opt, compare);
    }
    if (!sc.team)
    {
      std::cerr << scenario_path << ": no team section\n";
      return kExitUsage;
    }
    return run_multirobot(sc, opt);
  }
  catch (const ParseError& e)
  {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
