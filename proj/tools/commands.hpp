#pragma once

#include <CLI11.hpp>

#include <functional>

namespace hdrpoly::cli {

// Each setup function registers one subcommand and returns the action to run
// once parsing has succeeded. Actions return the process exit code.
using Action = std::function<int()>;

Action setup_degrade(CLI::App& app);
Action setup_synth(CLI::App& app);
Action setup_fit(CLI::App& app);
Action setup_reconstruct(CLI::App& app);
Action setup_eval(CLI::App& app);
Action setup_curve(CLI::App& app);
Action setup_scene(CLI::App& app);

}  // namespace hdrpoly::cli
