#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"
#include "hdrpoly/curve_math.hpp"
#include "hdrpoly/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Polynomial inverse tone mapping: degrade, synthesize, fit, reconstruct, evaluate"};
  app.require_subcommand(1);

  std::map<CLI::App*, hdrpoly::cli::Action> actions;
  auto add = [&](hdrpoly::cli::Action (*setup)(CLI::App&), const char* name,
                 const char* description) {
    auto* sub = app.add_subcommand(name, description);
    actions.emplace(sub, setup(*sub));
  };
  add(hdrpoly::cli::setup_degrade, "degrade", "Tone-map, clip and quantize an HDR image");
  add(hdrpoly::cli::setup_synth, "synth", "Synthesize LDR stacks for a directory of HDR scenes");
  add(hdrpoly::cli::setup_fit, "fit", "Fit a global inverse polynomial to an LDR/HDR pair");
  add(hdrpoly::cli::setup_reconstruct, "reconstruct", "Apply an inverse polynomial to an LDR image");
  add(hdrpoly::cli::setup_eval, "eval", "Compare a reconstruction against ground truth");
  add(hdrpoly::cli::setup_curve, "curve", "Export a tone curve or polynomial as CSV");
  add(hdrpoly::cli::setup_scene, "scene", "Render a synthetic HDR test scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 1;
  }

  for (auto* sub : app.get_subcommands()) {
    try {
      return actions.at(sub)();
    } catch (const hdrpoly::IoError& e) {
      std::cerr << "I/O error: " << e.what() << "\n";
      return 2;
    } catch (const hdrpoly::ParseError& e) {
      std::cerr << "unreadable input (" << hdrpoly::to_string(e.kind()) << "): " << e.what() << "\n";
      return 2;
    } catch (const hdrpoly::DegenerateFitError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
