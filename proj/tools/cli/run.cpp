#include <fstream>

#include "cli/cli.hpp"
#include "cli/command.hpp"
#include "vcr/error.hpp"

namespace vcr::cli {

namespace {

// Values from --config fill every option the command line left unset.
void apply_config(CLI::App& sub, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw UsageError("config files cannot nest --config");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_number() || value.is_boolean()) {
      text = value.dump();
    } else {
      throw UsageError("config key '" + key + "' must be a string, number or boolean");
    }
    opt->add_result(text);
    opt->run_callback();
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Variational and plug-and-play restoration of remote sensing rasters", "vcr");
  app.require_subcommand(1);
  auto commands = make_commands();
  std::vector<std::pair<CLI::App*, Command*>> subs;
  std::string config;
  for (auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c->name(), c->description());
    c->define(*sub);
    if (std::string(c->name()) != "eval") sub->add_option("--config", config, "JSON file of flag values");
    subs.emplace_back(sub, c.get());
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitCode::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ExitCode::ok;
  } catch (const CLI::ParseError& e) {
    err << "vcr: " << e.what() << '\n';
    for (auto& [sub, cmd] : subs)
      if (sub->parsed()) err << sub->help();
    return ExitCode::usage;
  }

  for (auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      if (!config.empty()) apply_config(*sub, config);
      return cmd->run(out, err);
    } catch (const UsageError& e) {
      err << "vcr " << cmd->name() << ": " << e.what() << '\n';
      return ExitCode::usage;
    } catch (const CLI::ParseError& e) {
      err << "vcr " << cmd->name() << ": " << e.what() << '\n';
      return ExitCode::usage;
    } catch (const PluginError& e) {
      err << "vcr " << cmd->name() << ": " << e.what() << '\n';
      if (!e.diagnostics().empty()) err << e.diagnostics();
      return ExitCode::failure;
    } catch (const std::exception& e) {
      err << "vcr " << cmd->name() << ": " << e.what() << '\n';
      return ExitCode::failure;
    }
  }
  return ExitCode::usage;
}

}  // namespace vcr::cli
