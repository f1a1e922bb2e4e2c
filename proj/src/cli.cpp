// Copyright 2026 The xara-scan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xara/cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "xara/cfg.hpp"
#include "xara/macho.hpp"
#include "xara/monitor.hpp"
#include "xara/rules.hpp"
#include "xara/simreg.hpp"
#include "xara/verdict.hpp"

namespace xara::cli {
namespace {

using nlohmann::json;

struct Options {
  std::vector<std::string> paths;
  std::string rules_path;
  std::string platform = "osx";
  std::string format = "text";
  std::string out_path;
  bool monitor = false;
  std::string profiles_path;
  bool dump_cfg = false;
  std::string rules_file;
  std::string scenario;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error("error reading " + path);
  return ss.str();
}

rules::RuleSet load_rule_file(const Options& o) {
  if (o.rules_path.empty()) return rules::builtin_rules();
  rules::RuleSet rs = rules::load_rules(read_file(o.rules_path), o.rules_path);
  rules::validate(rs);
  return rs;
}

Format format_of(const Options& o) { return *parse_format(o.format); }

class Sink {
 public:
  Sink(const Options& o, std::ostream& out) : out_(out), path_(o.out_path) {}

  std::ostream& stream() { return buf_; }

  // Writes the buffered output to --out or the output stream.
  void flush() {
    if (path_.empty()) {
      out_ << buf_.str();
      return;
    }
    std::ofstream f(path_, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + path_);
    f << buf_.str();
    if (!f) throw Error("error writing " + path_);
  }

 private:
  std::ostream& out_;
  std::string path_;
  std::ostringstream buf_;
};

int cmd_quickscan(const Options& o, std::ostream& out, std::ostream& err) {
  const rules::RuleSet rs = load_rule_file(o);
  const Format fmt = format_of(o);
  Sink sink(o, out);
  bool any_present = false;
  bool any_error = false;
  json files = json::array();
  json errors = json::array();
  for (const auto& path : o.paths) {
    try {
      const std::string data = read_file(path);
      const auto images = macho::parse_image(
          {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
      macho::ChannelUsage merged;
      for (const auto& img : images) {
        const auto u = macho::quick_scan(img, rs);
        for (const auto& [id, p] : u.channels) {
          auto& m = merged.channels[id];
          m.present = m.present || p.present;
          m.matched_names.insert(m.matched_names.end(), p.matched_names.begin(),
                                 p.matched_names.end());
        }
      }
      for (auto& [id, p] : merged.channels) {
        std::sort(p.matched_names.begin(), p.matched_names.end());
        p.matched_names.erase(std::unique(p.matched_names.begin(), p.matched_names.end()),
                              p.matched_names.end());
      }
      any_present = any_present || merged.any_present();
      if (fmt == Format::kJson) {
        json ch = json::object();
        for (const auto& [id, p] : merged.channels)
          ch[std::string(rules::to_string(id))] = {{"present", p.present},
                                                   {"names", p.matched_names}};
        files.push_back({{"path", path}, {"slices", images.size()}, {"channels", ch}});
      } else {
        sink.stream() << "file " << path << " slices=" << images.size() << '\n';
        for (const auto& [id, p] : merged.channels) {
          sink.stream() << "  " << rules::to_string(id) << ' '
                        << (p.present ? "present" : "absent");
          for (const auto& n : p.matched_names) sink.stream() << ' ' << n;
          sink.stream() << '\n';
        }
      }
    } catch (const Error& e) {
      any_error = true;
      err << "xara: " << path << ": " << e.what() << '\n';
      if (fmt == Format::kJson) {
        errors.push_back({{"path", path}, {"error", e.what()}});
      } else {
        sink.stream() << "error " << path << ": " << e.what() << '\n';
      }
    }
  }
  if (fmt == Format::kJson) sink.stream() << json{{"files", files}, {"errors", errors}}.dump(2) << '\n';
  sink.flush();
  if (any_error) return kExitError;
  return any_present ? kExitFindings : kExitClean;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
  const rules::RuleSet rs = load_rule_file(o);
  const Format fmt = format_of(o);
  const Platform platform = *parse_platform(o.platform);
  Sink sink(o, out);
  bool vulnerable = false;
  bool any_error = false;
  json reports = json::array();
  json errors = json::array();
  for (const auto& path : o.paths) {
    try {
      const ir::Listing listing = ir::parse_listing(read_file(path), path);
      const verdict::Report report = verdict::analyze(listing, rs, platform);
      vulnerable = vulnerable || report.has_vulnerable();
      if (fmt == Format::kJson) {
        json r = json::parse(verdict::render_report(report, Format::kJson));
        if (o.dump_cfg) {
          json cfgs = json::object();
          for (const auto& p : listing.procedures) cfgs[p.name] = cfg::to_dot(cfg::build_cfg(p));
          r["cfg"] = cfgs;
        }
        reports.push_back(r);
      } else {
        if (o.dump_cfg) {
          for (const auto& p : listing.procedures) sink.stream() << cfg::to_dot(cfg::build_cfg(p));
        }
        sink.stream() << verdict::render_report(report, Format::kText);
      }
    } catch (const Error& e) {
      any_error = true;
      err << "xara: " << path << ": " << e.what() << '\n';
      if (fmt == Format::kJson) {
        errors.push_back({{"path", path}, {"error", e.what()}});
      } else {
        sink.stream() << "error " << path << ": " << e.what() << '\n';
      }
    }
  }
  if (fmt == Format::kJson)
    sink.stream() << json{{"reports", reports}, {"errors", errors}}.dump(2) << '\n';
  sink.flush();
  if (any_error) return kExitError;
  return vulnerable ? kExitFindings : kExitClean;
}

int cmd_rules_check(const Options& o, std::ostream& out, std::ostream& err) {
  try {
    const rules::RuleSet rs = rules::load_rules(read_file(o.rules_file), o.rules_file);
    rules::validate(rs);
    Sink sink(o, out);
    sink.stream() << "ok " << o.rules_file << ": " << rs.rules.size() << " channel"
                  << (rs.rules.size() == 1 ? "" : "s")
                  << " ruleset=" << (rs.version.empty() ? "-" : rs.version) << '\n';
    sink.flush();
    return kExitClean;
  } catch (const Error& e) {
    err << "xara: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_rules_dump(const Options& o, std::ostream& out) {
  Sink sink(o, out);
  sink.stream() << rules::save_rules(rules::builtin_rules());
  sink.flush();
  return kExitClean;
}

int cmd_sim(const Options& o, bool platform_given, std::ostream& out, std::ostream& err) {
  const Format fmt = format_of(o);
  try {
    const sim::Scenario sc = sim::parse_scenario(read_file(o.scenario));
    Platform platform = Platform::kOsx;
    if (platform_given) {
      platform = *parse_platform(o.platform);
    } else if (sc.platform) {
      platform = *sc.platform;
    }
    monitor::AclProfile profiles;
    if (!o.profiles_path.empty()) profiles = monitor::parse_profiles(read_file(o.profiles_path));
    const sim::Trace trace = sim::run_scenario(sc.events, platform, sc.lines);
    std::vector<monitor::Alarm> alarms;
    if (o.monitor) alarms = monitor::watch_trace(trace, profiles);

    Sink sink(o, out);
    if (fmt == Format::kJson) {
      json j;
      j["scenario"] = o.scenario;
      j["trace"] = json::parse(sim::render_trace(trace, Format::kJson));
      if (o.monitor) j["alarms"] = json::parse(monitor::render_alarms(alarms, Format::kJson));
      sink.stream() << j.dump(2) << '\n';
    } else {
      sink.stream() << "scenario " << o.scenario << '\n' << sim::render_trace(trace, Format::kText);
      if (o.monitor) sink.stream() << monitor::render_alarms(alarms, Format::kText);
    }
    sink.flush();
    return alarms.empty() ? kExitClean : kExitAlarms;
  } catch (const Error& e) {
    err << "xara: " << o.scenario << ": " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Cross-app resource access scanner and registry simulator", "xara"};
  app.require_subcommand(1);
  const std::vector<std::string> platforms{"osx", "ios"};
  const std::vector<std::string> formats{"text", "json"};

  auto common = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember(formats));
    sub->add_option("--out", o.out_path, "Write output to this file");
  };

  auto* quick = app.add_subcommand("quickscan", "Triage Mach-O files by channel usage");
  quick->add_option("paths", o.paths, "Mach-O files")->required();
  quick->add_option("--rules", o.rules_path, "Rule file (default: builtin)");
  common(quick);

  auto* analyze = app.add_subcommand("analyze", "Run the deep analysis on NAIF listings");
  analyze->add_option("paths", o.paths, "NAIF files")->required();
  analyze->add_option("--rules", o.rules_path, "Rule file (default: builtin)");
  analyze->add_option("--platform", o.platform, "Target platform")->check(CLI::IsMember(platforms));
  analyze->add_flag("--dump-cfg", o.dump_cfg, "Also emit each procedure's CFG as Graphviz");
  common(analyze);

  auto* rules_cmd = app.add_subcommand("rules", "Rule file tools");
  rules_cmd->require_subcommand(1);
  auto* check = rules_cmd->add_subcommand("check", "Validate a rule file");
  check->add_option("path", o.rules_file, "Rule file")->required();
  check->add_option("--out", o.out_path, "Write output to this file");
  auto* dump = rules_cmd->add_subcommand("dump", "Print the builtin rules");
  dump->add_option("--out", o.out_path, "Write output to this file");

  auto* sim_cmd = app.add_subcommand("sim", "Registry simulator");
  sim_cmd->require_subcommand(1);
  auto* sim_run = sim_cmd->add_subcommand("run", "Run a scenario file");
  sim_run->add_option("scenario", o.scenario, "Scenario file")->required();
  auto* plat =
      sim_run->add_option("--platform", o.platform, "Overrides the scenario's platform header")
          ->check(CLI::IsMember(platforms));
  sim_run->add_flag("--monitor", o.monitor, "Run the runtime scanner over the trace");
  sim_run->add_option("--profiles", o.profiles_path, "Keychain ACL profiles");
  common(sim_run);

  std::vector<std::string> argv_store{"xara"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitClean : kExitError;
  }

  try {
    if (quick->parsed()) return cmd_quickscan(o, out, err);
    if (analyze->parsed()) return cmd_analyze(o, out, err);
    if (check->parsed()) return cmd_rules_check(o, out, err);
    if (dump->parsed()) return cmd_rules_dump(o, out);
    if (sim_run->parsed()) return cmd_sim(o, plat->count() > 0, out, err);
  } catch (const Error& e) {
    err << "xara: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "xara: internal error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace xara::cli
