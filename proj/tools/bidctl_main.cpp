// Command-line front end: generate synthetic inventory, run a single
// controlled campaign, or sweep a method x priority experiment grid.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bidctl/experiment.hpp"
#include "bidctl/io.hpp"
#include "bidctl/serialize.hpp"
#include "bidctl/simulator.hpp"

namespace fs = std::filesystem;
using namespace bidctl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct CommonArgs {
  std::string config_path;
  std::string inventory_path;
  std::string out_dir = "out";
  std::string format;  // "", "json" or "csv"
  std::optional<std::uint64_t> seed;
};

std::vector<KpiKind> parse_priority_list(const std::string& csv) {
  std::vector<KpiKind> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string name =
        csv.substr(start, comma == std::string::npos ? std::string::npos
                                                     : comma - start);
    if (!name.empty()) {
      const auto kpi = parse_kpi(name);
      if (!kpi)
        throw InvalidConfigError({{ConfigErrorCode::InvalidArgument,
                                   "unknown KPI '" + name +
                                       "' in --priority (expected "
                                       "pacing|cpc|cpa|viewability)"}});
      out.push_back(*kpi);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

json load_config(const std::string& path) {
  if (path.empty())
    throw InvalidConfigError(
        {{ConfigErrorCode::InvalidArgument, "--config is required"}});
  return load_json_file(path);
}

int cmd_generate(const CommonArgs& args,
                 const std::optional<std::size_t>& count) {
  const json cfg = load_config(args.config_path);
  SynthesisParams params = cfg.value("synthesis", SynthesisParams{});
  if (args.seed) params.seed = *args.seed;
  if (count) params.count = *count;

  const auto inventory = generate_inventory(params);
  fs::create_directories(args.out_dir);
  const auto path = (fs::path(args.out_dir) / "inventory.csv").string();
  write_csv(inventory, path);
  std::cerr << "wrote " << inventory.size() << " records to " << path << "\n";
  return kExitOk;
}

int cmd_simulate(const CommonArgs& args, const std::string& method,
                 const std::string& priority) {
  const json cfg = load_config(args.config_path);
  if (!cfg.contains("campaign"))
    throw InvalidConfigError({{ConfigErrorCode::InvalidArgument,
                               "config file needs a 'campaign' section"}});
  CampaignConfig campaign = cfg.at("campaign").get<CampaignConfig>();
  SelectorConfig selector = cfg.value("selector", SelectorConfig{});
  const WeightMatrix weights = cfg.value("weights", WeightMatrix{});
  const PidSettings pid = cfg.value("pid", PidSettings{});

  if (!method.empty()) {
    const auto parsed = parse_method(method);
    if (!parsed)
      throw InvalidConfigError({{ConfigErrorCode::InvalidArgument,
                                 "unknown --method '" + method + "'"}});
    selector.method = *parsed;
  }
  if (!priority.empty()) selector.priorities = parse_priority_list(priority);

  ensure_valid(campaign);

  std::vector<ImpressionRecord> inventory;
  if (!args.inventory_path.empty()) {
    inventory = load_csv(args.inventory_path);
  } else {
    SynthesisParams params = cfg.value("synthesis", SynthesisParams{});
    if (args.seed) params.seed = *args.seed;
    if (params.count == 0)
      params.count = static_cast<std::size_t>(campaign.num_intervals) *
                     static_cast<std::size_t>(campaign.auctions_per_interval);
    inventory = generate_inventory(params);
  }

  const auto reports =
      run_campaign(inventory, campaign, selector, weights, pid);

  fs::create_directories(args.out_dir);
  if (args.format.empty() || args.format == "json") {
    json out;
    out["campaign"] = campaign;
    out["selector"] = selector;
    out["weights"] = weights;
    out["pid"] = pid;
    out["intervals"] = reports;
    out["final"] = reports.back().cumulative;
    write_text_file((fs::path(args.out_dir) / "report.json").string(),
                    out.dump(2) + "\n");
  }
  if (args.format.empty() || args.format == "csv")
    write_text_file((fs::path(args.out_dir) / "timeseries.csv").string(),
                    timeseries_csv(reports));

  const auto& final = reports.back().cumulative;
  std::cerr << "simulated " << reports.size() << " intervals, spend "
            << format_double(final.totals.spend) << ", wins "
            << final.totals.wins << "\n";
  return kExitOk;
}

int cmd_experiment(const CommonArgs& args) {
  const json cfg = load_config(args.config_path);
  ExperimentSpec spec;
  if (cfg.contains("experiment")) cfg.at("experiment").get_to(spec);
  if (cfg.contains("campaign")) cfg.at("campaign").get_to(spec.campaign);
  if (cfg.contains("synthesis")) cfg.at("synthesis").get_to(spec.synthesis);
  if (cfg.contains("weights")) cfg.at("weights").get_to(spec.weights);
  if (cfg.contains("pid")) cfg.at("pid").get_to(spec.pid);
  if (args.seed) spec.seeds = {*args.seed};

  validate_spec(spec);

  ExperimentReport report;
  if (!args.inventory_path.empty()) {
    const auto base = load_csv(args.inventory_path);
    report = run_experiment(spec, base);
  } else {
    report = run_experiment(spec);
  }

  if (args.format == "json") {
    fs::create_directories(args.out_dir);
    write_text_file((fs::path(args.out_dir) / "comparison.json").string(),
                    experiment_report_json(report).dump(2) + "\n");
  } else {
    write_experiment_outputs(report, args.out_dir);
  }
  std::cerr << "ran " << report.cells.size() << " cells over "
            << report.spec.seeds.size() << " seed(s) into " << args.out_dir
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate KPI feedback control over replayed ad auctions"};
  app.require_subcommand(1);

  CommonArgs args;
  std::optional<std::size_t> gen_count;
  std::string method;
  std::string priority;

  auto add_common = [&](CLI::App* cmd, bool with_inventory) {
    cmd->add_option("--config", args.config_path, "JSON config file")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "RNG seed override");
    cmd->add_option("--format", args.format, "json or csv (default: both)")
        ->check(CLI::IsMember({"json", "csv"}));
    if (with_inventory)
      cmd->add_option("--inventory", args.inventory_path,
                      "impression log CSV to replay");
  };

  auto* generate =
      app.add_subcommand("generate", "synthesize an impression log CSV");
  add_common(generate, false);
  generate->add_option("--count", gen_count, "number of records");

  auto* simulate =
      app.add_subcommand("simulate", "run one controlled campaign");
  add_common(simulate, true);
  simulate->add_option("--method", method, "baseline|aao|simple|smart");
  simulate->add_option("--priority", priority,
                       "comma-separated KPI priority order");

  auto* experiment = app.add_subcommand(
      "experiment", "sweep the method x priority grid against baseline");
  add_common(experiment, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (generate->parsed()) return cmd_generate(args, gen_count);
    if (simulate->parsed()) return cmd_simulate(args, method, priority);
    if (experiment->parsed()) return cmd_experiment(args);
  } catch (const InvalidConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InvalidDistributionParamsError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const InventoryTooSmallError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const MissingBaselineKpiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitValidation;
}
