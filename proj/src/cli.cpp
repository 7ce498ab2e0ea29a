#include "gravity/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <unistd.h>

#include "gravity/corrections.hpp"
#include "gravity/diagnostics.hpp"
#include "gravity/error.hpp"
#include "gravity/json_io.hpp"
#include "gravity/panel.hpp"
#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"
#include "gravity/simulator.hpp"

#ifndef GRAVITY_VERSION
#define GRAVITY_VERSION "0.0.0"
#endif

namespace gravity::cli {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path temp = path;
  temp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + temp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(temp, ignored);
      throw Error("write to '" + temp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(temp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(temp, ignored);
    throw Error("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

std::string suggest(std::string_view unknown, const std::vector<std::string>& candidates) {
  auto distance = [](std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      std::size_t diagonal = row[0];
      row[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        const std::size_t above = row[j];
        row[j] = std::min({row[j] + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
        diagonal = above;
      }
    }
    return row[b.size()];
  };
  std::string best;
  std::size_t best_distance = 0;
  for (const std::string& c : candidates) {
    const std::size_t d = distance(unknown, c);
    if (best.empty() || d < best_distance) {
      best = c;
      best_distance = d;
    }
  }
  const std::size_t limit = std::max<std::size_t>(2, unknown.size() / 3);
  return best_distance <= limit ? best : std::string();
}

namespace {

struct SchemaOptions {
  std::string exporter = "exporter";
  std::string importer = "importer";
  std::string period = "year";
  std::string flow = "trade";
  std::string delimiter = ",";

  ColumnSchema schema(std::vector<std::string> covariates = {}) const {
    if (delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    ColumnSchema s;
    s.exporter = exporter;
    s.importer = importer;
    s.period = period;
    s.flow = flow;
    s.covariates = std::move(covariates);
    s.delimiter = delimiter[0];
    return s;
  }
};

struct EstimateOptions {
  double tolerance = EstimateConfig{}.foc_tolerance;
  int max_iterations = EstimateConfig{}.max_outer_iterations;

  EstimateConfig config() const {
    EstimateConfig c;
    c.foc_tolerance = tolerance;
    c.max_outer_iterations = max_iterations;
    c.validate();
    return c;
  }
};

struct Options {
  std::string manifest;
  SchemaOptions columns;
  EstimateOptions estimation;

  // prune
  std::string prune_input, prune_output, prune_report;

  // estimate
  std::string estimate_input, estimate_out, cluster = "pair", correction, odd_split = "overlap";
  std::vector<std::string> covariates;
  bool export_fe = false, prune_first = false;

  // diagnose
  std::string diagnose_input, diagnose_out, pair_presence;

  // report
  std::string report_inputs, report_out, figure_data, aggregate_label = "Agg";

  // simulate
  std::string dgp = "wz1", attrition = "eta-smallest", error_mode = "unit-mean", simulate_out;
  int N = 200, T = 5, reps = 100, threads = 1;
  std::vector<double> psi{0.0};
  std::vector<std::string> estimators{"feppml", "spj"};
  std::optional<std::uint64_t> seed;
  bool heuristic_design = false;
  double beta = 1.0;
  double effect_variance = DgpConfig{}.effect_variance;
  double nu_variance = DgpConfig{}.nu_variance;
  double xi_variance = DgpConfig{}.xi_variance;
};

// Inputs, outputs and extra facts of one run, collected for the manifest.
struct RunRecord {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  Json extra = Json::object();
};

void add_column_options(CLI::App* sub, SchemaOptions& columns) {
  sub->add_option("--exporter-col", columns.exporter, "Exporter column name")->capture_default_str();
  sub->add_option("--importer-col", columns.importer, "Importer column name")->capture_default_str();
  sub->add_option("--period-col", columns.period, "Period column name")->capture_default_str();
  sub->add_option("--flow-col", columns.flow, "Trade flow column name")->capture_default_str();
  sub->add_option("--delimiter", columns.delimiter, "Field delimiter")->capture_default_str();
}

void add_estimation_options(CLI::App* sub, EstimateOptions& estimation) {
  sub->add_option("--tol", estimation.tolerance, "Tolerance on the scaled first-order conditions")
      ->capture_default_str();
  sub->add_option("--max-iter", estimation.max_iterations, "Maximum Newton iterations")->capture_default_str();
}

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

Json describe_file(const fs::path& path) {
  Json entry = {{"path", path.string()}};
  std::ifstream in(path, std::ios::binary);
  if (!in) return entry;
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  std::uint64_t bytes = 0;
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof buffer);
    const std::streamsize got = in.gcount();
    for (std::streamsize k = 0; k < got; ++k) {
      hash ^= static_cast<unsigned char>(buffer[k]);
      hash *= 0x100000001b3ULL;
    }
    bytes += static_cast<std::uint64_t>(got);
  }
  entry["bytes"] = bytes;
  entry["fnv1a64"] = hex64(hash);
  return entry;
}

void emit(const std::string& path, const std::string& content, std::ostream& out, RunRecord& record) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  write_atomic(path, content);
  record.outputs.emplace_back(path);
}

std::string dump(const Json& json) { return json.dump(2) + "\n"; }

GravityPanel load(const std::string& path, const ColumnSchema& schema, RunRecord& record) {
  record.inputs.emplace_back(path);
  return load_panel_file(path, schema);
}

void run_prune(const Options& o, std::ostream& out, RunRecord& record) {
  const GravityPanel panel = load(o.prune_input, o.columns.schema(), record);
  const PruneResult result = prune(panel);
  const Json report = to_json(result.report, panel.labels());
  std::string panel_text;
  if (!o.prune_output.empty()) {
    std::ostringstream buffer;
    write_panel(buffer, result.panel, o.columns.schema());
    panel_text = buffer.str();
  }
  if (!o.prune_output.empty()) emit(o.prune_output, panel_text, out, record);
  if (!o.prune_report.empty()) {
    emit(o.prune_report, dump(report), out, record);
  } else {
    Json brief = to_json(result.report, panel.labels(), false);
    out << dump(brief);
  }
}

void run_estimate(const Options& o, std::ostream& out, RunRecord& record) {
  const EstimateConfig config = o.estimation.config();
  const ClusterGrouping cluster = parse_cluster_grouping(o.cluster);
  const OddPeriodSplit split = parse_odd_period_split(o.odd_split);
  CorrectionRegistry registry = CorrectionRegistry::with_defaults();
  if (split != OddPeriodSplit::Overlap) {
    registry = CorrectionRegistry();
    registry.register_correction("spj", [split](const CorrectionContext& ctx) {
      return spj(ctx.panel, ctx.config, &ctx.full_fit, split);
    });
  }
  if (!o.correction.empty() && !registry.contains(o.correction)) {
    throw ConfigError("unknown correction '" + o.correction + "'");
  }

  GravityPanel panel = load(o.estimate_input, o.columns.schema(o.covariates), record);
  std::optional<PruneReport> prune_report;
  if (o.prune_first) {
    PruneResult pruned = prune(panel);
    panel = std::move(pruned.panel);
    prune_report = std::move(pruned.report);
  }
  const FitResult result = fit(panel, config);

  FitJsonOptions json_options;
  json_options.export_fixed_effects = o.export_fe;
  json_options.foc_tolerance = config.foc_tolerance;
  std::vector<std::string> warnings;
  if (!result.beta.empty()) {
    try {
      json_options.vcov = cluster_robust_vcov(panel, result, ClusterSpec{cluster}, config);
      json_options.cluster = cluster;
    } catch (const Error& e) {
      warnings.push_back(std::string("standard errors unavailable: ") + e.what());
    }
  }
  Json json = to_json(result, panel.labels(), json_options);
  if (prune_report) json["prune"] = to_json(*prune_report, panel.labels(), false);
  if (!o.correction.empty()) {
    const CorrectionResult corrected = registry.run(o.correction, CorrectionContext{panel, config, result});
    json["correction"] = to_json(corrected, panel.labels());
  }
  if (!warnings.empty()) {
    for (const auto& w : warnings) json["warnings"].push_back(w);
  }
  emit(o.estimate_out, dump(json), out, record);
}

void run_diagnose(const Options& o, std::ostream& out, RunRecord& record) {
  const GravityPanel panel = load(o.diagnose_input, o.columns.schema(), record);
  const PruneResult pruned = prune(panel);
  const UnbalancednessDiagnostic diagnostic = heuristic_bias_order(pruned.report.dims_after, pruned.report.dims_before);
  Json json = {{"prune", to_json(pruned.report, panel.labels(), false)}, {"diagnostic", to_json(diagnostic)}};
  std::string presence;
  if (!o.pair_presence.empty()) presence = pair_presence_csv(pair_presence_map(panel, pruned.panel));
  if (!o.pair_presence.empty()) emit(o.pair_presence, presence, out, record);
  emit(o.diagnose_out, dump(json), out, record);
}

// Stems that all parse as integers sort numerically, others lexically.
std::vector<fs::path> report_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("input directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  auto as_number = [](const fs::path& p) -> std::optional<long long> {
    const std::string stem = p.stem().string();
    if (stem.empty() || stem.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return std::stoll(stem);
  };
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    const auto na = as_number(a), nb = as_number(b);
    if (na && nb) return *na < *nb;
    if (na != std::nullopt || nb != std::nullopt) return na.has_value();
    return a.stem().string() < b.stem().string();
  });
  return files;
}

void run_report(const Options& o, std::ostream& out, RunRecord& record) {
  const ColumnSchema schema = o.columns.schema();
  std::vector<IndustryRow> rows;
  for (const fs::path& file : report_files(o.report_inputs)) {
    const std::string label = file.stem().string();
    try {
      rows.push_back(industry_row(label, load(file.string(), schema, record)));
    } catch (const Error& e) {
      rows.push_back(industry_error_row(label, e.what()));
    }
  }
  const std::string table = industry_table_csv(rows);
  const std::string figure = o.figure_data.empty() ? std::string() : figure_data_csv(rows);

  const AverageOrder average = average_leading_order(rows, o.aggregate_label);
  Json summary = {{"rows", rows.size()},
                  {"failed", std::count_if(rows.begin(), rows.end(), [](const IndustryRow& r) { return !r.ok(); })},
                  {"aggregate_label", o.aggregate_label}};
  if (average.rows_excluding > 0) {
    summary["average_leading_order_excluding_aggregate"] = average.excluding_aggregate;
    summary["average_min_partners_excluding_aggregate"] = 1.0 / average.excluding_aggregate;
  }
  if (average.rows_including > 0) {
    summary["average_leading_order_including_aggregate"] = average.including_aggregate;
    summary["average_min_partners_including_aggregate"] = 1.0 / average.including_aggregate;
  }
  record.extra["summary"] = summary;

  if (!figure.empty()) emit(o.figure_data, figure, out, record);
  emit(o.report_out, table, out, record);
  if (!o.report_out.empty() && o.report_out != "-") out << dump(summary);
}

void run_simulate(const Options& o, std::ostream& out, RunRecord& record) {
  if (o.dgp != "wz1") throw ConfigError("unknown DGP '" + o.dgp + "' (expected wz1)");
  if (!o.seed) throw ConfigError("--seed is required");
  if (o.reps < 2) throw ConfigError("--reps must be at least 2");
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  if (o.psi.empty()) throw ConfigError("--psi needs at least one value");

  const CorrectionRegistry registry = CorrectionRegistry::with_defaults();
  for (const auto& name : o.estimators) {
    if (name != "feppml" && !registry.contains(name)) throw ConfigError("unknown estimator '" + name + "'");
  }
  std::vector<DgpConfig> configs;
  for (double psi : o.psi) {
    DgpConfig c;
    c.N = o.heuristic_design ? heuristic_validation_design(psi) : o.N;
    c.T = o.T;
    c.beta_true = o.beta;
    c.psi = psi;
    c.attrition = parse_attrition(o.attrition);
    c.error_mode = parse_error_mode(o.error_mode);
    c.seed = *o.seed;
    c.effect_variance = o.effect_variance;
    c.nu_variance = o.nu_variance;
    c.xi_variance = o.xi_variance;
    c.validate();
    configs.push_back(c);
  }
  MonteCarloOptions mc;
  mc.estimate = o.estimation.config();
  mc.threads = o.threads;

  std::string csv = summary_csv_header(o.estimators) + "\n";
  Json runs = Json::array();
  for (const DgpConfig& c : configs) {
    const MonteCarloSummary s =
        run_monte_carlo(c, static_cast<std::size_t>(o.reps), o.estimators, registry, mc);
    csv += summary_csv_row(s) + "\n";
    Json run = {{"psi", c.psi}, {"N", c.N}, {"high_failure_rate", s.high_failure_rate}};
    Json failures = Json::object();
    for (const EstimatorSummary& e : s.estimators) failures[e.name] = e.failures;
    run["failures"] = failures;
    if (!s.failure_messages.empty()) run["failure_messages"] = s.failure_messages;
    runs.push_back(std::move(run));
  }
  record.extra["seed"] = *o.seed;
  record.extra["threads"] = o.threads;
  record.extra["runs"] = runs;
  emit(o.simulate_out, csv, out, record);
}

void write_manifest(const Options& o, const std::string& subcommand, const std::vector<std::string>& args,
                    const std::string& resolved, const RunRecord& record, double seconds, int status,
                    const std::string& primary_output, std::ostream& err) {
  Json manifest;
  manifest["tool"] = "gravity";
  manifest["version"] = GRAVITY_VERSION;
  manifest["subcommand"] = subcommand;
  manifest["argv"] = args;
  manifest["resolved_options"] = resolved;
  Json inputs = Json::array();
  for (const auto& p : record.inputs) inputs.push_back(describe_file(p));
  manifest["inputs"] = inputs;
  Json outputs = Json::array();
  for (const auto& p : record.outputs) outputs.push_back(describe_file(p));
  manifest["outputs"] = outputs;
  for (const auto& [key, value] : record.extra.items()) manifest[key] = value;
  manifest["versions"] = {{"gravity", GRAVITY_VERSION},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"cli11", CLI11_VERSION},
                          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                          {"compiler", __VERSION__}};
  manifest["wall_time_seconds"] = seconds;
  manifest["exit_status"] = status;

  std::string path = o.manifest;
  if (path.empty() && !primary_output.empty() && primary_output != "-") path = primary_output + ".manifest.json";
  if (path.empty()) {
    err << "manifest: " << manifest.dump() << "\n";
    return;
  }
  try {
    write_atomic(path, manifest.dump(2) + "\n");
  } catch (const Error& e) {
    err << "warning: " << e.what() << "\n";
  }
}

std::vector<std::string> option_names(const CLI::App* app) {
  std::vector<std::string> names;
  for (const CLI::App* scope : {app, app->get_parent()}) {
    if (!scope) continue;
    for (const CLI::Option* opt : scope->get_options()) {
      for (const auto& l : opt->get_lnames()) names.push_back("--" + l);
    }
  }
  return names;
}

int report_unknown_options(const CLI::App& app, const std::vector<std::string>& args, std::ostream& err) {
  const CLI::App* scope = &app;
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') continue;
    if (const CLI::App* sub = app.get_subcommand_no_throw(a)) scope = sub;
    break;
  }
  const std::vector<std::string> known = option_names(scope);
  bool reported = false;
  for (const auto& a : args) {
    if (a.size() < 2 || a[0] != '-' || a == "-") continue;
    const std::string name = a.substr(0, a.find('='));
    if (std::find(known.begin(), known.end(), name) != known.end()) continue;
    if (name == "-h" || name == "--help") continue;
    err << "error: unknown option '" << name << "'";
    const std::string hint = suggest(name, known);
    if (!hint.empty()) err << "; did you mean '" << hint << "'?";
    err << "\n";
    reported = true;
  }
  return reported ? kExitUsageError : 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Three-way fixed-effects PPML for gravity panels: pruning, estimation, diagnostics, simulation",
               "gravity"};
  app.set_version_flag("--version", GRAVITY_VERSION);
  app.set_config("--config", "", "TOML or INI file whose keys mirror the command-line flags");
  app.add_option("--manifest", o.manifest, "Run manifest path (default: <output>.manifest.json)");
  app.require_subcommand(1);

  CLI::App* prune_cmd = app.add_subcommand("prune", "Drop uninformative observations");
  prune_cmd->add_option("--input", o.prune_input, "Input panel CSV")->required();
  prune_cmd->add_option("--output", o.prune_output, "Pruned panel CSV");
  prune_cmd->add_option("--report", o.prune_report, "Prune report JSON");
  add_column_options(prune_cmd, o.columns);

  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Fit three-way FE-PPML");
  estimate_cmd->add_option("--input", o.estimate_input, "Input panel CSV")->required();
  estimate_cmd->add_option("--covariates", o.covariates, "Covariate columns (default: all others)")->delimiter(',');
  estimate_cmd->add_option("--cluster", o.cluster, "Cluster grouping: pair, exporter, importer, none")
      ->capture_default_str();
  estimate_cmd->add_option("--out", o.estimate_out, "Fit JSON (default: stdout)");
  estimate_cmd->add_flag("--export-fe", o.export_fe, "Include the fixed-effect values");
  estimate_cmd->add_option("--correction", o.correction, "Bias correction to apply (spj)");
  estimate_cmd->add_option("--odd-split", o.odd_split, "Odd-period halving: overlap or drop-middle")
      ->capture_default_str();
  estimate_cmd->add_flag("--prune", o.prune_first, "Prune before fitting");
  add_column_options(estimate_cmd, o.columns);
  add_estimation_options(estimate_cmd, o.estimation);

  CLI::App* diagnose_cmd = app.add_subcommand("diagnose", "Latent unbalancedness of one panel");
  diagnose_cmd->add_option("--input", o.diagnose_input, "Input panel CSV")->required();
  diagnose_cmd->add_option("--out", o.diagnose_out, "Diagnostic JSON (default: stdout)");
  diagnose_cmd->add_option("--pair-presence", o.pair_presence, "Pair presence CSV (exporter, importer, count)");
  add_column_options(diagnose_cmd, o.columns);

  CLI::App* report_cmd = app.add_subcommand("report", "Sample size and partner table over a directory of panels");
  report_cmd->add_option("--inputs", o.report_inputs, "Directory of panel CSV files")->required();
  report_cmd->add_option("--out", o.report_out, "Table CSV (default: stdout)");
  report_cmd->add_option("--figure-data", o.figure_data, "Figure CSV (label, I_bar, J_bar)");
  report_cmd->add_option("--aggregate-label", o.aggregate_label, "Label of the aggregate row")->capture_default_str();
  add_column_options(report_cmd, o.columns);

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo study on simulated gravity panels");
  simulate_cmd->add_option("--dgp", o.dgp, "Data generating process")->capture_default_str();
  simulate_cmd->add_option("--N", o.N, "Number of countries")->capture_default_str();
  simulate_cmd->add_option("--T", o.T, "Number of periods")->capture_default_str();
  simulate_cmd->add_option("--beta", o.beta, "True slope")->capture_default_str();
  simulate_cmd->add_option("--psi", o.psi, "Attrition fractions, comma separated")->delimiter(',');
  simulate_cmd->add_option("--reps", o.reps, "Replications per psi")->capture_default_str();
  simulate_cmd->add_option("--attrition", o.attrition, "eta-smallest, random-pairs or none")->capture_default_str();
  simulate_cmd->add_option("--estimators", o.estimators, "Estimators, comma separated")->delimiter(',');
  simulate_cmd->add_option("--seed", o.seed, "Master seed")->required();
  simulate_cmd->add_option("--error-mode", o.error_mode, "unit-mean or literal")->capture_default_str();
  simulate_cmd->add_option("--threads", o.threads, "Worker threads")->envname("GRAVITY_THREADS")->capture_default_str();
  simulate_cmd->add_flag("--heuristic-design", o.heuristic_design, "Use N = floor(20 / (1 - psi)) for each psi");
  simulate_cmd->add_option("--effect-variance", o.effect_variance, "Variance of the fixed effects")
      ->capture_default_str();
  simulate_cmd->add_option("--nu-variance", o.nu_variance, "Variance of the covariate shocks")->capture_default_str();
  simulate_cmd->add_option("--xi-variance", o.xi_variance, "Variance of the error innovations")->capture_default_str();
  simulate_cmd->add_option("--out", o.simulate_out, "Summary CSV (default: stdout)");
  add_estimation_options(simulate_cmd, o.estimation);

  std::vector<const char*> argv{"gravity"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ExtrasError&) {
    if (report_unknown_options(app, args, err) == kExitUsageError) return kExitUsageError;
    err << "error: unexpected arguments\n";
    return kExitUsageError;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsageError;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string subcommand = chosen->get_name();
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  int status = kExitSuccess;
  try {
    if (subcommand == "prune") run_prune(o, out, record);
    else if (subcommand == "estimate") run_estimate(o, out, record);
    else if (subcommand == "diagnose") run_diagnose(o, out, record);
    else if (subcommand == "report") run_report(o, out, record);
    else run_simulate(o, out, record);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    status = kExitDomainError;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::string primary;
  if (subcommand == "prune") primary = !o.prune_report.empty() ? o.prune_report : o.prune_output;
  else if (subcommand == "estimate") primary = o.estimate_out;
  else if (subcommand == "diagnose") primary = o.diagnose_out;
  else if (subcommand == "report") primary = o.report_out;
  else primary = o.simulate_out;
  if (status == kExitSuccess) {
    write_manifest(o, subcommand, args, app.config_to_str(true, false), record, seconds, status, primary, err);
  }
  return status;
}

}  // namespace gravity::cli
