#include <iomanip>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "agora/charts.hpp"
#include "agora/config.hpp"
#include "agora/evaluation.hpp"
#include "agora/http_backend.hpp"
#include "agora/orchestrator.hpp"
#include "agora/scripted_backend.hpp"

namespace {

std::string cell(const agora::ordered_json& values, const char* key, const std::string& fallback) {
  if (!values.contains(key)) return fallback;
  const auto& v = values[key];
  return v.is_string() ? v.get<std::string>() : v.dump();
}

void print_jobs(const std::vector<agora::JobSpec>& jobs) {
  std::cout << std::left << std::setw(5) << "#" << std::setw(28) << "run" << std::setw(8) << "repeat" << std::setw(10)
            << "baseline" << std::setw(10) << "paradigm" << std::setw(26) << "protocol"
            << "output\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const bool baseline = j.values.contains("use_baseline") && j.values["use_baseline"] == true;
    std::cout << std::left << std::setw(5) << i + 1 << std::setw(28) << j.run_name() << std::setw(8) << j.repeat_index
              << std::setw(10) << cell(j.values, "use_baseline", "false") << std::setw(10)
              << (baseline ? "-" : cell(j.values, "discussion_paradigm", "memory")) << std::setw(26)
              << (baseline ? "-" : cell(j.values, "decision_protocol", "majority_consensus")) << j.output_path() << "\n";
  }
  std::cout << jobs.size() << " job(s)\n";
}

int cmd_run(const std::string& config_path, const std::string& backend, bool dry_run, int max_retries) {
  const auto jobs = agora::expand_config(agora::load_config(config_path));
  if (dry_run) {
    print_jobs(jobs);
    return 0;
  }

  agora::BatchOptions opts;
  opts.gateway.max_retries = max_retries;
  opts.progress = [](const std::string& line) { std::cerr << line << "\n"; };
  if (backend.rfind("scripted:", 0) == 0) {
    const auto script = agora::load_script(backend.substr(9));
    opts.backend = [script](const agora::JobSettings&) { return std::make_shared<agora::ScriptedBackend>(script); };
    opts.run.virtual_clock = true;
  } else if (backend == "http") {
    opts.backend = [](const agora::JobSettings& s) -> std::shared_ptr<agora::ChatBackend> {
      if (s.endpoint_url.empty()) throw agora::ConfigMissingRequired("endpoint_url");
      if (s.model_name.empty()) throw agora::ConfigMissingRequired("model_name");
      return std::make_shared<agora::HttpBackend>(s.endpoint_url, s.api_key);
    };
  } else {
    throw agora::ConfigInvalid("unknown backend '" + backend + "' (expected http or scripted:<file>)");
  }

  const auto summary = agora::run_batch(jobs, opts);
  for (const auto& j : summary.jobs) {
    std::cout << j.output_path << ": " << j.records << " record(s), " << j.failures << " failed";
    if (!j.error.empty()) std::cout << " [" << j.error << "]";
    std::cout << "\n";
  }
  std::cout << "total: " << summary.records << " record(s), " << summary.failed_debates << " failed debate(s), "
            << summary.failed_jobs << " failed job(s), " << std::fixed << std::setprecision(2)
            << summary.wall_clock_s << " s\n";
  return summary.ok() ? 0 : 1;
}

int cmd_evaluate(const std::string& logs, const std::string& dataset, const std::string& out,
                 const std::vector<std::string>& metrics) {
  for (const auto& m : metrics) {
    const auto& known = agora::known_metrics();
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw agora::PreconditionViolation("unknown metric '" + m + "'");
  }
  const auto records = agora::load_records(logs);
  const auto samples = agora::load_dataset_auto(dataset);
  const auto results = agora::evaluate(records, samples, metrics);
  for (const auto& p : agora::write_evals(results, out)) std::cout << p.string() << "\n";
  return 0;
}

int cmd_chart(const std::string& evals, const std::string& out, const std::string& metric) {
  const auto results = agora::load_evals(evals);
  const auto files =
      agora::charts::emit_charts(results, out, metric.empty() ? std::nullopt : std::optional<std::string>(metric));
  for (const auto& p : files) std::cout << p.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agora: multi-agent debate runner and evaluator"};
  app.require_subcommand(1);

  std::string config, backend = "http";
  bool dry_run = false;
  int max_retries = 3;
  auto* run = app.add_subcommand("run", "Run every job of a batch config");
  run->add_option("--config", config, "Batch config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--backend", backend, "http (default) or scripted:<script.json>");
  run->add_flag("--dry-run", dry_run, "Print the expanded job table and exit");
  run->add_option("--max-retries", max_retries, "Retries per call on transient endpoint errors")
      ->check(CLI::NonNegativeNumber);

  std::string logs, dataset, eval_out;
  std::vector<std::string> metrics;
  auto* evaluate = app.add_subcommand("evaluate", "Score debate logs against a dataset");
  evaluate->add_option("--logs", logs, "Log file or directory")->required()->check(CLI::ExistingPath);
  evaluate->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Output directory")->required();
  evaluate->add_option("--metrics", metrics, "Metrics to compute (default: by dataset)")->delimiter(',');

  std::string evals, chart_out, metric;
  auto* chart = app.add_subcommand("chart", "Render charts from eval.json files");
  chart->add_option("--evals", evals, "Directory of eval.json files")->required()->check(CLI::ExistingPath);
  chart->add_option("--out", chart_out, "Output directory")->required();
  chart->add_option("--metric", metric, "Only chart this metric in the score chart");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, backend, dry_run, max_retries);
    if (*evaluate) return cmd_evaluate(logs, dataset, eval_out, metrics);
    if (*chart) return cmd_chart(evals, chart_out, metric);
  } catch (const std::exception& e) {
    std::cerr << "agora: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
