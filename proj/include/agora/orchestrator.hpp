#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "agora/agents.hpp"
#include "agora/config.hpp"
#include "agora/datasets.hpp"
#include "agora/debate_state.hpp"
#include "agora/decisions.hpp"
#include "agora/gateway.hpp"
#include "agora/log_json.hpp"
#include "agora/paradigms.hpp"
#include "agora/prompts.hpp"

namespace agora {

struct RunOptions {
  // Scripted runs report the sum of scripted latencies instead of real
  // elapsed time so their logs are reproducible.
  bool virtual_clock = false;
  bool parallel_report_peers = false;
  PersonaGenerationOptions persona;
};

namespace detail {

inline DebateRecord start_record(const JobSpec& job, const JobSettings& s, const TaskInstance& sample) {
  DebateRecord r;
  r.config = redacted(job.values);
  r.run_name = job.run_name();
  r.repeat_index = job.repeat_index;
  r.task = sample;
  if (!s.instruction_key.empty()) r.task.instruction_key = s.instruction_key;
  return r;
}

inline std::int64_t clock_ms(const DebateRecord& r, std::chrono::steady_clock::time_point start, bool virtual_clock) {
  if (!virtual_clock)
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  std::int64_t total = 0;
  for (const auto& m : r.messages) total += m.wall_clock_ms;
  return total;
}

}  // namespace detail

inline DebateRecord run_debate(const JobSpec& job, const JobSettings& s, const TaskInstance& sample,
                               const Gateway& gateway, const RunOptions& opts = {}) {
  const auto start = std::chrono::steady_clock::now();
  auto record = detail::start_record(job, s, sample);
  const LlmSettings llm{s.model_name, SamplingParams{}};
  std::optional<DebateState> state;
  try {
    auto panel = build_panel(s.persona_generator, s.num_agents, s.response_generator, record.task, gateway, llm,
                             opts.persona, &record.persona_generation);
    record.personas = panel;
    state = make_debate_state(record.task, std::move(panel));

    TurnOptions turn_opts;
    turn_opts.llm = llm;
    turn_opts.max_turns = s.max_turns;
    turn_opts.debate_exchanges = s.debate_exchanges;
    turn_opts.parallel_report_peers = opts.parallel_report_peers;
    DecisionOptions decision_opts;
    decision_opts.protocol = s.decision_protocol;
    decision_opts.max_turns = s.max_turns;
    decision_opts.voting_after_turns = s.voting_after_turns;
    decision_opts.cumulative_points = s.cumulative_points;
    decision_opts.llm = llm;
    Decider decider(decision_opts);

    while (!state->ended) {
      run_turn(s.discussion_paradigm, *state, gateway, turn_opts);
      if (auto outcome = decider.after_turn(*state, gateway)) finish(*state, std::move(*outcome));
    }
    record.outcome = *state->outcome;
  } catch (const std::exception& e) {
    record.error = e.what();
    DecisionOutcome failed;
    failed.protocol = s.decision_protocol;
    failed.success = false;
    failed.fallback_reason = std::string("debate failed: ") + e.what();
    if (state) {
      failed.decided_at_turn = state->turn;
      if (state->current_draft) failed.final_text = state->current_draft->text;
    }
    record.outcome = std::move(failed);
  }
  if (state) record.messages = state->transcript;
  record.global_clock_ms = detail::clock_ms(record, start, opts.virtual_clock);
  return record;
}

inline ChatRequest baseline_request(const TaskInstance& task, bool chain_of_thought, const LlmSettings& llm) {
  const auto system = render_prompt("baseline_system", {{"instruction", task_instruction(task)},
                                                        {"input", task_input(task)},
                                                        {"context", task_context(task)}});
  const std::string user = chain_of_thought ? std::string(prompt_text("baseline_user")) : std::string();
  return ChatRequest::make(llm.model_name, system, user, llm.sampling);
}

// Single-agent reference run, logged as a one-message debate.
inline DebateRecord run_baseline(const JobSpec& job, const JobSettings& s, const TaskInstance& sample,
                                 const Gateway& gateway, const RunOptions& opts = {}) {
  if (!s.use_baseline) throw PreconditionViolation("run_baseline on a job without use_baseline");
  const auto start = std::chrono::steady_clock::now();
  auto record = detail::start_record(job, s, sample);
  record.baseline = true;
  const LlmSettings llm{s.model_name, SamplingParams{}};
  try {
    const auto resp = gateway.complete(baseline_request(record.task, s.use_chain_of_thought, llm));
    Message m;
    m.seq = 1;
    m.turn = 1;
    m.agent_id = 1;
    m.phase = Phase::Draft;
    m.text = resp.text;
    m.proposal = true;
    m.wall_clock_ms = resp.latency_ms;
    record.messages.push_back(m);
    record.outcome.final_text = resp.text;
    record.outcome.success = true;
    record.outcome.decided_at_turn = 1;
  } catch (const std::exception& e) {
    record.error = e.what();
    record.outcome.success = false;
    record.outcome.fallback_reason = std::string("baseline failed: ") + e.what();
  }
  record.global_clock_ms = detail::clock_ms(record, start, opts.virtual_clock);
  return record;
}

inline DebateRecord run_job_sample(const JobSpec& job, const JobSettings& s, const TaskInstance& sample,
                                   const Gateway& gateway, const RunOptions& opts = {}) {
  return s.use_baseline ? run_baseline(job, s, sample, gateway, opts) : run_debate(job, s, sample, gateway, opts);
}

// Samples a job runs over: the dataset, subset by num_samples and seed.
inline std::vector<TaskInstance> job_samples(const JobSettings& s) {
  auto samples = load_dataset_auto(s.input_path);
  if (s.num_samples) samples = subset(samples, *s.num_samples, s.seed);
  return samples;
}

using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const JobSettings&)>;

struct BatchOptions {
  BackendFactory backend;  // called once per debate
  GatewayOptions gateway;  // max_in_flight is raised to the largest concurrent_api_requests
  RunOptions run;
  int max_workers = 64;
  std::function<void(const std::string&)> progress;
};

struct JobSummary {
  std::string output_path;
  std::string run_name;
  int repeat_index = 1;
  int records = 0;
  int failures = 0;
  std::string error;  // job-level problem (bad settings, dataset, output path)
};

struct BatchSummary {
  std::vector<JobSummary> jobs;
  int records = 0;
  int failed_debates = 0;
  int failed_jobs = 0;
  double wall_clock_s = 0.0;

  bool ok() const { return failed_debates == 0 && failed_jobs == 0; }
};

// Runs every (job, sample) debate on a worker pool. Each job's records are
// written to its output file in sample order once the job is complete.
inline BatchSummary run_batch(const std::vector<JobSpec>& jobs, const BatchOptions& opts) {
  if (jobs.empty()) throw PreconditionViolation("run_batch needs at least one job");
  if (!opts.backend) throw PreconditionViolation("run_batch needs a backend factory");
  const auto start = std::chrono::steady_clock::now();

  struct JobState {
    JobSettings settings;
    std::vector<TaskInstance> samples;
    std::vector<std::optional<DebateRecord>> records;
    std::size_t remaining = 0;
    bool runnable = false;
  };
  std::vector<JobState> states(jobs.size());
  BatchSummary summary;
  summary.jobs.resize(jobs.size());
  int in_flight = std::max(1, opts.gateway.max_in_flight);

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto& js = summary.jobs[j];
    js.output_path = jobs[j].output_path();
    js.run_name = jobs[j].run_name();
    js.repeat_index = jobs[j].repeat_index;
    try {
      states[j].settings = resolve_job(jobs[j]);
      states[j].samples = job_samples(states[j].settings);
      const std::filesystem::path out(js.output_path);
      if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
      std::ofstream probe(out, std::ios::trunc);
      if (!probe) throw FormatError("cannot write " + js.output_path);
      in_flight = std::max(in_flight, states[j].settings.concurrent_api_requests);
      states[j].records.resize(states[j].samples.size());
      states[j].remaining = states[j].samples.size();
      states[j].runnable = true;
    } catch (const std::exception& e) {
      js.error = e.what();
      ++summary.failed_jobs;
      if (opts.progress) opts.progress("job " + js.output_path + " skipped: " + js.error);
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (states[j].runnable)
      for (std::size_t i = 0; i < states[j].samples.size(); ++i) units.emplace_back(j, i);

  auto gateway_opts = opts.gateway;
  gateway_opts.max_in_flight = in_flight;
  const Gateway base(nullptr, gateway_opts);
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto write_job = [&](std::size_t j) {
    auto& js = summary.jobs[j];
    std::ofstream out(js.output_path, std::ios::trunc);
    for (auto& r : states[j].records) {
      if (out) out << to_jsonl_line(*r);
      r.reset();
    }
    if (!out) js.error = "failed writing " + js.output_path;
    if (opts.progress)
      opts.progress("wrote " + js.output_path + " (" + std::to_string(js.records) + " records, " +
                    std::to_string(js.failures) + " failed)");
  };

  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const auto [j, i] = units[u];
      const auto& st = states[j];
      DebateRecord rec;
      try {
        const auto gw = base.with_backend(opts.backend(st.settings));
        rec = run_job_sample(jobs[j], st.settings, st.samples[i], gw, opts.run);
      } catch (const std::exception& e) {
        rec = detail::start_record(jobs[j], st.settings, st.samples[i]);
        rec.error = e.what();
        rec.outcome.fallback_reason = std::string("debate failed: ") + e.what();
      }
      std::lock_guard lock(mu);
      auto& js = summary.jobs[j];
      ++js.records;
      if (rec.failed()) ++js.failures;
      states[j].records[i] = std::move(rec);
      if (--states[j].remaining == 0) write_job(j);
    }
  };

  const auto n_workers = std::clamp<std::size_t>(units.size(), 1, static_cast<std::size_t>(std::max(1, std::min(in_flight, opts.max_workers))));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& js : summary.jobs) {
    summary.records += js.records;
    summary.failed_debates += js.failures;
    if (!js.error.empty() && js.records > 0) ++summary.failed_jobs;
  }
  summary.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

}  // namespace agora
