#include "mbsf/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include <mbsf/checkpoint.hpp>
#include <mbsf/harness.hpp>

#include "mbsf/oracle.hpp"

namespace mbsf {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
  std::string task;
  std::string out;
  std::size_t seeds = 20;
  std::string config;
  std::size_t jobs = 1;
  std::size_t episodes = 0;
  std::size_t cap = 0;
  std::string policy;
  std::string bonus;
  bool record_bound = false;
};

struct TransferOptions {
  std::string from;
  std::string source;
  std::string source_config;
};

void add_run_options(CLI::App* sub, RunOptions& o) {
  sub->add_option("--task", o.task, "built-in task name or TaskSpec file")->required();
  sub->add_option("--out", o.out, std::string("output directory (default $") + kOutDirEnv + ")");
  sub->add_option("--seeds", o.seeds, "number of seeds, run as 1..N")->check(CLI::PositiveNumber);
  sub->add_option("--config", o.config, "agent config JSON overriding the task defaults");
  sub->add_option("--jobs", o.jobs, "worker threads over seeds")->check(CLI::PositiveNumber);
  sub->add_option("--episodes", o.episodes, "episode budget (default: task)");
  sub->add_option("--cap", o.cap, "episode step cap (default: task)");
  sub->add_flag("--record-bound", o.record_bound, "record the error-bound trace per step");
}

void add_transfer_options(CLI::App* sub, TransferOptions& t, bool required) {
  auto* from = sub->add_option("--from", t.from, "checkpoint file (shared) or directory of seed_<n>.ckpt");
  auto* source = sub->add_option("--source", t.source, "train a matched-seed source run on this task first");
  sub->add_option("--source-config", t.source_config, "agent config for the source run");
  from->excludes(source);
  if (required) {
    auto* group = sub->add_option_group("transfer source");
    group->add_option(from);
    group->add_option(source);
    group->require_option(1);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

AgentConfig agent_config_for(const TaskSpec& task, const std::string& config_path) {
  AgentConfig cfg = AgentConfig::defaults_for(task);
  if (!config_path.empty()) cfg = parse_agent_config(read_text(config_path), cfg);
  return cfg;
}

std::string resolve_out(const std::string& out) {
  if (!out.empty()) return out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  throw ConfigError(std::string("no output directory: pass --out or set ") + kOutDirEnv);
}

ExperimentConfig base_experiment(const RunOptions& o) {
  ExperimentConfig cfg;
  cfg.task = resolve_task(o.task);
  cfg.agent = agent_config_for(cfg.task, o.config);
  if (!o.bonus.empty()) cfg.agent.bonus = parse_bonus_kind(o.bonus);
  if (!o.policy.empty()) cfg.policy = parse_policy_kind(o.policy);
  cfg.episodes = o.episodes;
  cfg.episode_cap = o.cap;
  cfg.seeds = default_seeds(o.seeds);
  cfg.jobs = o.jobs;
  cfg.record_bound = o.record_bound;
  return cfg;
}

void apply_transfer(ExperimentConfig& cfg, const TransferOptions& t) {
  if (!t.from.empty()) {
    cfg.checkpoint_in = t.from;
    cfg.transfer = fs::is_directory(t.from) ? TransferMode::per_seed : TransferMode::shared;
  } else if (!t.source.empty()) {
    cfg.transfer = TransferMode::matched_run;
    cfg.source_task = resolve_task(t.source);
    AgentConfig src = agent_config_for(*cfg.source_task, t.source_config);
    src.bonus = cfg.agent.bonus;
    cfg.source_agent = src;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::vector<RunRecord> run_and_write(const ExperimentConfig& cfg, const fs::path& dir,
                                     bool checkpoints, std::ostream& out) {
  fs::create_directories(dir);
  auto records = run_experiment(cfg, checkpoints);
  const Summary summary = aggregate(records);
  emit_csv(summary, (dir / "episodes.csv").string());
  emit_plotdata(records, (dir / "plotdata.csv").string());
  write_text(dir / "agent_config.json", dump_agent_config(cfg.agent));
  if (checkpoints) {
    const fs::path ckpt = dir / "checkpoints";
    fs::create_directories(ckpt);
    for (const auto& r : records) save_checkpoint(*r.final_agent, (ckpt / seed_checkpoint_name(r.seed)).string());
  }
  double steps = 0.0, seconds = 0.0;
  Diagnostics diag;
  for (const auto& r : records) {
    steps += static_cast<double>(r.total_steps);
    seconds += r.wall_seconds;
    diag += r.diagnostics;
  }
  out << "task=" << cfg.task.name << " policy=" << to_string(cfg.policy) << " runs=" << summary.runs
      << " episodes=" << summary.mean_length.size() << " grand_mean=" << format_fixed(summary.grand_mean, 3)
      << " grand_std=" << format_fixed(summary.grand_std, 3)
      << " us_per_step=" << format_fixed(steps > 0 ? 1e6 * seconds / steps : 0.0, 1)
      << " shrinkage=" << diag.resolvent_shrinkage << " underflow=" << diag.likelihood_underflow
      << " out=" << dir.string() << "\n";
  return records;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("bad value '" + item + "' in --values");
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("--values is empty");
  return values;
}

std::size_t order_for_size(double l_value, std::size_t dims) {
  const auto l = static_cast<std::size_t>(std::llround(l_value));
  const auto order = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(l), 1.0 / static_cast<double>(dims))));
  std::size_t check = 1;
  for (std::size_t i = 0; i < dims; ++i) check *= order;
  if (static_cast<double>(l) != l_value || check != l || order < 2) {
    throw ConfigError("L = " + std::to_string(l_value) + " is not order^" + std::to_string(dims) +
                      " for an integer order >= 2");
  }
  return order;
}

std::string value_label(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string error_kind(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError&) {
    return "config";
  } catch (const ValidationError&) {
    return "validation";
  } catch (const SolverError&) {
    return "solver";
  } catch (const NumericalError&) {
    return "numerical";
  } catch (const ParseError&) {
    return "parse";
  } catch (const fs::filesystem_error&) {
    return "io";
  } catch (...) {
    return "internal";
  }
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
    if (c == '"') c = '\'';
  }
  return text;
}

}  // namespace

int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Uncertainty-aware model-based successor-feature agent: training, transfer, ablations, sweeps"};
  app.name("mbsf");
  app.require_subcommand(1);

  RunOptions train_o;
  auto* train = app.add_subcommand("train", "train from scratch on one task");
  add_run_options(train, train_o);
  train->add_option("--policy", train_o.policy, "uncertainty_aware | epsilon_greedy | ua_td_sf");
  train->add_option("--bonus", train_o.bonus, "q_std | state_variance | trace");

  RunOptions transfer_o;
  TransferOptions transfer_t;
  auto* transfer = app.add_subcommand("transfer", "initialize from a source agent and train on the target task");
  add_run_options(transfer, transfer_o);
  add_transfer_options(transfer, transfer_t, true);
  transfer->add_option("--bonus", transfer_o.bonus, "q_std | state_variance | trace");

  RunOptions ablate_o;
  TransferOptions ablate_t;
  std::string variant;
  auto* ablate = app.add_subcommand("ablate", "run an ablation of the agent");
  ablate->add_option("--variant", variant, "mbsf-eps | uatd-sf")
      ->required()
      ->check(CLI::IsMember({"mbsf-eps", "uatd-sf"}));
  add_run_options(ablate, ablate_o);
  add_transfer_options(ablate, ablate_t, false);

  RunOptions sweep_o;
  std::string param, values_text;
  auto* sweep = app.add_subcommand("sweep", "grand mean episode length across one hyperparameter");
  sweep->add_option("--param", param, "L | pn")->required()->check(CLI::IsMember({"L", "pn"}));
  sweep->add_option("--values", values_text, "comma-separated values")->required();
  add_run_options(sweep, sweep_o);

  std::string task_name;
  auto* task_cmd = app.add_subcommand("task", "print a TaskSpec as JSON");
  task_cmd->add_option("name", task_name, "built-in task name or TaskSpec file")->required();

  std::uint64_t oracle_seed = 1;
  auto* oracle_cmd = app.add_subcommand("oracle", "run the brute-force oracle checks");
  oracle_cmd->add_option("--seed", oracle_seed, "seed for the random instances");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    err << "error kind=usage msg=\"" << one_line(e.what()) << "\"\n";
    return 2;
  }

  try {
    if (*train) {
      ExperimentConfig cfg = base_experiment(train_o);
      run_and_write(cfg, resolve_out(train_o.out), true, out);
    } else if (*transfer) {
      ExperimentConfig cfg = base_experiment(transfer_o);
      apply_transfer(cfg, transfer_t);
      run_and_write(cfg, resolve_out(transfer_o.out), true, out);
    } else if (*ablate) {
      ExperimentConfig cfg = base_experiment(ablate_o);
      cfg.policy = variant == "mbsf-eps" ? PolicyKind::epsilon_greedy : PolicyKind::ua_td_sf;
      apply_transfer(cfg, ablate_t);
      run_and_write(cfg, resolve_out(ablate_o.out), true, out);
    } else if (*sweep) {
      const fs::path dir = resolve_out(sweep_o.out);
      fs::create_directories(dir);
      std::string table = "param,value,grand_mean,grand_std,us_per_step\n";
      for (double v : parse_values(values_text)) {
        ExperimentConfig cfg = base_experiment(sweep_o);
        if (param == "L") {
          cfg.agent.order = order_for_size(v, cfg.task.features.input_dims.size());
        } else {
          cfg.agent.reward_noise_var = v;
        }
        const auto records = run_and_write(cfg, dir / (param + "_" + value_label(v)), false, out);
        const Summary s = aggregate(records);
        double steps = 0.0, seconds = 0.0;
        for (const auto& r : records) {
          steps += static_cast<double>(r.total_steps);
          seconds += r.wall_seconds;
        }
        table += param + "," + value_label(v) + "," + format_fixed(s.grand_mean) + "," +
                 format_fixed(s.grand_std) + "," + format_fixed(steps > 0 ? 1e6 * seconds / steps : 0.0, 3) +
                 "\n";
      }
      write_text(dir / "sweep.csv", table);
    } else if (*task_cmd) {
      out << dump_task_spec(resolve_task(task_name));
    } else if (*oracle_cmd) {
      bool all = true;
      for (const auto& r : oracle::run_oracle_suite(oracle_seed)) {
        out << "oracle " << r.name << " " << (r.passed ? "PASS" : "FAIL") << " metric=" << r.metric
            << " tol=" << r.tolerance << " " << r.detail << "\n";
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
  } catch (...) {
    const auto ep = std::current_exception();
    std::string msg;
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
      msg = "unknown failure";
    }
    err << "error kind=" << error_kind(ep) << " msg=\"" << one_line(msg) << "\"\n";
    return 1;
  }
  return 0;
}

}  // namespace mbsf
