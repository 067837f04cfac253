#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>

#include "CLI11.hpp"
#include "json.hpp"
#include "wmutate/campaign.hpp"
#include "wmutate/codec.hpp"
#include "wmutate/rules.hpp"
#include "wmutate/sha256.hpp"
#include "wmutate/validator.hpp"

using namespace wmutate;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInvalidInput = 2, kDeadline = 3, kViolation = 4 };

class InputError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

Clock::duration parse_duration(const std::string& s) {
  static const std::regex re(R"(^\s*(\d+(?:\.\d+)?)\s*([smh]?)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw UsageError("bad duration '" + s + "' (expected Ns, Nm or Nh)");
  double v = std::stod(m[1]);
  if (m[2] == "m") v *= 60;
  if (m[2] == "h") v *= 3600;
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(v));
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

/// Writes through a temporary sibling and renames, so failures leave no partial file.
void write_file(const std::string& path, const void* data, std::size_t n) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_file(const std::string& path, const Bytes& b) { write_file(path, b.data(), b.size()); }
void write_file(const std::string& path, const std::string& s) { write_file(path, s.data(), s.size()); }

WasmModule load_module(const std::string& path) {
  const Bytes bytes = read_file(path);
  WasmModule m;
  try {
    m = parse_module(bytes);
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
  const auto report = static_validate(m);
  if (!report.ok()) throw InputError(path + ": invalid module\n" + report.to_string());
  return m;
}

struct Common {
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> enable;
  int depth = std::stoi(env_or("WMUTATE_PEEPHOLE_DEPTH", "4"));
  int retries = std::stoi(env_or("WMUTATE_RETRIES", "100"));
  std::uint64_t fuel = std::stoull(env_or("WMUTATE_FUEL", "50000000"));
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t s = (std::uint64_t(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << "\n";
  return s;
}

MutationConfig mutation_config(const Common& c) {
  MutationConfig cfg;
  cfg.seed = resolve_seed(c);
  cfg.peephole_depth = c.depth;
  cfg.max_retries = c.retries;
  if (!c.enable.empty()) {
    cfg.enabled.clear();
    for (const auto& name : c.enable) {
      auto k = parse_meta_rule(name);
      if (!k) throw UsageError("unknown meta-rule '" + name + "'");
      cfg.enabled.push_back(*k);
    }
  }
  return cfg;
}

ExecOptions exec_options(const Common& c, TraceMode mode = TraceMode::Digest) {
  ExecOptions o;
  o.fuel = c.fuel;
  o.trace = mode;
  return o;
}

void add_input(CLI::App* sub, Common& c) {
  sub->add_option("-i,--input", c.input, "input .wasm")->required()->check(CLI::ExistingFile);
}

void add_mutation_flags(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "random seed (drawn and printed when omitted)");
  sub->add_option("--enable", c.enable, "meta-rules to enable (default: all)")->delimiter(',');
  sub->add_option("--depth", c.depth, "peephole traversal depth (env WMUTATE_PEEPHOLE_DEPTH)");
  sub->add_option("--retries", c.retries, "retry budget per transformation (env WMUTATE_RETRIES)");
}

std::string outcome_text(const ExecutionState& s) {
  if (s.trap) return "trap " + std::string(to_string(s.trap->kind)) + " at " + std::to_string(s.trap->func) + ":" +
                     std::to_string(s.trap->offset);
  if (s.fuel_exhausted) return "fuel exhausted";
  return "completed";
}

int run(int argc, char** argv) {
  CLI::App app{"Semantics-preserving WebAssembly diversification"};
  app.require_subcommand(1);
  Common c;

  auto* mutate_cmd = app.add_subcommand("mutate", "apply one transformation");
  add_input(mutate_cmd, c);
  mutate_cmd->add_option("-o,--output", c.output)->required();
  add_mutation_flags(mutate_cmd, c);

  int count = std::stoi(env_or("WMUTATE_STACK_COUNT", "1000"));
  auto* stack_cmd = app.add_subcommand("stack", "apply a sequence of transformations");
  add_input(stack_cmd, c);
  stack_cmd->add_option("-o,--output", c.output)->required();
  stack_cmd->add_option("--count", count, "number of stacked transformations (env WMUTATE_STACK_COUNT)");
  add_mutation_flags(stack_cmd, c);

  std::string deadline = env_or("WMUTATE_DEADLINE", "1h");
  std::string report_path;
  std::string canon = env_or("WMUTATE_CANONICALIZER", "normalize");
  std::string trace_kind = "instr";
  auto* loop_cmd = app.add_subcommand("loop", "mutate until the trace differs while the state matches");
  add_input(loop_cmd, c);
  loop_cmd->add_option("-o,--output", c.output)->required();
  loop_cmd->add_option("--trace", trace_kind, "trace to diverge")->check(CLI::IsMember({"instr", "mem"}));
  loop_cmd->add_option("--deadline", deadline, "Ns, Nm or Nh (env WMUTATE_DEADLINE)");
  loop_cmd->add_option("--report", report_path, "JSON report path");
  loop_cmd->add_option("--canonicalizer", canon, "identity, normalize or cmd:<template> (env WMUTATE_CANONICALIZER)");
  add_mutation_flags(loop_cmd, c);

  unsigned seeds = 1;
  unsigned jobs = static_cast<unsigned>(std::stoul(env_or("WMUTATE_JOBS", "1")));
  std::uint64_t iterations = 0;
  std::size_t max_variants = 0;
  std::string journal;
  std::string out_dir;
  bool no_bytes = false;
  std::size_t impact_variants = 0;
  int impact_depth = 1000;
  auto* campaign_cmd = app.add_subcommand("campaign", "grow a variant population and report metrics");
  add_input(campaign_cmd, c);
  campaign_cmd->add_option("--deadline", deadline, "Ns, Nm or Nh (env WMUTATE_DEADLINE)");
  campaign_cmd->add_option("--seeds", seeds, "worker contexts with distinct streams");
  campaign_cmd->add_option("--jobs", jobs, "threads (env WMUTATE_JOBS)");
  campaign_cmd->add_option("--iterations", iterations, "stop after this many iterations");
  campaign_cmd->add_option("--max-variants", max_variants, "stop at this population size");
  campaign_cmd->add_option("--report", report_path, "JSON report path (stdout when omitted)");
  campaign_cmd->add_option("--journal", journal, "JSON-lines journal; resumes when it exists");
  campaign_cmd->add_option("--out-dir", out_dir, "write every variant as <hash>.wasm");
  campaign_cmd->add_option("--canonicalizer", canon, "identity, normalize or cmd:<template> (env WMUTATE_CANONICALIZER)");
  campaign_cmd->add_flag("--no-bytes", no_bytes, "do not keep variant bytes (disables preservation ratio)");
  campaign_cmd->add_option("--impact-variants", impact_variants, "also measure this many stacked variants");
  campaign_cmd->add_option("--impact-depth", impact_depth, "stack depth for the impact measurement");
  add_mutation_flags(campaign_cmd, c);

  auto* validate_cmd = app.add_subcommand("validate", "decode and statically validate");
  add_input(validate_cmd, c);

  std::string instr_out, mem_out;
  auto* trace_cmd = app.add_subcommand("trace", "execute and dump traces");
  add_input(trace_cmd, c);
  trace_cmd->add_option("--instr-out", instr_out, "instruction trace file");
  trace_cmd->add_option("--mem-out", mem_out, "memory trace file");
  trace_cmd->add_option("--fuel", c.fuel, "step budget (env WMUTATE_FUEL)");

  auto* rules_cmd = app.add_subcommand("rules", "dump the rewrite rule catalog as JSON");
  rules_cmd->add_option("-o,--output", c.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const HostEnv env = HostEnv::standard();

  if (*validate_cmd) {
    const Bytes bytes = read_file(c.input);
    WasmModule m;
    try {
      m = parse_module(bytes);
    } catch (const Error& e) {
      std::cerr << c.input << ": " << e.what() << "\n";
      return kInvalidInput;
    }
    const auto report = static_validate(m);
    if (!report.ok()) {
      std::cerr << report.to_string();
      return kInvalidInput;
    }
    std::cout << "valid: " << m.num_funcs() << " functions, " << bytes.size() << " bytes, sha256 "
              << sha256_hex(bytes) << "\n";
    return kOk;
  }

  if (*rules_cmd) {
    const std::string json = rules_to_json(builtin_rules());
    if (c.output.empty()) {
      std::cout << json << "\n";
    } else {
      write_file(c.output, json + "\n");
    }
    return kOk;
  }

  const WasmModule m = load_module(c.input);

  if (*trace_cmd) {
    const ExecutionState s = execute(m, env, exec_options(c, TraceMode::Full));
    if (!instr_out.empty()) {
      std::ostringstream os;
      dump_instr_trace(s.trace, os);
      write_file(instr_out, os.str());
    }
    if (!mem_out.empty()) {
      std::ostringstream os;
      dump_mem_trace(s.trace, os);
      write_file(mem_out, os.str());
    }
    std::cout << s.output;
    std::cerr << outcome_text(s) << ", " << s.steps << " steps, " << s.trace.instr_count() << " instruction events, "
              << s.trace.mem_count() << " memory events\n";
    return s.completed() ? kOk : kInvalidInput;
  }

  if (*mutate_cmd) {
    const MutationConfig cfg = mutation_config(c);
    const MutationOutcome out = mutate(m, cfg);
    write_file(c.output, encode_module(out.variant));
    std::cerr << to_string(out.applied) << ": " << out.site << "\n";
    return kOk;
  }

  if (*stack_cmd) {
    if (count < 1) throw UsageError("--count must be at least 1");
    const MutationConfig cfg = mutation_config(c);
    write_file(c.output, encode_module(stack(m, cfg, count)));
    return kOk;
  }

  if (*loop_cmd) {
    LoopConfig cfg;
    cfg.mutation = mutation_config(c);
    cfg.kind = trace_kind == "mem" ? TraceKind::Memory : TraceKind::Instructions;
    const auto canonicalizer = make_canonicalizer(canon);
    cfg.canonicalizer = canonicalizer.get();
    cfg.exec = exec_options(c);
    try {
      const LoopResult r = diversify_loop(m, cfg, env, parse_duration(deadline));
      write_file(c.output, r.bytes);
      if (!report_path.empty()) write_file(report_path, r.report.to_json().dump(2) + "\n");
      std::cerr << "trace differs after " << r.report.gates.iterations << " iterations (stack depth "
                << r.stack_depth << ")\n";
      return kOk;
    } catch (const DeadlineExceeded& e) {
      if (!report_path.empty()) write_file(report_path, e.report().to_json().dump(2) + "\n");
      throw;
    }
  }

  if (*campaign_cmd) {
    CampaignConfig cfg;
    cfg.mutation = mutation_config(c);
    cfg.deadline = parse_duration(deadline);
    cfg.seeds = seeds;
    cfg.jobs = jobs;
    cfg.max_iterations = iterations;
    cfg.max_variants = max_variants;
    cfg.keep_bytes = !no_bytes || !out_dir.empty();
    cfg.compute_preservation = !no_bytes;
    cfg.canonicalizer = canon;
    make_canonicalizer(canon);
    cfg.journal_path = journal;
    cfg.exec = exec_options(c);
    Population pop(Bytes{});
    CampaignReport report = run_campaign(m, cfg, env, &pop);
    nlohmann::json j = report.to_json();
    if (impact_variants > 0) {
      const ImpactResult impact = performance_impact(m, cfg.mutation, env, impact_variants, impact_depth, jobs, cfg.exec);
      j["relative_sizes"] = {{"min", impact.sizes.min}, {"median", impact.sizes.median}, {"max", impact.sizes.max},
                             {"count", impact.sizes.count}};
      j["relative_steps"] = {{"min", impact.steps.min}, {"median", impact.steps.median}, {"max", impact.steps.max},
                             {"count", impact.steps.count}};
      j["impact_depth"] = impact_depth;
    }
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      for (const auto& r : pop.records()) {
        if (!r.bytes.empty()) write_file((fs::path(out_dir) / (r.hash + ".wasm")).string(), r.bytes);
      }
    }
    const std::string text = j.dump(2) + "\n";
    if (report_path.empty()) {
      std::cout << text;
    } else {
      write_file(report_path, text);
    }
    return kOk;
  }
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const OriginalFails& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const NoEntryPoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const LinkError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const DeadlineExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDeadline;
  } catch (const Exhausted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDeadline;
  } catch (const EquivalenceViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  } catch (const InvalidVariant& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
