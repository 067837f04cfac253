#include "wmutate/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <thread>
#include <unordered_set>

#include "wmutate/codec.hpp"
#include "wmutate/sha256.hpp"

namespace wmutate {

Distribution Distribution::of(std::vector<double> xs) {
  Distribution d;
  d.count = xs.size();
  if (xs.empty()) return d;
  std::sort(xs.begin(), xs.end());
  d.min = xs.front();
  d.max = xs.back();
  const std::size_t mid = xs.size() / 2;
  d.median = xs.size() % 2 ? xs[mid] : (xs[mid - 1] + xs[mid]) / 2;
  return d;
}

Population::Population(const Bytes& origin, bool keep_bytes)
    : started_at(Clock::now()), origin_(origin), origin_hash_(sha256_hex(origin)), keep_bytes_(keep_bytes) {}

bool Population::insert(const std::string& hash, const Bytes& bytes, Lineage lineage) {
  if (hash == origin_hash_ || index_.count(hash)) return false;
  index_.emplace(hash, records_.size());
  VariantRecord r;
  r.hash = hash;
  r.size = bytes.size();
  r.lineage = std::move(lineage);
  if (keep_bytes_) r.bytes = bytes;
  records_.push_back(std::move(r));
  return true;
}

bool Population::contains(const std::string& hash) const { return index_.count(hash) != 0; }

const VariantRecord* Population::find(const std::string& hash) const {
  auto it = index_.find(hash);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::size_t population_size(const Population& p) { return p.size(); }

PreservationResult preservation_ratio(const Population& p, const Canonicalizer& canon) {
  PreservationResult r;
  std::unordered_set<std::string> forms;
  for (const auto& v : p.records()) {
    if (v.bytes.empty()) continue;
    try {
      forms.insert(sha256_hex(canon.apply(v.bytes)));
      ++r.considered;
    } catch (const CanonicalizerFailure&) {
      r.failures.push_back(v.hash);
    }
  }
  r.distinct = forms.size();
  r.ratio = r.considered == 0 ? 1.0 : double(r.distinct) / double(r.considered);
  return r;
}

Journal::Journal(const std::string& path) {
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      entries_.push_back({j.at("hash"), j.at("parent"), j.at("meta_rule"), j.at("seed"), j.at("stack_depth")});
    }
  }
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open journal " + path);
}

void Journal::append(const JournalEntry& e) {
  nlohmann::json j{{"hash", e.hash},
                   {"parent", e.parent},
                   {"meta_rule", e.meta_rule},
                   {"seed", e.seed},
                   {"stack_depth", e.stack_depth}};
  std::lock_guard lock(mu_);
  out_ << j.dump() << '\n';
  out_.flush();
  entries_.push_back(e);
}

double relative_size(const Bytes& original, const Bytes& variant) {
  if (original.empty()) throw DivisionByZero("original binary is empty");
  return double(variant.size()) / double(original.size());
}

double relative_steps(const ExecutionState& original, const ExecutionState& variant) {
  if (original.steps == 0) throw DivisionByZero("original executed no steps");
  return double(variant.steps) / double(original.steps);
}

namespace {

nlohmann::json dist_json(const std::optional<Distribution>& d) {
  if (!d) return nullptr;
  return {{"min", d->min}, {"median", d->median}, {"max", d->max}, {"count", d->count}};
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool equivalent(const ExecutionState& a, const ExecutionState& b) { return same_outcome(a, b) && states_equal(a, b); }

ExecutionState run_original(const WasmModule& m, const HostEnv& env, const ExecOptions& exec) {
  ExecutionState s = execute(m, env, exec);
  if (!s.completed()) throw OriginalFails("original module does not run to completion");
  return s;
}

std::uint64_t worker_seed(std::uint64_t seed, unsigned worker) {
  Rng r(seed ^ (0xD1B54A32D192ED03ULL * (worker + 1)));
  return r.next();
}

}  // namespace

nlohmann::json CampaignReport::to_json() const {
  nlohmann::json j;
  j["origin_hash"] = origin_hash;
  j["population_size"] = population_size;
  j["canonicalizer"] = canonicalizer;
  if (preservation) {
    j["preservation_ratio"] = preservation->ratio;
    j["preservation_distinct"] = preservation->distinct;
    j["preservation_considered"] = preservation->considered;
    j["canonicalizer_failures"] = preservation->failures;
  } else {
    j["preservation_ratio"] = nullptr;
  }
  j["time_to_diff_instr_trace"] = opt_json(time_to_diff_instr_trace);
  j["time_to_diff_mem_trace"] = opt_json(time_to_diff_mem_trace);
  j["iterations_to_diff_instr_trace"] = opt_json(iterations_to_diff_instr_trace);
  j["iterations_to_diff_mem_trace"] = opt_json(iterations_to_diff_mem_trace);
  j["relative_sizes"] = dist_json(relative_sizes);
  j["relative_steps"] = dist_json(relative_steps);
  j["gates"] = {{"iterations", gates.iterations},
                {"exhausted", gates.exhausted},
                {"invalid", gates.invalid},
                {"duplicate", gates.duplicate},
                {"canonical_duplicate", gates.canonical_duplicate},
                {"canonical_failure", gates.canonical_failure},
                {"executed", gates.executed},
                {"state_mismatch", gates.state_mismatch},
                {"accepted", gates.accepted}};
  j["elapsed_seconds"] = elapsed_seconds;
  return j;
}

LoopResult diversify_loop(const WasmModule& original, const LoopConfig& cfg, const HostEnv& env,
                          Clock::duration deadline) {
  const auto start = Clock::now();
  NormalizingCanonicalizer fallback;
  const Canonicalizer& canon = cfg.canonicalizer ? *cfg.canonicalizer : fallback;
  const Bytes original_bytes = encode_module(original);
  const ExecutionState original_state = run_original(original, env, cfg.exec);

  CampaignReport report;
  report.origin_hash = sha256_hex(original_bytes);
  report.canonicalizer = canon.name();
  std::unordered_set<std::string> seen{report.origin_hash};
  std::unordered_set<std::string> seen_canonical;
  try {
    seen_canonical.insert(sha256_hex(canon.apply(original_bytes)));
  } catch (const CanonicalizerFailure&) {
  }

  Rng rng(cfg.mutation.seed);
  WasmModule current = original;
  std::uint32_t depth = 0;
  auto& g = report.gates;
  for (;;) {
    if (Clock::now() - start >= deadline) {
      report.elapsed_seconds = seconds_since(start);
      throw DeadlineExceeded(report);
    }
    ++g.iterations;
    MutationOutcome out;
    try {
      out = mutate(current, cfg.mutation, rng);
    } catch (const Exhausted&) {
      ++g.exhausted;
      continue;
    } catch (const InvalidVariant&) {
      ++g.invalid;
      continue;
    }
    Bytes bytes = encode_module(out.variant);
    const std::string hash = sha256_hex(bytes);
    if (!seen.insert(hash).second) {
      ++g.duplicate;
      continue;
    }
    try {
      if (!seen_canonical.insert(sha256_hex(canon.apply(bytes))).second) {
        ++g.canonical_duplicate;
        continue;
      }
    } catch (const CanonicalizerFailure&) {
      ++g.canonical_failure;
      continue;
    }
    ++g.executed;
    ExecutionState state = execute(out.variant, env, cfg.exec);
    if (!equivalent(original_state, state)) {
      ++g.state_mismatch;
      throw EquivalenceViolation(hash, "final state differs after " + std::string(to_string(out.applied)) + " at " +
                                           out.site);
    }
    ++depth;
    if (traces_differ(original_state.trace, state.trace, cfg.kind)) {
      ++g.accepted;
      report.population_size = 1;
      report.elapsed_seconds = seconds_since(start);
      if (cfg.kind == TraceKind::Instructions) {
        report.time_to_diff_instr_trace = report.elapsed_seconds;
        report.iterations_to_diff_instr_trace = g.iterations;
      } else {
        report.time_to_diff_mem_trace = report.elapsed_seconds;
        report.iterations_to_diff_mem_trace = g.iterations;
      }
      report.relative_sizes = Distribution::of({relative_size(original_bytes, bytes)});
      report.relative_steps = Distribution::of({relative_steps(original_state, state)});
      LoopResult r;
      r.variant = std::move(out.variant);
      r.bytes = std::move(bytes);
      r.state = std::move(state);
      r.stack_depth = depth;
      r.report = std::move(report);
      return r;
    }
    current = std::move(out.variant);
  }
}

CampaignReport run_campaign(const WasmModule& original, const CampaignConfig& cfg, const HostEnv& env,
                            Population* population_out) {
  const auto start = Clock::now();
  const Bytes original_bytes = encode_module(original);
  const ExecutionState original_state = run_original(original, env, cfg.exec);

  Population pop(original_bytes, cfg.keep_bytes);
  pop.started_at = start;
  pop.deadline = start + cfg.deadline;
  std::unique_ptr<Journal> journal;
  if (!cfg.journal_path.empty()) {
    journal = std::make_unique<Journal>(cfg.journal_path);
    for (const auto& e : journal->entries()) {
      pop.insert(e.hash, {}, Lineage{e.parent, e.meta_rule, e.seed, e.stack_depth});
    }
  }

  std::mutex mu;
  CampaignReport report;
  report.origin_hash = pop.origin_hash();
  std::vector<std::size_t> parents;  // population records whose bytes are stored
  Bytes latest;                      // last admitted child, when bytes are not kept
  std::uint32_t latest_depth = 0;
  std::vector<double> sizes;
  std::vector<double> steps;
  std::atomic<bool> stop{false};
  std::exception_ptr failure;

  auto done = [&]() {
    if (stop) return true;
    if (Clock::now() >= *pop.deadline) return true;
    if (cfg.max_iterations && report.gates.iterations >= cfg.max_iterations) return true;
    if (cfg.max_variants && pop.size() >= cfg.max_variants) return true;
    return false;
  };

  // One iteration of a worker context; false once the campaign is over.
  auto step = [&](Rng& rng) -> bool {
    {
        Bytes parent_bytes;
        std::string parent_hash;
        std::uint32_t parent_depth = 0;
        std::uint64_t mutation_seed = 0;
        {
          std::lock_guard lock(mu);
          if (done()) return false;
          ++report.gates.iterations;
          const std::size_t pool = 1 + (cfg.keep_bytes ? parents.size() : (latest.empty() ? 0 : 1));
          const std::size_t k = rng.below(pool);
          if (k == 0) {
            parent_bytes = original_bytes;
            parent_hash = pop.origin_hash();
          } else if (cfg.keep_bytes) {
            const auto& rec = pop.records()[parents[k - 1]];
            parent_bytes = rec.bytes;
            parent_hash = rec.hash;
            parent_depth = rec.lineage.stack_depth;
          } else {
            parent_bytes = latest;
            parent_hash = sha256_hex(latest);
            parent_depth = latest_depth;
          }
          mutation_seed = rng.next();
        }
        const WasmModule parent = parse_module(parent_bytes);
        MutationConfig mcfg = cfg.mutation;
        mcfg.seed = mutation_seed;
        MutationOutcome out;
        try {
          out = mutate(parent, mcfg);
        } catch (const Exhausted&) {
          std::lock_guard lock(mu);
          ++report.gates.exhausted;
          return true;
        } catch (const InvalidVariant&) {
          std::lock_guard lock(mu);
          ++report.gates.invalid;
          return true;
        }
        Bytes bytes = encode_module(out.variant);
        const std::string hash = sha256_hex(bytes);
        {
          std::lock_guard lock(mu);
          if (hash == pop.origin_hash() || pop.contains(hash)) {
            ++report.gates.duplicate;
            return true;
          }
          ++report.gates.executed;
        }
        const ExecutionState state = execute(out.variant, env, cfg.exec);
        if (!equivalent(original_state, state)) {
          std::lock_guard lock(mu);
          ++report.gates.state_mismatch;
          throw EquivalenceViolation(hash, "final state differs after " + std::string(to_string(out.applied)) +
                                               " at " + out.site);
        }
        const bool instr_diff = traces_differ(original_state.trace, state.trace, TraceKind::Instructions);
        const bool mem_diff = traces_differ(original_state.trace, state.trace, TraceKind::Memory);
        std::lock_guard lock(mu);
        Lineage lineage{parent_hash, std::string(to_string(out.applied)), mutation_seed, parent_depth + 1};
        if (!pop.insert(hash, bytes, lineage)) {
          ++report.gates.duplicate;
          return true;
        }
        ++report.gates.accepted;
        if (cfg.keep_bytes) {
          parents.push_back(pop.size() - 1);
        } else {
          latest = bytes;
          latest_depth = lineage.stack_depth;
        }
        if (journal) journal->append({hash, parent_hash, lineage.meta_rule, mutation_seed, lineage.stack_depth});
        const double t = seconds_since(start);
        if (instr_diff && !report.time_to_diff_instr_trace) {
          report.time_to_diff_instr_trace = t;
          report.iterations_to_diff_instr_trace = report.gates.iterations;
        }
        if (mem_diff && !report.time_to_diff_mem_trace) {
          report.time_to_diff_mem_trace = t;
          report.iterations_to_diff_mem_trace = report.gates.iterations;
        }
        sizes.push_back(relative_size(original_bytes, bytes));
        steps.push_back(relative_steps(original_state, state));
    }
    return true;
  };

  const unsigned contexts = std::max(1u, cfg.seeds);
  std::vector<Rng> rngs;
  for (unsigned w = 0; w < contexts; ++w) rngs.emplace_back(worker_seed(cfg.mutation.seed, w));
  const unsigned jobs = std::clamp(cfg.jobs, 1u, contexts);
  // Thread t serves contexts t, t + jobs, ... one iteration at a time.
  auto worker = [&](unsigned t) {
    try {
      for (unsigned c = t;; c = c + jobs < contexts ? c + jobs : t) {
        if (!step(rngs[c])) break;
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      stop = true;
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  report.population_size = population_size(pop);
  report.canonicalizer = cfg.canonicalizer;
  if (cfg.compute_preservation && cfg.keep_bytes) {
    report.preservation = preservation_ratio(pop, *make_canonicalizer(cfg.canonicalizer));
  }
  if (!sizes.empty()) {
    report.relative_sizes = Distribution::of(sizes);
    report.relative_steps = Distribution::of(steps);
  }
  report.elapsed_seconds = seconds_since(start);
  if (population_out) *population_out = std::move(pop);
  return report;
}

ImpactResult performance_impact(const WasmModule& original, const MutationConfig& base, const HostEnv& env,
                                std::size_t variants, int depth, unsigned jobs, const ExecOptions& exec) {
  const Bytes original_bytes = encode_module(original);
  const ExecutionState original_state = run_original(original, env, exec);
  ImpactResult result;
  result.samples.resize(variants);
  Rng seeds(base.seed);
  for (auto& s : result.samples) s.seed = seeds.next();

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&]() {
    try {
      for (std::size_t i; (i = next++) < variants;) {
        MutationConfig cfg = base;
        cfg.seed = result.samples[i].seed;
        const WasmModule v = stack(original, cfg, depth);
        const Bytes bytes = encode_module(v);
        const ExecutionState state = execute(v, env, exec);
        if (!equivalent(original_state, state)) {
          throw EquivalenceViolation(sha256_hex(bytes), "stack of " + std::to_string(depth) + " with seed " +
                                                            std::to_string(cfg.seed));
        }
        result.samples[i].relative_size = relative_size(original_bytes, bytes);
        result.samples[i].relative_steps = relative_steps(original_state, state);
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      next = variants;
    }
  };
  jobs = std::max(1u, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<double> sizes, steps;
  for (const auto& s : result.samples) {
    sizes.push_back(s.relative_size);
    steps.push_back(s.relative_steps);
  }
  result.sizes = Distribution::of(sizes);
  result.steps = Distribution::of(steps);
  return result;
}

}  // namespace wmutate
