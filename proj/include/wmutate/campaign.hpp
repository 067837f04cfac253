#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "wmutate/canonicalizer.hpp"
#include "wmutate/interpreter.hpp"
#include "wmutate/mutator.hpp"

namespace wmutate {

using Clock = std::chrono::steady_clock;

struct Distribution {
  double min = 0;
  double median = 0;
  double max = 0;
  std::size_t count = 0;

  /// Median of an even-sized sample is the mean of the two middle values.
  static Distribution of(std::vector<double> xs);
};

struct Lineage {
  std::string parent;  // hash of the module this variant was mutated from
  std::string meta_rule;
  std::uint64_t seed = 0;
  std::uint32_t stack_depth = 0;  // distance from the origin
};

struct VariantRecord {
  std::string hash;
  std::size_t size = 0;
  Lineage lineage;
  Bytes bytes;  // empty when the population does not keep bytes
};

class Population {
 public:
  explicit Population(const Bytes& origin, bool keep_bytes = true);

  const std::string& origin_hash() const { return origin_hash_; }
  const Bytes& origin_bytes() const { return origin_; }
  bool keeps_bytes() const { return keep_bytes_; }

  /// False when `hash` is the origin or already present.
  bool insert(const std::string& hash, const Bytes& bytes, Lineage lineage);
  bool contains(const std::string& hash) const;
  std::size_t size() const { return records_.size(); }
  const std::vector<VariantRecord>& records() const { return records_; }
  const VariantRecord* find(const std::string& hash) const;

  Clock::time_point started_at;
  std::optional<Clock::time_point> deadline;

 private:
  Bytes origin_;
  std::string origin_hash_;
  bool keep_bytes_;
  std::vector<VariantRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// |set(sha256(v_i))|.
std::size_t population_size(const Population& p);

struct PreservationResult {
  double ratio = 1.0;
  std::size_t distinct = 0;
  std::size_t considered = 0;
  std::vector<std::string> failures;  // variants the canonicalizer rejected
};

/// Distinct canonical forms over population size. Requires stored bytes.
PreservationResult preservation_ratio(const Population& p, const Canonicalizer& canon);

struct JournalEntry {
  std::string hash;
  std::string parent;
  std::string meta_rule;
  std::uint64_t seed = 0;
  std::uint32_t stack_depth = 0;
};

/// Append-only JSON-lines record of accepted variants. Opening an existing
/// file loads its entries so a campaign can resume.
class Journal {
 public:
  explicit Journal(const std::string& path);
  void append(const JournalEntry& e);
  const std::vector<JournalEntry>& entries() const { return entries_; }

 private:
  std::mutex mu_;
  std::ofstream out_;
  std::vector<JournalEntry> entries_;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

/// A variant passed every gate but its final state differs from the
/// original; this is an engine bug.
class EquivalenceViolation : public Error {
 public:
  EquivalenceViolation(std::string hash, const std::string& what)
      : Error("equivalence violation in variant " + hash + ": " + what), hash_(std::move(hash)) {}
  const std::string& hash() const { return hash_; }

 private:
  std::string hash_;
};

/// The original module does not run to completion.
class OriginalFails : public Error {
 public:
  using Error::Error;
};

double relative_size(const Bytes& original, const Bytes& variant);
double relative_steps(const ExecutionState& original, const ExecutionState& variant);

struct GateCounts {
  std::uint64_t iterations = 0;
  std::uint64_t exhausted = 0;
  std::uint64_t invalid = 0;
  std::uint64_t duplicate = 0;
  std::uint64_t canonical_duplicate = 0;
  std::uint64_t canonical_failure = 0;
  std::uint64_t executed = 0;
  std::uint64_t state_mismatch = 0;
  std::uint64_t accepted = 0;
};

struct CampaignReport {
  std::string origin_hash;
  std::size_t population_size = 0;
  std::optional<PreservationResult> preservation;
  std::string canonicalizer;
  std::optional<double> time_to_diff_instr_trace;  // seconds
  std::optional<double> time_to_diff_mem_trace;
  std::optional<std::uint64_t> iterations_to_diff_instr_trace;
  std::optional<std::uint64_t> iterations_to_diff_mem_trace;
  std::optional<Distribution> relative_sizes;
  std::optional<Distribution> relative_steps;
  GateCounts gates;
  double elapsed_seconds = 0;

  nlohmann::json to_json() const;
};

class DeadlineExceeded : public Error {
 public:
  explicit DeadlineExceeded(CampaignReport report)
      : Error("deadline exceeded after " + std::to_string(report.gates.iterations) + " iterations"),
        report_(std::move(report)) {}
  const CampaignReport& report() const { return report_; }

 private:
  CampaignReport report_;
};

struct LoopConfig {
  MutationConfig mutation;
  TraceKind kind = TraceKind::Instructions;
  const Canonicalizer* canonicalizer = nullptr;  // normalize when null
  ExecOptions exec;
};

struct LoopResult {
  WasmModule variant;
  Bytes bytes;
  ExecutionState state;
  std::uint32_t stack_depth = 0;
  CampaignReport report;
};

/// Mutate, validate, check uniqueness of the binary and of its canonical
/// form, execute, require an equal final state, and return as soon as the
/// selected trace differs from the original's; otherwise continue from the
/// variant.
LoopResult diversify_loop(const WasmModule& original, const LoopConfig& cfg, const HostEnv& env,
                          Clock::duration deadline);

struct CampaignConfig {
  MutationConfig mutation;  // mutation.seed seeds the workers
  Clock::duration deadline = std::chrono::seconds(60);
  std::uint64_t max_iterations = 0;  // 0: until the deadline
  std::size_t max_variants = 0;      // 0: until the deadline
  unsigned seeds = 1;  // worker contexts, each with its own stream
  unsigned jobs = 1;   // threads serving the contexts
  bool keep_bytes = true;
  std::string canonicalizer = "normalize";
  bool compute_preservation = true;
  std::string journal_path;  // empty: no journal
  ExecOptions exec;
};

/// Grows a population from the original: a parent is drawn uniformly from
/// the population (original included), mutated, and the child is admitted
/// when it validates, is new, runs, and ends in the original's state.
CampaignReport run_campaign(const WasmModule& original, const CampaignConfig& cfg, const HostEnv& env,
                            Population* population_out = nullptr);

struct ImpactSample {
  std::uint64_t seed = 0;
  double relative_size = 0;
  double relative_steps = 0;
};

struct ImpactResult {
  std::vector<ImpactSample> samples;
  Distribution sizes;
  Distribution steps;
};

/// `variants` independent stacks of `depth` mutations each, measured
/// against the original by encoded size and interpreter steps.
ImpactResult performance_impact(const WasmModule& original, const MutationConfig& base, const HostEnv& env,
                                std::size_t variants, int depth, unsigned jobs = 1, const ExecOptions& exec = {});

}  // namespace wmutate
