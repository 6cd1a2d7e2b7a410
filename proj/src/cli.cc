// Copyright 2026 The mtesim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mtesim/cli.h"

#include <charconv>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "mtesim/experiments.h"
#include "mtesim/report_json.h"
#include "mtesim/simulator.h"
#include "mtesim/trace_io.h"

namespace mtesim {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint64_t parse_u64(const std::string& text, const char* what) {
  uint64_t value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size()) {
    throw UsageError(std::string("invalid ") + what + " '" + text + "'");
  }
  return value;
}

// Options shared by `run` and the simulation-backed experiments.
struct SimFlags {
  std::string mode = "sync";
  uint64_t sampling_rate = 1000;
  std::string alloc_threshold = "1000";
  uint32_t access_threshold = 64;
  uint64_t seed = 0;
  bool no_tripwires = false;
  bool overread_skip = false;
  bool no_odd_even = false;
  bool allow_zero_tag = false;

  void add_to(CLI::App& app) {
    app.add_option("--mode", mode, "Tag-check mode: off, async or sync")
        ->check(CLI::IsMember({"off", "async", "sync"}));
    app.add_option("--sampling-rate", sampling_rate, "Mean tripwire gap after slow start")
        ->check(CLI::PositiveNumber);
    app.add_option("--alloc-threshold", alloc_threshold,
                   "Short-granule allocations armed during slow start ('inf' arms all)");
    app.add_option("--access-threshold", access_threshold, "Benign hits before a tripwire is removed")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Root seed (falls back to $MTESIM_SEED)")->envname("MTESIM_SEED");
    app.add_flag("--no-tripwires", no_tripwires, "Disable tripwires (plain tag checks)");
    app.add_flag("--overread-skip", overread_skip, "Forgive overread_ok loads without the bounds check");
    app.add_flag("--no-odd-even", no_odd_even, "Disable odd-even neighbor tagging");
    app.add_flag("--allow-zero-tag", allow_zero_tag, "Let the allocator hand out tag 0");
  }

  SimConfig config() const {
    SimConfig c;
    c.mode = *parse_mode(mode);
    c.seed = seed;
    c.sampler.sampling_rate = sampling_rate;
    c.sampler.alloc_threshold = alloc_threshold == "inf"
                                    ? SamplerConfig::kAlwaysArm
                                    : parse_u64(alloc_threshold, "--alloc-threshold");
    c.detector.access_threshold = access_threshold;
    c.detector.tripwires_enabled = !no_tripwires;
    c.detector.overread_skip = overread_skip;
    c.allocator.odd_even = !no_odd_even;
    c.allocator.allow_zero_tag = allow_zero_tag;
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) throw std::runtime_error("cannot write " + path);
}

int cmd_run(const std::string& trace, const SimFlags& flags, const std::string& report_path,
            std::ostream& out) {
  const Program program = read_program_file(trace);
  const RunReport report = run_program(program, flags.config());
  const std::string json = to_json(report).dump(2) + "\n";
  if (report_path.empty()) {
    out << json;
  } else {
    write_text(report_path, json);
  }
  return report.outcome == RunReport::Outcome::BugReported ? kExitBug : kExitClean;
}

struct GenFlags {
  std::string kind;
  uint64_t count = 1;
  uint64_t seed = 0;
  std::string sizes;
  std::string out_dir = "corpus";
  unsigned preamble = 4;
  unsigned reuse_cycles = 0;
  std::string placement = "adjacent";

  void add_workload_options(CLI::App& app) {
    app.add_option("--sizes", sizes, "Size distribution, e.g. 24:1,40:2");
    app.add_option("--preamble", preamble, "Unrelated allocations before the target");
    app.add_option("--reuse-cycles", reuse_cycles, "Reuse cycles between free and dangling access");
    app.add_option("--placement", placement, "Cross-granule overflow placement")
        ->check(CLI::IsMember({"adjacent", "distant"}));
  }

  WorkloadSpec spec() const {
    WorkloadSpec s;
    const auto k = parse_workload_kind(kind);
    if (!k) throw UsageError("unknown workload kind '" + kind + "'");
    s.kind = *k;
    s.count = count;
    s.seed = seed;
    if (!sizes.empty()) s.sizes = parse_size_distribution(sizes);
    s.preamble_allocs = preamble;
    s.reuse_cycles = reuse_cycles;
    s.placement = placement == "distant" ? CrossPlacement::Distant : CrossPlacement::Adjacent;
    return s;
  }
};

int cmd_gen(const GenFlags& flags, std::ostream& out) {
  const WorkloadSpec spec = flags.spec();
  validate(spec);
  const auto programs = generate_workload(spec);
  write_corpus(flags.out_dir, spec, programs);
  out << "wrote " << programs.size() << " programs to " << flags.out_dir << "\n";
  return kExitClean;
}

std::vector<Program> load_corpus(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("no such directory: " + dir);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mtr") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Program> programs;
  for (const auto& f : files) {
    try {
      programs.push_back(read_program_file(f));
    } catch (const TraceError& e) {
      throw TraceError(e.line(), f.string() + ": " + e.what());
    }
  }
  return programs;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mtesim: tagged-memory simulator with byte-granular overflow detection", "mtesim"};
  app.require_subcommand(1);

  SimFlags run_flags;
  std::string trace;
  std::string report_path;
  CLI::App* run = app.add_subcommand("run", "Run one .mtr trace and print its RunReport");
  run->add_option("trace", trace, "Trace file")->required();
  run_flags.add_to(*run);
  run->add_option("--report", report_path, "Write the RunReport JSON here instead of stdout");

  GenFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "Generate a workload corpus");
  gen->add_option("--kind", gen_flags.kind, "intra, cross, uaf, double-free or benign")->required();
  gen->add_option("--count", gen_flags.count, "Number of programs")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_flags.seed, "Generator seed (falls back to $MTESIM_SEED)")
      ->envname("MTESIM_SEED");
  gen->add_option("--out", gen_flags.out_dir, "Corpus directory");
  gen_flags.add_workload_options(*gen);

  CLI::App* exp = app.add_subcommand("exp", "Run a statistical experiment and print JSON");
  exp->require_subcommand(1);

  SimFlags det_flags;
  GenFlags det_workload;
  uint64_t det_trials = 1000;
  CLI::App* det = exp->add_subcommand("detection", "Detection rate over generated bug programs");
  det->add_option("--kind", det_workload.kind, "Bug kind")->required();
  det->add_option("--trials", det_trials, "Programs to generate and run");
  det_flags.add_to(*det);
  det_workload.add_workload_options(*det);

  uint64_t vf_n = 100000;
  uint64_t vf_seed = 0;
  std::string vf_sizes = "1-256";
  CLI::App* vf = exp->add_subcommand("vulnerable-fraction", "Fraction of sizes leaving a short granule");
  vf->add_option("--n", vf_n, "Sizes to draw")->check(CLI::PositiveNumber);
  vf->add_option("--seed", vf_seed, "Seed")->envname("MTESIM_SEED");
  vf->add_option("--sizes", vf_sizes, "Distribution 'lo-hi' (uniform) or size:weight list");

  uint64_t col_trials = 100000;
  uint64_t col_seed = 0;
  bool col_zero = false;
  CLI::App* col = exp->add_subcommand("collision", "Tag collision frequency of two fresh draws");
  col->add_option("--trials", col_trials, "Pairs to draw");
  col->add_option("--seed", col_seed, "Seed")->envname("MTESIM_SEED");
  col->add_flag("--allow-zero-tag", col_zero, "Draw from all 16 tags");

  uint64_t smp_rate = 1000;
  uint64_t smp_calls = 100000;
  uint64_t smp_seed = 0;
  CLI::App* smp = exp->add_subcommand("sampling", "Post-slow-start tripwire arm frequency");
  smp->add_option("--sampling-rate", smp_rate, "Sampling rate R")->check(CLI::PositiveNumber);
  smp->add_option("--calls", smp_calls, "Short-granule allocations to sample");
  smp->add_option("--seed", smp_seed, "Seed")->envname("MTESIM_SEED");

  SimFlags tr_flags;
  std::string tr_corpus;
  CLI::App* tr = exp->add_subcommand("transparency", "Compare mode off against forced-tripwire sync");
  tr->add_option("corpus", tr_corpus, "Directory of benign .mtr programs")->required();
  tr_flags.add_to(*tr);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitClean : kExitUsage;
  }

  try {
    if (*run) return cmd_run(trace, run_flags, report_path, out);
    if (*gen) return cmd_gen(gen_flags, out);
    if (*det) {
      det_workload.seed = det_flags.seed;
      OrderedJson j = to_json(
          exp_detection_rate(det_workload.spec(), det_flags.config(), det_trials, det_flags.seed));
      out << j.dump(2) << "\n";
      return kExitClean;
    }
    if (*vf) {
      std::vector<SizeWeight> sizes;
      const size_t dash = vf_sizes.find('-');
      if (dash != std::string::npos && vf_sizes.find(':') == std::string::npos) {
        sizes = uniform_sizes(parse_u64(vf_sizes.substr(0, dash), "size range"),
                              parse_u64(vf_sizes.substr(dash + 1), "size range"));
      } else {
        sizes = parse_size_distribution(vf_sizes);
      }
      out << to_json(exp_vulnerable_fraction(sizes, vf_n, vf_seed)).dump(2) << "\n";
      return kExitClean;
    }
    if (*col) {
      out << to_json(exp_collision_rate(col_trials, col_seed, col_zero)).dump(2) << "\n";
      return kExitClean;
    }
    if (*smp) {
      const SamplingResult r = exp_sampling_rate(smp_rate, smp_calls, smp_seed);
      OrderedJson j;
      j["name"] = "sampling_rate";
      j["sampling_rate"] = r.sampling_rate;
      j["calls"] = r.calls;
      j["arms"] = r.arms;
      j["expected_arms"] = r.expected_arms;
      j["sigma"] = r.sigma;
      j["within_3_sigma"] = r.within(3.0);
      j["seed"] = smp_seed;
      out << j.dump(2) << "\n";
      return kExitClean;
    }
    if (*tr) {
      const TransparencyResult r = exp_recovery_transparency(load_corpus(tr_corpus), tr_flags.config());
      if (!r.warning.empty()) err << "warning: " << r.warning << "\n";
      OrderedJson j;
      j["name"] = "recovery_transparency";
      j["pass"] = r.pass;
      j["programs"] = r.programs;
      j["failures"] = r.failures;
      j["first_diff"] = r.first_diff;
      out << j.dump(2) << "\n";
      return r.pass ? kExitClean : kExitBug;
    }
  } catch (const TraceError& e) {
    err << "mtesim: parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "mtesim: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace mtesim
