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

#include "mtesim/simulator.h"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mtesim {
namespace {

AllocatorConfig effective_allocator_config(const SimConfig& config) {
  AllocatorConfig out = config.allocator;
  out.tripwires_enabled = config.tripwires_active();
  return out;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Off: return "off";
    case Mode::Async: return "async";
    case Mode::Sync: return "sync";
  }
  return "?";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "off") return Mode::Off;
  if (text == "async") return Mode::Async;
  if (text == "sync") return Mode::Sync;
  return std::nullopt;
}

Simulator::Simulator(Program program, const SimConfig& config)
    : config_(config),
      allocator_(memory_, effective_allocator_config(config), config.sampler, Rng(config.seed)),
      detector_(config.detector),
      machine_(std::move(program), config.mode) {}

RunCounters Simulator::counters() const {
  RunCounters c = counters_;
  c.allocations = allocator_.stats().allocations;
  c.frees = allocator_.stats().frees;
  c.tripwires_armed = allocator_.stats().tripwires_armed;
  c.tripwires_removed_by_threshold = detector_.stats().removed_by_threshold;
  c.tripwires_removed_by_ret_edge = detector_.stats().removed_by_ret_edge;
  return c;
}

StepOutcome Simulator::report(BugReport bug) {
  bug_ = std::move(bug);
  halted_ = true;
  return StepOutcome::BugReported;
}

void Simulator::perform_access(const Instruction& instr, const AccessDescriptor& desc) {
  RegisterFile& regs = machine_.regs();
  const unsigned scalar = std::min<unsigned>(instr.width, 8);
  for (unsigned i = 0; i < instr.pair; ++i) {
    const uint64_t addr = desc.start + static_cast<uint64_t>(i) * instr.width;
    const unsigned reg = instr.rt + i;
    if (desc.is_store) {
      memory_.write_le(addr, regs[reg], scalar);
      if (instr.width == 16) memory_.write_le(addr + 8, 0, 8);
    } else {
      regs[reg] = memory_.read_le(addr, scalar);
    }
  }
}

StepOutcome Simulator::execute_memory(const Instruction& instr) {
  const size_t pc = machine_.pc();
  const AccessDescriptor desc = decode(instr, machine_.regs(), pc);

  switch (config_.mode) {
    case Mode::Off:
      break;
    case Mode::Async:
      if (auto fault = tag_check(desc, memory_, machine_.regs())) {
        ++counters_.faults_delivered;
        machine_.pending_async_faults().push_back(*fault);
      }
      break;
    case Mode::Sync: {
      // Each resume re-executes the instruction; every delegation or removal
      // clears one mismatching granule, so this settles quickly.
      const uint64_t max_rounds = desc.size / kGranuleSize + 3;
      for (uint64_t round = 0;; ++round) {
        auto fault = tag_check(desc, memory_, machine_.regs());
        if (!fault) break;
        if (round == max_rounds) {
          throw std::logic_error("handler resumed at pc " + std::to_string(pc) +
                                 " without resolving the fault");
        }
        ++counters_.faults_delivered;
        if (observer_) observer_(*fault, memory_);
        HandlerAction action =
            detector_.handle_tag_mismatch(*fault, instr, memory_, allocator_, machine_);
        if (action.kind == HandlerAction::Kind::Report) return report(std::move(*action.report));
        if (action.kind == HandlerAction::Kind::SkipAccess) return StepOutcome::Continue;
      }
      break;
    }
  }
  perform_access(instr, desc);
  return StepOutcome::Continue;
}

StepOutcome Simulator::drain_async(size_t pc) {
  auto& pending = machine_.pending_async_faults();
  if (pending.empty()) return StepOutcome::Continue;
  Fault fault = pending.front();
  pending.clear();
  fault.pc = pc;
  const BugKind kind = classify(fault.access.addrtag, fault.memtag, fault.metadata,
                                fault.fault_address, allocator_);
  return report(make_bug_report(fault, kind));
}

StepOutcome Simulator::step() {
  if (halted_) return bug_ ? StepOutcome::BugReported : StepOutcome::Halted;

  const size_t pc = machine_.pc();
  const Program& program = machine_.program();
  if (pc >= program.size()) {
    throw std::out_of_range("pc " + std::to_string(pc) + " ran past the end of the program");
  }
  if (machine_.has_trap(pc)) {
    ++counters_.traps_delivered;
    detector_.handle_trap(pc, memory_, allocator_, machine_);
  }

  const Instruction& instr = program[pc];
  RegisterFile& regs = machine_.regs();
  ++counters_.instructions_executed;

  switch (instr.op) {
    case Opcode::Load:
    case Opcode::Store:
      if (execute_memory(instr) == StepOutcome::BugReported) return StepOutcome::BugReported;
      break;
    case Opcode::Mov:
      regs[instr.rt] = static_cast<uint64_t>(instr.imm);
      break;
    case Opcode::Add:
      regs[instr.rt] = regs[instr.ra] + static_cast<uint64_t>(instr.imm);
      break;
    case Opcode::AllocCall:
      regs[instr.rt] = allocator_.allocate(static_cast<uint64_t>(instr.imm)).raw;
      break;
    case Opcode::FreeCall: {
      const FreeVerdict verdict = allocator_.free(TaggedPointer{regs[instr.rt]});
      if (!verdict.ok()) {
        BugReport bug;
        bug.pc = pc;
        bug.fault_address = verdict.address;
        bug.regs = regs;
        bug.addrtag = verdict.addrtag;
        bug.memtag = verdict.memtag;
        bug.kind = BugKind::UseAfterFreeOrWild;
        return report(std::move(bug));
      }
      break;
    }
    case Opcode::Syscall:
      if (drain_async(pc) == StepOutcome::BugReported) return StepOutcome::BugReported;
      break;
    case Opcode::Ret:
      break;
    case Opcode::Halt:
      if (drain_async(pc) == StepOutcome::BugReported) return StepOutcome::BugReported;
      halted_ = true;
      return StepOutcome::Halted;
  }
  machine_.set_pc(pc + 1);
  return StepOutcome::Continue;
}

RunReport Simulator::run() {
  StepOutcome outcome = StepOutcome::Continue;
  while (outcome == StepOutcome::Continue) outcome = step();

  RunReport out;
  out.outcome = outcome == StepOutcome::BugReported ? RunReport::Outcome::BugReported
                                                    : RunReport::Outcome::CleanHalt;
  out.bug = bug_;
  out.counters = counters();
  out.config = config_;
  return out;
}

RunReport run_program(const Program& program, const SimConfig& config) {
  Simulator sim(program, config);
  return sim.run();
}

}  // namespace mtesim
