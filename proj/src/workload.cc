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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "mtesim/allocator.h"
#include "mtesim/rng.h"
#include "mtesim/trace_io.h"
#include "json.hpp"

namespace mtesim {
namespace {

constexpr uint8_t kTarget = 0;
constexpr uint8_t kSecond = 1;
constexpr uint8_t kThird = 2;
constexpr uint8_t kFirstData = 4;    // r4..r11 carry data
constexpr uint8_t kOffsetReg = 12;   // r12 holds register offsets
constexpr uint8_t kDerivedPtr = 13;  // r13 holds derived pointers
constexpr uint8_t kFirstPreamble = 20;

class Builder {
 public:
  size_t pc() const { return program_.code.size(); }

  size_t emit(Instruction in) {
    program_.code.push_back(in);
    return pc() - 1;
  }
  size_t alloc(uint8_t rd, uint64_t size) {
    Instruction in;
    in.op = Opcode::AllocCall;
    in.rt = rd;
    in.imm = static_cast<int64_t>(size);
    return emit(in);
  }
  size_t free(uint8_t rs) {
    Instruction in;
    in.op = Opcode::FreeCall;
    in.rt = rs;
    return emit(in);
  }
  size_t mov(uint8_t rd, uint64_t value) {
    Instruction in;
    in.op = Opcode::Mov;
    in.rt = rd;
    in.imm = static_cast<int64_t>(value);
    return emit(in);
  }
  size_t add(uint8_t rd, uint8_t ra, int64_t imm) {
    Instruction in;
    in.op = Opcode::Add;
    in.rt = rd;
    in.ra = ra;
    in.imm = imm;
    return emit(in);
  }
  size_t access(Opcode op, uint8_t rt, uint8_t base, int64_t offset, uint8_t width,
                uint8_t pair = 1) {
    Instruction in;
    in.op = op;
    in.rt = rt;
    in.base = base;
    in.imm = offset;
    in.width = width;
    in.pair = pair;
    return emit(in);
  }
  size_t access_reg(Opcode op, uint8_t rt, uint8_t base, uint8_t offset_reg, uint8_t width,
                    uint8_t pair = 1) {
    Instruction in;
    in.op = op;
    in.rt = rt;
    in.base = base;
    in.offset_kind = OffsetKind::Reg;
    in.offset_reg = offset_reg;
    in.width = width;
    in.pair = pair;
    return emit(in);
  }
  size_t simple(Opcode op) {
    Instruction in;
    in.op = op;
    return emit(in);
  }

  Program finish() {
    simple(Opcode::Halt);
    return std::move(program_);
  }

 private:
  Program program_;
};

uint64_t draw_size(const std::vector<SizeWeight>& sizes, Rng& rng) {
  double total = 0;
  for (const auto& s : sizes) total += s.weight;
  double x = rng.uniform_real() * total;
  for (const auto& s : sizes) {
    if (x < s.weight) return s.size;
    x -= s.weight;
  }
  return sizes.back().size;
}

// Any access shape whose total size fits in `limit` bytes.
struct Shape {
  uint8_t width;
  uint8_t pair;
  uint32_t size() const { return static_cast<uint32_t>(width) * pair; }
};

Shape draw_shape(uint64_t limit, Rng& rng) {
  static constexpr Shape kShapes[] = {{1, 1}, {2, 1}, {4, 1}, {8, 1},  {16, 1},
                                      {1, 2}, {2, 2}, {4, 2}, {8, 2}, {16, 2}};
  std::vector<Shape> fits;
  for (Shape s : kShapes) {
    if (s.size() <= limit) fits.push_back(s);
  }
  return fits[rng.uniform(0, fits.size() - 1)];
}

uint8_t largest_width(uint64_t limit) {
  for (uint8_t w : {8, 4, 2, 1}) {
    if (w <= limit) return w;
  }
  return 1;
}

// One in-bounds access to an allocation of `size` bytes held in `ptr`. Half of
// them end inside the final granule, which is where a tripwire sits.
void benign_access(Builder& b, uint8_t ptr, uint64_t size, Rng& rng) {
  const Shape shape = draw_shape(size, rng);
  const uint64_t span = size - shape.size();
  uint64_t offset;
  if (rng.uniform(0, 1) == 0) {
    offset = span - rng.uniform(0, std::min<uint64_t>(span, 3));
  } else {
    offset = rng.uniform(0, span);
  }
  const Opcode op = rng.uniform(0, 1) ? Opcode::Store : Opcode::Load;
  const uint8_t data = static_cast<uint8_t>(kFirstData + 2 * rng.uniform(0, 3));
  if (op == Opcode::Store) {
    b.mov(data, rng.uniform(0, ~0ULL));
    if (shape.pair == 2) b.mov(data + 1, rng.uniform(0, ~0ULL));
  }
  switch (rng.uniform(0, 3)) {
    case 0:
      b.mov(kOffsetReg, offset);
      b.access_reg(op, data, ptr, kOffsetReg, shape.width, shape.pair);
      break;
    case 1:
      b.add(kDerivedPtr, ptr, static_cast<int64_t>(offset));
      b.access(op, data, kDerivedPtr, 0, shape.width, shape.pair);
      break;
    default:
      b.access(op, data, ptr, static_cast<int64_t>(offset), shape.width, shape.pair);
      break;
  }
}

std::vector<uint64_t> emit_preamble(Builder& b, const WorkloadSpec& spec, Rng& rng) {
  std::vector<uint64_t> sizes;
  for (unsigned i = 0; i < spec.preamble_allocs; ++i) {
    const uint8_t reg = static_cast<uint8_t>(kFirstPreamble + i);
    const uint64_t size = draw_size(spec.sizes, rng);
    b.alloc(reg, size);
    b.access(Opcode::Store, kFirstData, reg, 0, 1);
    sizes.push_back(size);
  }
  return sizes;
}

GeneratedProgram generate_one(const WorkloadSpec& spec, Rng rng) {
  GeneratedProgram out;
  out.kind = spec.kind;
  Builder b;
  const std::vector<uint64_t> preamble = emit_preamble(b, spec, rng);

  std::vector<SizeWeight> short_sizes;
  for (const auto& s : spec.sizes) {
    if (s.size % kGranuleSize != 0) short_sizes.push_back(s);
  }
  const uint64_t size = draw_size(
      spec.kind == WorkloadKind::IntraGranuleOverflow ? short_sizes : spec.sizes, rng);
  out.target_size = size;
  b.alloc(kTarget, size);

  switch (spec.kind) {
    case WorkloadKind::IntraGranuleOverflow: {
      for (unsigned i = rng.uniform(0, 2); i > 0; --i) benign_access(b, kTarget, size, rng);
      // Overrun the requested size while staying inside the final granule.
      const uint64_t padding = size_class(size) - size;
      uint8_t width = 8;
      uint64_t over = std::min<uint64_t>(4, padding);
      if (size + over < width) {
        width = 1;
        over = 1;
      }
      const Opcode op = rng.uniform(0, 1) ? Opcode::Store : Opcode::Load;
      out.bug_pc = b.access(op, kFirstData, kTarget, static_cast<int64_t>(size + over - width), width);
      b.free(kTarget);
      break;
    }
    case WorkloadKind::CrossGranuleOverflow: {
      const uint64_t usable = size_class(size);
      if (spec.placement == CrossPlacement::Adjacent) {
        b.alloc(kSecond, draw_size(spec.sizes, rng));
        // Straddle the boundary between source and victim.
        out.bug_pc = b.access(Opcode::Store, kFirstData, kTarget, static_cast<int64_t>(usable - 4), 8);
      } else {
        const uint64_t victim = draw_size(spec.sizes, rng);
        // The spacer must not share the victim's size class, or the victim
        // would simply reuse the spacer's slot.
        const uint64_t spacer = size_class(victim) + kGranuleSize;
        b.alloc(kSecond, spacer);
        b.free(kSecond);
        b.alloc(kThird, victim);
        out.bug_pc = b.access(Opcode::Store, kFirstData, kTarget,
                              static_cast<int64_t>(usable + spacer), largest_width(victim));
      }
      break;
    }
    case WorkloadKind::UseAfterFree: {
      for (unsigned i = rng.uniform(0, 2); i > 0; --i) benign_access(b, kTarget, size, rng);
      b.free(kTarget);
      for (unsigned k = 0; k < spec.reuse_cycles; ++k) {
        b.alloc(kSecond, size);
        b.access(Opcode::Store, kFirstData, kSecond, 0, largest_width(size));
        b.free(kSecond);
      }
      out.bug_pc = b.access(Opcode::Load, kFirstData + 1, kTarget, 0, largest_width(size));
      break;
    }
    case WorkloadKind::DoubleFree: {
      for (unsigned i = rng.uniform(0, 2); i > 0; --i) benign_access(b, kTarget, size, rng);
      b.free(kTarget);
      out.bug_pc = b.free(kTarget);
      break;
    }
    case WorkloadKind::Benign: {
      for (unsigned i = 0; i < spec.benign_accesses; ++i) {
        const unsigned which = static_cast<unsigned>(rng.uniform(0, preamble.size()));
        if (which == preamble.size()) {
          benign_access(b, kTarget, size, rng);
        } else {
          benign_access(b, static_cast<uint8_t>(kFirstPreamble + which), preamble[which], rng);
        }
        switch (rng.uniform(0, 15)) {
          case 0: b.simple(Opcode::Ret); break;
          case 1: b.simple(Opcode::Syscall); break;
          default: break;
        }
      }
      if (rng.uniform(0, 1)) b.free(kTarget);
      break;
    }
  }
  out.program = b.finish();
  return out;
}

}  // namespace

std::string_view to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::IntraGranuleOverflow: return "intra";
    case WorkloadKind::CrossGranuleOverflow: return "cross";
    case WorkloadKind::UseAfterFree: return "uaf";
    case WorkloadKind::DoubleFree: return "double-free";
    case WorkloadKind::Benign: return "benign";
  }
  return "?";
}

std::optional<WorkloadKind> parse_workload_kind(std::string_view text) {
  if (text == "intra" || text == "IntraGranuleOverflow") return WorkloadKind::IntraGranuleOverflow;
  if (text == "cross" || text == "CrossGranuleOverflow") return WorkloadKind::CrossGranuleOverflow;
  if (text == "uaf" || text == "UseAfterFree") return WorkloadKind::UseAfterFree;
  if (text == "double-free" || text == "DoubleFree") return WorkloadKind::DoubleFree;
  if (text == "benign" || text == "Benign") return WorkloadKind::Benign;
  return std::nullopt;
}

std::vector<SizeWeight> parse_size_distribution(std::string_view text) {
  std::vector<SizeWeight> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(pos, comma - pos);
    const size_t colon = item.find(':');
    const std::string size_text(item.substr(0, colon));
    SizeWeight sw;
    auto [p, ec] = std::from_chars(size_text.data(), size_text.data() + size_text.size(), sw.size);
    if (size_text.empty() || ec != std::errc() || p != size_text.data() + size_text.size()) {
      throw WorkloadSpecError("invalid size '" + size_text + "'");
    }
    if (colon != std::string_view::npos) {
      const std::string weight(item.substr(colon + 1));
      try {
        size_t used = 0;
        sw.weight = std::stod(weight, &used);
        if (used != weight.size()) throw std::invalid_argument(weight);
      } catch (const std::exception&) {
        throw WorkloadSpecError("invalid weight '" + weight + "'");
      }
    }
    out.push_back(sw);
    pos = comma + 1;
  }
  return out;
}

std::string render_size_distribution(const std::vector<SizeWeight>& sizes) {
  std::string out;
  for (const auto& s : sizes) {
    if (!out.empty()) out += ',';
    nlohmann::json w = s.weight;
    out += std::to_string(s.size) + ":" + w.dump();
  }
  return out;
}

std::vector<SizeWeight> uniform_sizes(uint64_t lo, uint64_t hi) {
  std::vector<SizeWeight> out;
  for (uint64_t s = lo; s <= hi; ++s) out.push_back({s, 1.0});
  return out;
}

void validate(const WorkloadSpec& spec) {
  if (spec.count < 1) throw WorkloadSpecError("count must be at least 1");
  if (spec.sizes.empty()) throw WorkloadSpecError("size distribution is empty");
  for (const auto& s : spec.sizes) {
    if (!(s.weight > 0)) throw WorkloadSpecError("weights must be positive");
    if (s.size == 0) throw WorkloadSpecError("sizes must be at least 1");
    if (s.size > kDefaultLargeThreshold) {
      throw WorkloadSpecError("size " + std::to_string(s.size) + " exceeds the tagged heap classes");
    }
  }
  if (spec.preamble_allocs > 8) throw WorkloadSpecError("at most 8 preamble allocations");
  if (spec.kind == WorkloadKind::IntraGranuleOverflow &&
      std::none_of(spec.sizes.begin(), spec.sizes.end(),
                   [](const SizeWeight& s) { return s.size % kGranuleSize != 0; })) {
    throw WorkloadSpecError(
        "intra-granule overflows need a size that is not a multiple of 16");
  }
}

std::vector<GeneratedProgram> generate_workload(const WorkloadSpec& spec) {
  validate(spec);
  const Rng root = Rng(spec.seed).substream("generator");
  std::vector<GeneratedProgram> out;
  out.reserve(spec.count);
  for (uint64_t i = 0; i < spec.count; ++i) out.push_back(generate_one(spec, root.substream(i)));
  return out;
}

std::string render_generated(const GeneratedProgram& generated) {
  std::string out = "# kind: " + std::string(to_string(generated.kind)) + "\n";
  out += "# target-size: " + std::to_string(generated.target_size) + "\n";
  if (generated.bug_pc) out += "# bug-pc: " + std::to_string(*generated.bug_pc) + "\n";
  return out + render_program(generated.program);
}

void write_corpus(const std::filesystem::path& dir, const WorkloadSpec& spec,
                  const std::vector<GeneratedProgram>& programs) {
  const std::filesystem::path kind_dir = dir / std::string(to_string(spec.kind));
  std::filesystem::create_directories(kind_dir);
  for (size_t i = 0; i < programs.size(); ++i) {
    std::ofstream f(kind_dir / (std::to_string(i) + ".mtr"), std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (kind_dir / std::to_string(i)).string());
    f << render_generated(programs[i]);
  }
  nlohmann::ordered_json manifest;
  manifest["kind"] = std::string(to_string(spec.kind));
  manifest["seed"] = spec.seed;
  manifest["count"] = spec.count;
  nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
  for (const auto& s : spec.sizes) sizes.push_back({{"size", s.size}, {"weight", s.weight}});
  manifest["size_distribution"] = sizes;
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
  m << manifest.dump(2) << "\n";
}

}  // namespace mtesim
