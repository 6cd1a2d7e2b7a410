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

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mtesim/trace_io.h"

namespace mtesim {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing comment; '#' inside brackets is an immediate marker.
std::string_view strip_comment(std::string_view line) {
  int depth = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '[') ++depth;
    if (line[i] == ']') --depth;
    if (line[i] == '#' && depth == 0) return line.substr(0, i);
  }
  return line;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineParser {
 public:
  explicit LineParser(int line) : line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw TraceError(line_, what); }

  uint8_t reg(std::string_view tok) const {
    if (tok == "sp") return kStackPointer;
    if (tok.size() < 2 || tok[0] != 'r') fail("expected register, got '" + std::string(tok) + "'");
    unsigned value = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), value);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      fail("expected register, got '" + std::string(tok) + "'");
    }
    if (value >= kNumRegs) fail("register out of range: " + std::string(tok));
    return static_cast<uint8_t>(value);
  }

  int64_t imm(std::string_view tok) const {
    const std::string text(tok);
    bool negative = false;
    std::string_view digits = tok;
    if (!digits.empty() && (digits[0] == '-' || digits[0] == '+')) {
      negative = digits[0] == '-';
      digits.remove_prefix(1);
    }
    int base = 10;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
      base = 16;
      digits.remove_prefix(2);
    }
    uint64_t magnitude = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), magnitude, base);
    if (digits.empty() || ec != std::errc() || p != digits.data() + digits.size()) {
      fail("invalid immediate '" + text + "'");
    }
    return static_cast<int64_t>(negative ? 0 - magnitude : magnitude);
  }

  uint8_t width(std::string_view tok) const {
    if (tok.size() < 2 || tok[0] != 'w') fail("expected width w<1|2|4|8|16>, got '" + std::string(tok) + "'");
    unsigned w = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), w);
    if (ec != std::errc() || p != tok.data() + tok.size() || !valid_width(w)) {
      fail("invalid width " + std::string(tok.substr(1)));
    }
    return static_cast<uint8_t>(w);
  }

  uint8_t pair(std::string_view tok) const {
    if (tok == "p1") return 1;
    if (tok == "p2") return 2;
    fail("invalid pair count '" + std::string(tok) + "'");
  }

  void expect_arity(const std::vector<std::string_view>& toks, size_t n) const {
    if (toks.size() != n) {
      fail("'" + std::string(toks[0]) + "' takes " + std::to_string(n - 1) + " operands");
    }
  }

  Instruction memory(Opcode op, std::string_view rest) const {
    Instruction in;
    in.op = op;
    const size_t open = rest.find('[');
    const size_t close = rest.find(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
      fail("expected memory operand [r<b>, #<imm>|r<i>]");
    }
    const auto head = split_ws(rest.substr(0, open));
    if (head.size() != 1) fail("expected one data register before the memory operand");
    in.rt = reg(head[0]);

    std::string_view inner = rest.substr(open + 1, close - open - 1);
    const size_t comma = inner.find(',');
    in.base = reg(trim(inner.substr(0, comma)));
    if (comma == std::string_view::npos) {
      in.offset_kind = OffsetKind::Imm;
      in.imm = 0;
    } else {
      std::string_view off = trim(inner.substr(comma + 1));
      if (!off.empty() && off[0] == '#') {
        in.offset_kind = OffsetKind::Imm;
        in.imm = imm(off.substr(1));
      } else {
        in.offset_kind = OffsetKind::Reg;
        in.offset_reg = reg(off);
      }
    }

    const auto tail = split_ws(rest.substr(close + 1));
    if (tail.size() < 2) fail("memory access needs width and pair, e.g. w8 p1");
    in.width = width(tail[0]);
    in.pair = pair(tail[1]);
    for (size_t i = 2; i < tail.size(); ++i) {
      if (tail[i] == "atomic") {
        in.atomic = true;
      } else if (tail[i] == "overread_ok") {
        in.overread_ok = true;
      } else {
        fail("unknown access flag '" + std::string(tail[i]) + "'");
      }
    }
    if (in.pair == 2 && in.rt + 1 >= static_cast<int>(kNumRegs)) {
      fail("pair access needs registers r<d> and r<d+1>");
    }
    return in;
  }

  Instruction parse(std::string_view text) const {
    const auto toks = split_ws(text);
    const std::string_view m = toks[0];
    Instruction in;
    if (m == "ld" || m == "st") {
      return memory(m == "ld" ? Opcode::Load : Opcode::Store, text.substr(text.find(m) + 2));
    } else if (m == "alloc") {
      expect_arity(toks, 3);
      in.op = Opcode::AllocCall;
      in.rt = reg(toks[1]);
      in.imm = imm(toks[2]);
      if (in.imm < 0) fail("allocation size must be non-negative");
    } else if (m == "free") {
      expect_arity(toks, 2);
      in.op = Opcode::FreeCall;
      in.rt = reg(toks[1]);
    } else if (m == "mov") {
      expect_arity(toks, 3);
      in.op = Opcode::Mov;
      in.rt = reg(toks[1]);
      in.imm = imm(toks[2]);
    } else if (m == "add") {
      expect_arity(toks, 4);
      in.op = Opcode::Add;
      in.rt = reg(toks[1]);
      in.ra = reg(toks[2]);
      in.imm = imm(toks[3]);
    } else if (m == "syscall" || m == "ret" || m == "halt") {
      expect_arity(toks, 1);
      in.op = m == "syscall" ? Opcode::Syscall : m == "ret" ? Opcode::Ret : Opcode::Halt;
    } else {
      fail("unknown mnemonic '" + std::string(m) + "'");
    }
    return in;
  }

 private:
  int line_;
};

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

Program parse_program(std::string_view text) {
  Program program;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    const std::string_view line = trim(strip_comment(text.substr(pos, nl - pos)));
    if (!line.empty()) {
      program.code.push_back(LineParser(line_no).parse(line));
      program.lines.push_back(line_no);
    }
    pos = nl + 1;
  }
  if (program.code.empty()) throw TraceError(line_no, "program is empty");
  if (program.code.back().op != Opcode::Halt) {
    throw TraceError(program.lines.back(), "program must end with halt");
  }
  return program;
}

Program read_program_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_program(buf.str());
}

std::string render_instruction(const Instruction& in) {
  auto r = [](unsigned reg) { return "r" + std::to_string(reg); };
  switch (in.op) {
    case Opcode::Load:
    case Opcode::Store: {
      std::string s = (in.op == Opcode::Load ? "ld " : "st ") + r(in.rt) + " [" + r(in.base) + ", ";
      s += in.offset_kind == OffsetKind::Imm ? "#" + std::to_string(in.imm) : r(in.offset_reg);
      s += "] w" + std::to_string(in.width) + " p" + std::to_string(in.pair);
      if (in.atomic) s += " atomic";
      if (in.overread_ok) s += " overread_ok";
      return s;
    }
    case Opcode::Mov: return "mov " + r(in.rt) + " " + hex(static_cast<uint64_t>(in.imm));
    case Opcode::Add: return "add " + r(in.rt) + " " + r(in.ra) + " " + std::to_string(in.imm);
    case Opcode::AllocCall: return "alloc " + r(in.rt) + " " + std::to_string(in.imm);
    case Opcode::FreeCall: return "free " + r(in.rt);
    case Opcode::Syscall: return "syscall";
    case Opcode::Ret: return "ret";
    case Opcode::Halt: return "halt";
  }
  return "";
}

std::string render_program(const Program& program) {
  std::string out;
  for (const Instruction& in : program.code) {
    out += render_instruction(in);
    out += '\n';
  }
  return out;
}

}  // namespace mtesim
