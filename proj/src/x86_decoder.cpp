#include "jccscan/x86_decoder.hpp"

#include <array>

namespace jccscan::x86 {

namespace {

enum class Imm : std::uint8_t {
  none,
  b,     // imm8
  w,     // imm16
  z,     // imm16/32 by operand size
  v,     // imm16/32/64 by operand size and REX.W
  wb,    // imm16 + imm8 (enter)
  bb,    // imm8 + imm8 (extrq/insertq)
  d,     // imm32 regardless of prefixes
  moffs, // 32/64-bit absolute address by address size
  jb,    // rel8
  jz,    // rel32
};

constexpr std::array<std::string_view, 8> kGroup1 = {"add", "or",  "adc", "sbb",
                                                     "and", "sub", "xor", "cmp"};
constexpr std::array<std::string_view, 8> kGroup2 = {"rol", "ror", "rcl", "rcr",
                                                     "shl", "shr", "sal", "sar"};
constexpr std::array<std::string_view, 8> kGroup3 = {"test", "test", "not", "neg",
                                                     "mul",  "imul", "div", "idiv"};
constexpr std::array<std::string_view, 8> kGroup5 = {"inc", "dec",   "call", "call",
                                                     "jmp", "jmp",   "push", ""};
constexpr std::array<std::string_view, 16> kJcc = {
    "jo", "jno", "jc", "jnc", "jz", "jnz", "jna", "ja",
    "js", "jns", "jp", "jnp", "jl", "jnl", "jng", "jg",
};

struct Prefixes {
  bool opsize = false;
  bool addrsize = false;
  bool lock = false;
  std::uint8_t rex = 0;
  std::uint8_t last_simd = 0; // last of 66/F2/F3 seen
  bool any_legacy_simd = false;

  bool rex_w() const { return (rex & 0x08) != 0; }
  bool rex_b() const { return (rex & 0x01) != 0; }
};

class Cursor {
public:
  explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::optional<std::uint8_t> next() {
    if (pos_ >= bytes_.size() || pos_ >= kMaxInstructionLength)
      return std::nullopt;
    return bytes_[pos_++];
  }

  std::optional<std::uint8_t> peek() const {
    if (pos_ >= bytes_.size())
      return std::nullopt;
    return bytes_[pos_];
  }

  bool skip(std::size_t n) {
    if (pos_ + n > bytes_.size() || pos_ + n > kMaxInstructionLength)
      return false;
    pos_ += n;
    return true;
  }

  std::size_t position() const { return pos_; }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct ModRM {
  std::uint8_t mod = 0;
  std::uint8_t reg = 0;
  std::uint8_t rm = 0;
};

class Decoder {
public:
  explicit Decoder(std::span<const std::uint8_t> bytes) : cur_(bytes) {}

  std::optional<DecodedInstruction> run();

private:
  bool read_prefixes_and_opcode(std::uint8_t &opcode);
  bool read_modrm(bool force_register = false);
  bool read_immediate(Imm imm);
  bool one_byte(std::uint8_t op);
  bool two_byte();
  bool vex(std::uint8_t first);
  bool evex();
  bool xop();
  bool extended_map_tail(unsigned map, std::uint8_t op);

  Cursor cur_;
  Prefixes pfx_;
  ModRM modrm_;
  DecodedInstruction out_;
};

bool is_legacy_prefix(std::uint8_t b) {
  switch (b) {
  case 0x66: case 0x67: case 0xF0: case 0xF2: case 0xF3:
  case 0x26: case 0x2E: case 0x36: case 0x3E: case 0x64: case 0x65:
    return true;
  default:
    return false;
  }
}

bool Decoder::read_prefixes_and_opcode(std::uint8_t &opcode) {
  for (;;) {
    const auto b = cur_.next();
    if (!b)
      return false;
    if (is_legacy_prefix(*b)) {
      // A legacy prefix after REX cancels the REX.
      pfx_.rex = 0;
      switch (*b) {
      case 0x66: pfx_.opsize = true; pfx_.last_simd = *b; pfx_.any_legacy_simd = true; break;
      case 0x67: pfx_.addrsize = true; break;
      case 0xF0: pfx_.lock = true; break;
      case 0xF2: case 0xF3: pfx_.last_simd = *b; pfx_.any_legacy_simd = true; break;
      default: break;
      }
      continue;
    }
    if ((*b & 0xF0) == 0x40) {
      pfx_.rex = *b;
      continue;
    }
    opcode = *b;
    return true;
  }
}

bool Decoder::read_modrm(bool force_register) {
  const auto m = cur_.next();
  if (!m)
    return false;
  out_.has_modrm = true;
  modrm_ = {static_cast<std::uint8_t>(*m >> 6), static_cast<std::uint8_t>((*m >> 3) & 7),
            static_cast<std::uint8_t>(*m & 7)};
  if (modrm_.mod == 3 || force_register)
    return true;

  out_.memory_operand = true;
  std::size_t disp = modrm_.mod == 1 ? 1 : modrm_.mod == 2 ? 4 : 0;
  if (modrm_.rm == 4) {
    const auto sib = cur_.next();
    if (!sib)
      return false;
    if (modrm_.mod == 0 && (*sib & 7) == 5)
      disp = 4;
  } else if (modrm_.mod == 0 && modrm_.rm == 5) {
    out_.rip_relative = true;
    disp = 4;
  }
  return cur_.skip(disp);
}

bool Decoder::read_immediate(Imm imm) {
  std::size_t n = 0;
  switch (imm) {
  case Imm::none: return true;
  case Imm::b: n = 1; break;
  case Imm::w: n = 2; break;
  case Imm::z: n = pfx_.opsize ? 2 : 4; break;
  case Imm::v: n = pfx_.rex_w() ? 8 : pfx_.opsize ? 2 : 4; break;
  case Imm::wb: n = 3; break;
  case Imm::bb: n = 2; break;
  case Imm::d: n = 4; break;
  case Imm::moffs: return cur_.skip(pfx_.addrsize ? 4 : 8);
  case Imm::jb: return cur_.skip(1);
  case Imm::jz: return cur_.skip(4);
  }
  out_.has_immediate = true;
  return cur_.skip(n);
}

bool Decoder::one_byte(std::uint8_t op) {
  auto &m = out_.mnemonic;

  // 00-3F: the eight ALU ops in the regular six-slot pattern.
  if (op < 0x40) {
    const unsigned slot = op & 7;
    if (slot >= 6)
      return false; // segment prefixes are consumed earlier; the rest are #UD in 64-bit
    m = kGroup1[op >> 3];
    if (slot <= 3) {
      if (!read_modrm())
        return false;
      out_.writes_memory_operand = slot <= 1 && m != "cmp";
      return true;
    }
    return read_immediate(slot == 4 ? Imm::b : Imm::z);
  }

  if (op >= 0x50 && op <= 0x57) { m = "push"; return true; }
  if (op >= 0x58 && op <= 0x5F) { m = "pop"; return true; }
  if (op >= 0x70 && op <= 0x7F) {
    m = kJcc[op & 0xF];
    out_.condition = condition_from_code(op);
    return read_immediate(Imm::jb);
  }
  if (op >= 0x91 && op <= 0x97) { m = "xchg"; return true; }
  if (op >= 0xB0 && op <= 0xB7) { m = "mov"; return read_immediate(Imm::b); }
  if (op >= 0xB8 && op <= 0xBF) { m = "mov"; return read_immediate(Imm::v); }
  if (op >= 0xD8 && op <= 0xDF) { m = "x87"; return read_modrm(); }

  switch (op) {
  case 0x63: m = "movsxd"; return read_modrm();
  case 0x68: m = "push"; return read_immediate(Imm::z);
  case 0x69: m = "imul"; return read_modrm() && read_immediate(Imm::z);
  case 0x6A: m = "push"; return read_immediate(Imm::b);
  case 0x6B: m = "imul"; return read_modrm() && read_immediate(Imm::b);
  case 0x6C: case 0x6D: m = "ins"; return true;
  case 0x6E: case 0x6F: m = "outs"; return true;
  case 0x80: case 0x81: case 0x83:
    if (!read_modrm())
      return false;
    m = kGroup1[modrm_.reg];
    out_.writes_memory_operand = modrm_.reg != 7;
    return read_immediate(op == 0x81 ? Imm::z : Imm::b);
  case 0x84: case 0x85: m = "test"; return read_modrm();
  case 0x86: case 0x87:
    m = "xchg";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0x88: case 0x89: case 0x8C:
    m = "mov";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0x8A: case 0x8B: case 0x8E: m = "mov"; return read_modrm();
  case 0x8D: m = "lea"; return read_modrm();
  case 0x8F:
    if (!read_modrm() || modrm_.reg != 0)
      return false;
    m = "pop";
    out_.writes_memory_operand = true;
    return true;
  case 0x90:
    m = pfx_.rex_b() ? "xchg" : pfx_.last_simd == 0xF3 ? "pause" : "nop";
    return true;
  case 0x98: m = "cwde"; return true;
  case 0x99: m = "cdq"; return true;
  case 0x9B: m = "fwait"; return true;
  case 0x9C: m = "pushf"; return true;
  case 0x9D: m = "popf"; return true;
  case 0x9E: m = "sahf"; return true;
  case 0x9F: m = "lahf"; return true;
  case 0xA0: case 0xA1: case 0xA2: case 0xA3: m = "mov"; return read_immediate(Imm::moffs);
  case 0xA4: case 0xA5: m = "movs"; return true;
  case 0xA6: case 0xA7: m = "cmps"; return true;
  case 0xA8: m = "test"; return read_immediate(Imm::b);
  case 0xA9: m = "test"; return read_immediate(Imm::z);
  case 0xAA: case 0xAB: m = "stos"; return true;
  case 0xAC: case 0xAD: m = "lods"; return true;
  case 0xAE: case 0xAF: m = "scas"; return true;
  case 0xC0: case 0xC1:
    if (!read_modrm())
      return false;
    m = kGroup2[modrm_.reg];
    out_.writes_memory_operand = true;
    return read_immediate(Imm::b);
  case 0xC2: m = "ret"; return read_immediate(Imm::w);
  case 0xC3: m = "ret"; return true;
  case 0xC6: case 0xC7: {
    if (!read_modrm())
      return false;
    const Imm imm = op == 0xC6 ? Imm::b : Imm::z;
    if (modrm_.reg == 0) {
      m = "mov";
      out_.writes_memory_operand = true;
      return read_immediate(imm);
    }
    if (modrm_.reg == 7 && modrm_.mod == 3 && modrm_.rm == 0) {
      m = op == 0xC6 ? "xabort" : "xbegin";
      return op == 0xC6 ? read_immediate(Imm::b) : cur_.skip(pfx_.opsize ? 2 : 4);
    }
    return false;
  }
  case 0xC8: m = "enter"; return read_immediate(Imm::wb);
  case 0xC9: m = "leave"; return true;
  case 0xCA: m = "retf"; return read_immediate(Imm::w);
  case 0xCB: m = "retf"; return true;
  case 0xCC: m = "int3"; return true;
  case 0xCD: m = "int"; return read_immediate(Imm::b);
  case 0xCF: m = "iret"; return true;
  case 0xD0: case 0xD1: case 0xD2: case 0xD3:
    if (!read_modrm())
      return false;
    m = kGroup2[modrm_.reg];
    out_.writes_memory_operand = true;
    return true;
  case 0xD7: m = "xlat"; return true;
  case 0xE0: m = "loopne"; return read_immediate(Imm::jb);
  case 0xE1: m = "loope"; return read_immediate(Imm::jb);
  case 0xE2: m = "loop"; return read_immediate(Imm::jb);
  case 0xE3: m = "jrcxz"; return read_immediate(Imm::jb);
  case 0xE4: case 0xE5: m = "in"; return read_immediate(Imm::b);
  case 0xE6: case 0xE7: m = "out"; return read_immediate(Imm::b);
  case 0xE8: m = "call"; return read_immediate(Imm::jz);
  case 0xE9: m = "jmp"; return read_immediate(Imm::jz);
  case 0xEB: m = "jmp"; return read_immediate(Imm::jb);
  case 0xEC: case 0xED: m = "in"; return true;
  case 0xEE: case 0xEF: m = "out"; return true;
  case 0xF1: m = "int1"; return true;
  case 0xF4: m = "hlt"; return true;
  case 0xF5: m = "cmc"; return true;
  case 0xF6: case 0xF7:
    if (!read_modrm())
      return false;
    m = kGroup3[modrm_.reg];
    if (modrm_.reg <= 1)
      return read_immediate(op == 0xF6 ? Imm::b : Imm::z);
    out_.writes_memory_operand = modrm_.reg == 2 || modrm_.reg == 3;
    return true;
  case 0xF8: m = "clc"; return true;
  case 0xF9: m = "stc"; return true;
  case 0xFA: m = "cli"; return true;
  case 0xFB: m = "sti"; return true;
  case 0xFC: m = "cld"; return true;
  case 0xFD: m = "std"; return true;
  case 0xFE:
    if (!read_modrm() || modrm_.reg > 1)
      return false;
    m = kGroup5[modrm_.reg];
    out_.writes_memory_operand = true;
    return true;
  case 0xFF:
    if (!read_modrm() || modrm_.reg == 7)
      return false;
    m = kGroup5[modrm_.reg];
    out_.writes_memory_operand = modrm_.reg <= 1;
    return true;
  default:
    // 06 07 0E 16 17 1E 1F 27 2F 37 3F 60 61 82 9A CE D4 D5 D6 EA
    return false;
  }
}

bool Decoder::two_byte() {
  const auto op = cur_.next();
  if (!op)
    return false;
  auto &m = out_.mnemonic;
  const std::uint8_t b = *op;

  if (b == 0x38) {
    if (!cur_.next())
      return false;
    m = "sse";
    return read_modrm();
  }
  if (b == 0x3A) {
    if (!cur_.next())
      return false;
    m = "sse";
    return read_modrm() && read_immediate(Imm::b);
  }
  if (b >= 0x80 && b <= 0x8F) {
    m = kJcc[b & 0xF];
    out_.condition = condition_from_code(b);
    return read_immediate(Imm::jz);
  }
  if (b >= 0x40 && b <= 0x4F) { m = "cmov"; return read_modrm(); }
  if (b >= 0x90 && b <= 0x9F) {
    m = "set";
    out_.writes_memory_operand = true;
    return read_modrm();
  }
  if (b >= 0xC8 && b <= 0xCF) { m = "bswap"; return true; }

  switch (b) {
  case 0x00: m = "sys"; out_.writes_memory_operand = true; return read_modrm();
  case 0x01: case 0x02: case 0x03: m = "sys"; return read_modrm();
  case 0x05: m = "syscall"; return true;
  case 0x06: m = "clts"; return true;
  case 0x07: m = "sysret"; return true;
  case 0x08: m = "invd"; return true;
  case 0x09: m = "wbinvd"; return true;
  case 0x0B: m = "ud2"; return true;
  case 0x0D: m = "prefetch"; return read_modrm();
  case 0x0E: m = "femms"; return true;
  case 0x0F: m = "3dnow"; return read_modrm() && read_immediate(Imm::b);
  case 0x18: m = "prefetch"; return read_modrm();
  case 0x19: case 0x1A: case 0x1B: case 0x1C: case 0x1D: case 0x1F:
    m = "nop";
    return read_modrm();
  case 0x1E: {
    if (!read_modrm())
      return false;
    const bool endbr = pfx_.last_simd == 0xF3 && modrm_.mod == 3 && modrm_.reg == 7 &&
                       (modrm_.rm == 2 || modrm_.rm == 3);
    m = endbr ? (modrm_.rm == 2 ? "endbr64" : "endbr32") : "nop";
    return true;
  }
  case 0x20: case 0x21: case 0x22: case 0x23:
    m = "mov";
    return read_modrm(/*force_register=*/true);
  case 0x11: case 0x13: case 0x17: case 0x29: case 0x2B: case 0x7E: case 0x7F:
  case 0xD6: case 0xE7: case 0xC3:
    m = b == 0xC3 ? "movnti" : "sse";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0x30: m = "wrmsr"; return true;
  case 0x31: m = "rdtsc"; return true;
  case 0x32: m = "rdmsr"; return true;
  case 0x33: m = "rdpmc"; return true;
  case 0x34: m = "sysenter"; return true;
  case 0x35: m = "sysexit"; return true;
  case 0x37: m = "getsec"; return true;
  case 0x70: case 0x71: case 0x72: case 0x73:
    m = "sse";
    return read_modrm() && read_immediate(Imm::b);
  case 0x77: m = "emms"; return true;
  case 0x78:
    if (!read_modrm())
      return false;
    if (pfx_.last_simd == 0x66 || pfx_.last_simd == 0xF2) {
      m = "sse";
      return read_immediate(Imm::bb);
    }
    m = "vmread";
    out_.writes_memory_operand = true;
    return true;
  case 0x79:
    m = (pfx_.last_simd == 0x66 || pfx_.last_simd == 0xF2) ? "sse" : "vmwrite";
    return read_modrm();
  case 0xA0: case 0xA8: m = "push"; return true;
  case 0xA1: case 0xA9: m = "pop"; return true;
  case 0xA2: m = "cpuid"; return true;
  case 0xA3: m = "bt"; return read_modrm();
  case 0xA4: case 0xAC:
    m = b == 0xA4 ? "shld" : "shrd";
    out_.writes_memory_operand = true;
    return read_modrm() && read_immediate(Imm::b);
  case 0xA5: case 0xAD:
    m = b == 0xA5 ? "shld" : "shrd";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0xAA: m = "rsm"; return true;
  case 0xAB: case 0xB3: case 0xBB:
    m = b == 0xAB ? "bts" : b == 0xB3 ? "btr" : "btc";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0xAE: {
    if (!read_modrm())
      return false;
    if (modrm_.mod == 3 && pfx_.last_simd == 0) {
      if (modrm_.reg == 5) { m = "lfence"; return true; }
      if (modrm_.reg == 6) { m = "mfence"; return true; }
      if (modrm_.reg == 7) { m = "sfence"; return true; }
    }
    m = "sys";
    return true;
  }
  case 0xAF: m = "imul"; return read_modrm();
  case 0xB0: case 0xB1: case 0xC0: case 0xC1:
    m = b <= 0xB1 ? "cmpxchg" : "xadd";
    out_.writes_memory_operand = true;
    return read_modrm();
  case 0xB2: m = "lss"; return read_modrm();
  case 0xB4: m = "lfs"; return read_modrm();
  case 0xB5: m = "lgs"; return read_modrm();
  case 0xB6: case 0xB7: m = "movzx"; return read_modrm();
  case 0xB8: m = pfx_.last_simd == 0xF3 ? "popcnt" : "jmpe"; return read_modrm();
  case 0xB9: m = "ud1"; return read_modrm();
  case 0xBA:
    if (!read_modrm() || modrm_.reg < 4)
      return false;
    m = modrm_.reg == 4 ? "bt" : modrm_.reg == 5 ? "bts" : modrm_.reg == 6 ? "btr" : "btc";
    out_.writes_memory_operand = modrm_.reg != 4;
    return read_immediate(Imm::b);
  case 0xBC: m = pfx_.last_simd == 0xF3 ? "tzcnt" : "bsf"; return read_modrm();
  case 0xBD: m = pfx_.last_simd == 0xF3 ? "lzcnt" : "bsr"; return read_modrm();
  case 0xBE: case 0xBF: m = "movsx"; return read_modrm();
  case 0xC2: case 0xC4: case 0xC5: case 0xC6:
    m = "sse";
    return read_modrm() && read_immediate(Imm::b);
  case 0xC7: m = "sys"; return read_modrm();
  case 0xFF: m = "ud0"; return read_modrm();
  default:
    break;
  }

  if ((b >= 0x10 && b <= 0x17) || (b >= 0x28 && b <= 0x2F) || (b >= 0x50 && b <= 0x6F) ||
      (b >= 0x74 && b <= 0x76) || (b >= 0x7C && b <= 0x7D) || b >= 0xD0) {
    m = "sse";
    return read_modrm();
  }
  // 04 0A 0C 24-27 36 39 3B-3F 7A 7B A6 A7
  return false;
}

// Shared tail for VEX/EVEX/XOP: opcode, ModRM, and the map's immediate.
bool Decoder::extended_map_tail(unsigned map, std::uint8_t op) {
  if (map == 1 && op == 0x77)
    return true; // vzeroupper/vzeroall have no ModRM
  if (!read_modrm())
    return false;
  switch (map) {
  case 1:
    if ((op >= 0x70 && op <= 0x73) || op == 0xC2 || (op >= 0xC4 && op <= 0xC6))
      return read_immediate(Imm::b);
    return true;
  case 3:
  case 8:
    return read_immediate(Imm::b);
  case 0xA:
    return read_immediate(Imm::d);
  default:
    return true;
  }
}

bool Decoder::vex(std::uint8_t first) {
  if (pfx_.rex != 0 || pfx_.any_legacy_simd || pfx_.lock)
    return false;
  unsigned map = 1;
  if (first == 0xC4) {
    const auto p0 = cur_.next();
    if (!p0 || !cur_.next())
      return false;
    map = *p0 & 0x1F;
    if (map < 1 || map > 3)
      return false;
  } else if (!cur_.next()) {
    return false;
  }
  const auto op = cur_.next();
  if (!op)
    return false;
  out_.mnemonic = "vex";
  return extended_map_tail(map, *op);
}

bool Decoder::evex() {
  if (pfx_.rex != 0 || pfx_.any_legacy_simd || pfx_.lock)
    return false;
  const auto p0 = cur_.next();
  const auto p1 = cur_.next();
  if (!p0 || !p1 || !cur_.next())
    return false;
  if ((*p1 & 0x04) == 0)
    return false;
  const unsigned map = *p0 & 0x07;
  if (map == 0 || map == 4 || map == 7)
    return false;
  const auto op = cur_.next();
  if (!op)
    return false;
  out_.mnemonic = "evex";
  if (!read_modrm())
    return false;
  if (map == 3 || (map == 1 && ((*op >= 0x70 && *op <= 0x73) || *op == 0xC2 ||
                                (*op >= 0xC4 && *op <= 0xC6))))
    return read_immediate(Imm::b);
  return true;
}

bool Decoder::xop() {
  const auto p0 = cur_.next();
  if (!p0 || !cur_.next())
    return false;
  const unsigned map = *p0 & 0x1F;
  if (map != 8 && map != 9 && map != 0xA)
    return false;
  const auto op = cur_.next();
  if (!op)
    return false;
  out_.mnemonic = "xop";
  return extended_map_tail(map, *op);
}

std::optional<DecodedInstruction> Decoder::run() {
  std::uint8_t op = 0;
  if (!read_prefixes_and_opcode(op))
    return std::nullopt;

  bool ok = false;
  if (op == 0x0F) {
    ok = two_byte();
  } else if (op == 0xC4 || op == 0xC5) {
    ok = vex(op);
  } else if (op == 0x62) {
    ok = evex();
  } else if (op == 0x8F && cur_.peek() && (*cur_.peek() & 0x1F) >= 8) {
    ok = xop();
  } else {
    ok = one_byte(op);
  }
  if (!ok)
    return std::nullopt;

  out_.length = static_cast<std::uint8_t>(cur_.position());
  if (!out_.memory_operand)
    out_.writes_memory_operand = false;
  return out_;
}

} // namespace

std::optional<DecodedInstruction> decode_one(std::span<const std::uint8_t> bytes) {
  return Decoder(bytes).run();
}

} // namespace jccscan::x86
