#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rehost/vm/image.hpp"
#include "rehost/vm/report.hpp"

namespace rehost::vm {

// Attacker-controlled byte source. Reads past the end yield 0x00 and set the
// exhausted flag; the cursor only moves over bytes that exist.
class InputStream {
 public:
  InputStream() = default;
  explicit InputStream(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}

  uint32_t read(uint32_t width);  // little-endian, width in {1,2,4}
  bool exhausted() const { return exhausted_; }
  size_t cursor() const { return cursor_; }
  size_t remaining() const { return bytes_.size() - cursor_; }

 private:
  std::vector<uint8_t> bytes_;
  size_t cursor_ = 0;
  bool exhausted_ = false;
};

struct Limits {
  uint64_t instruction_budget = 2'000'000;
  uint32_t max_call_depth = 256;
};

inline constexpr uint32_t kTickQuantum = 100;
// Accesses below this address fault as null dereferences.
inline constexpr uint32_t kNullPageEnd = 0x1000;
// Tainted branches evaluated within this many instructions of the budget
// running out are candidates for the hang site.
inline constexpr uint64_t kHangWindow = 1000;

struct Value {
  uint32_t bits = 0;
  uint32_t len = 0;  // element count when is_buf
  bool taint = false;
  bool is_buf = false;
};

class Vm {
 public:
  Vm(std::shared_ptr<const Image> image, InputStream input, Limits limits = {});

  // Runs to CleanExit, Crash, Hang or InputExhaustedExit. Call once.
  ExecutionReport run();

  // Runs only the entry function until its first yield, return or halt.
  // Returns the crash if one happened.
  std::optional<CrashRecord> run_entry_init();
  // Invokes `fn` once as a fresh context on a copy of the current state and
  // reports whether it crashed. Does not modify *this.
  std::optional<CrashRecord> probe_call(std::string_view fn) const;

  void disable_isrs(const std::set<std::string>& names);

  // Task names in scheduling order (priority descending, declaration order on ties).
  std::vector<std::string> ready_queue() const;

  uint32_t read_word(uint32_t addr) const;
  bool word_tainted(uint32_t addr) const;
  std::span<const uint8_t> globals_memory() const { return globals_; }
  const InputStream& input() const { return input_; }
  uint64_t instructions_executed() const { return executed_; }

  // Taint bit of a local in the innermost frame of the current context.
  std::optional<Value> local_value(std::string_view name) const;

 private:
  enum class CtxState : uint8_t { kReady, kDelayed, kFinished };
  struct Frame {
    int32_t fn = -1;
    uint32_t block = 0;
    uint32_t ip = 0;
    int32_t ret_slot = -1;
    const CBlock* code = nullptr;  // blocks[block] of fn
    std::vector<Value> slots;
  };
  struct Context {
    std::string name;
    uint32_t priority = 0;
    int32_t function = -1;
    CtxState state = CtxState::kReady;
    std::vector<Frame> frames;
    uint64_t last_run = 0;
    bool started = false;
  };
  enum class Step : uint8_t { kContinue, kYield, kFinished, kHalt, kCrash };
  // Innermost frames kept with each tainted branch for the hang-site stack.
  static constexpr size_t kHangStackFrames = 16;
  struct TaintedBranch {
    int32_t fn;
    uint32_t block;
    uint32_t index;
    uint32_t depth;
    uint64_t at;
    std::array<int32_t, kHangStackFrames> callers;  // innermost first
  };

  Step step();
  Step exec_call(Frame& f, const CInstr& ins);
  Step exec_builtin(Frame& f, const CInstr& ins);
  bool enter_function(Context& ctx, int32_t fn, std::vector<Value> args, int32_t ret_slot);
  void enter_block(Frame& f, uint32_t block);
  Value eval(const Frame& f, int32_t expr);
  Value eval_binary(const Frame& f, const CExpr& e);
  Value buffer_value(const Frame& f, const CBuffer& b) const;

  bool mem_read(uint32_t addr, uint32_t width, Value& out);
  bool mem_write(uint32_t addr, uint32_t width, const Value& v);
  uint8_t* byte_ptr(uint32_t addr, uint32_t width);
  const uint8_t* byte_ptr(uint32_t addr, uint32_t width) const;
  uint8_t* shadow_ptr(uint32_t addr);
  const uint8_t* shadow_ptr(uint32_t addr) const;

  void crash(CrashKind kind, std::string detail);
  void record_tainted_branch(const Frame& f);
  std::optional<HangSite> hang_site() const;
  std::vector<std::string> stack_names(int32_t ctx) const;

  int32_t pick_next();
  void tick();
  ExecutionReport finish(Outcome o);
  std::optional<CrashRecord> run_single(int32_t ctx);

  std::shared_ptr<const Image> image_;
  InputStream input_;
  Limits limits_;

  std::vector<uint8_t> globals_, globals_taint_;
  std::vector<uint8_t> stacks_, stacks_taint_;
  std::vector<uint8_t> heap_, heap_taint_;
  uint32_t heap_top_ = 0;

  std::vector<Context> contexts_;
  int32_t current_ = 0;
  bool entry_phase_ = true;
  uint64_t executed_ = 0;
  uint32_t since_tick_ = 0;
  uint64_t dispatch_stamp_ = 0;
  std::vector<bool> isr_disabled_;

  std::optional<CrashRecord> crash_;
  bool fault_ = false;
  CoverageMap coverage_;
  std::array<TaintedBranch, 64> recent_{};
  size_t recent_count_ = 0;
};

ExecutionReport run_program(std::shared_ptr<const Image> image, std::vector<uint8_t> input,
                            Limits limits = {}, const std::set<std::string>& disabled = {});

// Runs the entry to its first yield on zero input, then invokes each ISR once
// on a copy of that state. ISRs whose invocation crashes are returned.
std::set<std::string> calibrate_isrs(std::shared_ptr<const Image> image, Limits limits = {});

}  // namespace rehost::vm
