#include "rehost/vm/vm.hpp"

#include <algorithm>
#include <cstring>

namespace rehost::vm {

using Op = fir::Instruction::Op;

uint32_t InputStream::read(uint32_t width) {
  uint32_t v = 0;
  for (uint32_t i = 0; i < width; ++i) {
    uint8_t byte = 0;
    if (cursor_ < bytes_.size()) {
      byte = bytes_[cursor_++];
    } else {
      exhausted_ = true;
    }
    v |= static_cast<uint32_t>(byte) << (8 * i);
  }
  return v;
}

namespace {

Value word(Value v) {
  v.is_buf = false;
  v.len = 0;
  return v;
}

bool is_division(fir::BinOp op) { return op == fir::BinOp::kDiv || op == fir::BinOp::kMod; }

}  // namespace

Vm::Vm(std::shared_ptr<const Image> image, InputStream input, Limits limits)
    : image_(std::move(image)), input_(std::move(input)), limits_(limits) {
  const auto& layout = image_->layout;
  globals_.assign(layout.globals_segment().size, 0);
  globals_taint_.assign(globals_.size(), 0);
  uint32_t stack_bytes = 0;
  for (const auto* s : layout.stack_regions()) stack_bytes += s->size;
  stacks_.assign(stack_bytes, 0);
  stacks_taint_.assign(stack_bytes, 0);

  for (const auto& [addr, value] : image_->initial_words) {
    uint8_t* p = byte_ptr(addr, 4);
    for (int i = 0; i < 4; ++i) p[i] = static_cast<uint8_t>(value >> (8 * i));
  }

  Context entry;
  entry.function = image_->entry;
  contexts_.push_back(std::move(entry));
  for (const auto& t : image_->tasks) {
    Context c;
    c.name = t.name;
    c.priority = t.priority;
    c.function = t.function;
    contexts_.push_back(std::move(c));
  }
  isr_disabled_.assign(image_->vector_table.size(), false);
}

void Vm::disable_isrs(const std::set<std::string>& names) {
  for (size_t k = 0; k < image_->vector_table.size(); ++k) {
    if (names.count(image_->functions[image_->vector_table[k]].name)) isr_disabled_[k] = true;
  }
}

std::vector<std::string> Vm::ready_queue() const {
  std::vector<const Context*> tasks;
  for (size_t i = 1; i < contexts_.size(); ++i) {
    if (contexts_[i].state == CtxState::kReady) tasks.push_back(&contexts_[i]);
  }
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const Context* a, const Context* b) { return a->priority > b->priority; });
  std::vector<std::string> out;
  for (const auto* t : tasks) out.push_back(t->name);
  return out;
}

uint8_t* Vm::byte_ptr(uint32_t addr, uint32_t width) {
  return const_cast<uint8_t*>(static_cast<const Vm*>(this)->byte_ptr(addr, width));
}

const uint8_t* Vm::byte_ptr(uint32_t addr, uint32_t width) const {
  const auto& layout = image_->layout;
  const uint64_t end = static_cast<uint64_t>(addr) + width;
  const uint32_t gb = layout.globals_base;
  if (addr >= gb && end <= gb + static_cast<uint64_t>(globals_.size())) return &globals_[addr - gb];
  const uint32_t sb = layout.stacks_base;
  if (addr >= sb && end <= sb + static_cast<uint64_t>(stacks_.size())) return &stacks_[addr - sb];
  const uint32_t hb = layout.heap_base;
  if (addr >= hb && end <= hb + static_cast<uint64_t>(heap_top_)) return &heap_[addr - hb];
  return nullptr;
}

uint8_t* Vm::shadow_ptr(uint32_t addr) {
  return const_cast<uint8_t*>(static_cast<const Vm*>(this)->shadow_ptr(addr));
}

const uint8_t* Vm::shadow_ptr(uint32_t addr) const {
  const auto& layout = image_->layout;
  if (addr >= layout.globals_base && addr - layout.globals_base < globals_.size()) {
    return &globals_taint_[addr - layout.globals_base];
  }
  if (addr >= layout.stacks_base && addr - layout.stacks_base < stacks_.size()) {
    return &stacks_taint_[addr - layout.stacks_base];
  }
  return &heap_taint_[addr - layout.heap_base];
}

uint32_t Vm::read_word(uint32_t addr) const {
  const uint8_t* p = byte_ptr(addr, 4);
  if (!p) return 0;
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

bool Vm::word_tainted(uint32_t addr) const {
  if (!byte_ptr(addr, 4)) return false;
  const uint8_t* s = shadow_ptr(addr);
  return (s[0] | s[1] | s[2] | s[3]) != 0;
}

std::optional<Value> Vm::local_value(std::string_view name) const {
  if (current_ < 0 || contexts_[current_].frames.empty()) return std::nullopt;
  const Frame& f = contexts_[current_].frames.back();
  const auto& names = image_->functions[f.fn].slot_names;
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return f.slots[i];
  }
  return std::nullopt;
}

std::vector<std::string> Vm::stack_names(int32_t ctx) const {
  std::vector<std::string> out;
  const auto& frames = contexts_[ctx].frames;
  for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
    out.push_back(image_->functions[it->fn].name);
  }
  return out;
}

void Vm::crash(CrashKind kind, std::string detail) {
  const Frame& f = contexts_[current_].frames.back();
  CrashRecord c;
  c.kind = kind;
  c.function = image_->functions[f.fn].name;
  c.block = f.block;
  c.index = f.ip;
  c.stack = stack_names(current_);
  c.detail = std::move(detail);
  crash_ = std::move(c);
  fault_ = true;
}

bool Vm::mem_read(uint32_t addr, uint32_t width, Value& out) {
  if (addr < kNullPageEnd) {
    crash(CrashKind::kNullDeref, "read of the null page");
    crash_->address = addr;
    return false;
  }
  if (image_->mmio_map.contains(addr)) {
    out = Value{input_.read(width), 0, true, false};
    return true;
  }
  const uint8_t* p = byte_ptr(addr, width);
  if (!p) {
    crash(CrashKind::kUnmappedAccess, "read outside every segment and the MMIO map");
    crash_->address = addr;
    return false;
  }
  const uint8_t* s = shadow_ptr(addr);
  uint32_t v = 0;
  bool t = false;
  for (uint32_t i = 0; i < width; ++i) {
    v |= static_cast<uint32_t>(p[i]) << (8 * i);
    t |= s[i] != 0;
  }
  out = Value{v, 0, t, false};
  return true;
}

bool Vm::mem_write(uint32_t addr, uint32_t width, const Value& v) {
  if (addr < kNullPageEnd) {
    crash(CrashKind::kNullDeref, "write to the null page");
    crash_->address = addr;
    return false;
  }
  if (image_->mmio_map.contains(addr)) return true;
  uint8_t* p = byte_ptr(addr, width);
  if (!p) {
    crash(CrashKind::kUnmappedAccess, "write outside every segment and the MMIO map");
    crash_->address = addr;
    return false;
  }
  uint8_t* s = shadow_ptr(addr);
  for (uint32_t i = 0; i < width; ++i) {
    p[i] = static_cast<uint8_t>(v.bits >> (8 * i));
    s[i] = v.taint ? 1 : 0;
  }
  return true;
}

inline Value Vm::eval(const Frame& f, int32_t idx) {
  const CExpr& e = image_->exprs[idx];
  if (e.kind == CExpr::Kind::kLocal) return f.slots[e.slot];
  if (e.kind == CExpr::Kind::kConst) return Value{e.value, 0, false, false};
  return eval_binary(f, e);
}

Value Vm::eval_binary(const Frame& f, const CExpr& e) {
  Value l = eval(f, e.lhs);
  if (fault_) return {};
  Value r = eval(f, e.rhs);
  if (fault_) return {};
  if (is_division(e.op) && r.bits == 0) {
    crash(CrashKind::kDivByZero, "division by zero");
    crash_->dividend = l.bits;
    return {};
  }
  return Value{fir::eval_binop(e.op, l.bits, r.bits), 0, l.taint || r.taint, false};
}

Value Vm::buffer_value(const Frame& f, const CBuffer& b) const {
  if (b.slot >= 0) return f.slots[b.slot];
  return Value{b.base, b.elements, false, true};
}

void Vm::enter_block(Frame& f, uint32_t block) {
  f.block = block;
  f.ip = 0;
  f.code = &image_->functions[f.fn].blocks[block];
  const int32_t probe = f.code->probe;
  if (probe >= 0) coverage_.set(static_cast<size_t>(probe));
}

bool Vm::enter_function(Context& ctx, int32_t fn, std::vector<Value> args, int32_t ret_slot) {
  if (ctx.frames.size() >= limits_.max_call_depth) {
    crash(CrashKind::kOobWrite, "call depth exceeds " + std::to_string(limits_.max_call_depth) +
                                    ": stack region exhausted");
    const auto regions = image_->layout.stack_regions();
    const size_t r = static_cast<size_t>(current_) < regions.size() ? current_ : 0;
    crash_->address = regions[r]->base;
    return false;
  }
  const CFunction& cf = image_->functions[fn];
  Frame fr;
  fr.fn = fn;
  fr.ret_slot = ret_slot;
  fr.slots.resize(cf.slot_count);
  for (size_t i = 0; i < args.size() && i < cf.param_slots.size(); ++i) {
    fr.slots[cf.param_slots[i]] = cf.param_is_buffer[i] ? args[i] : word(args[i]);
  }
  ctx.frames.push_back(std::move(fr));
  enter_block(ctx.frames.back(), 0);
  return true;
}

void Vm::record_tainted_branch(const Frame& f) {
  const auto& frames = contexts_[current_].frames;
  TaintedBranch& t = recent_[recent_count_ % recent_.size()];
  t = TaintedBranch{f.fn, f.block, f.ip, static_cast<uint32_t>(frames.size()), executed_, {}};
  const size_t keep = std::min(frames.size(), kHangStackFrames);
  for (size_t i = 0; i < keep; ++i) t.callers[i] = frames[frames.size() - 1 - i].fn;
  ++recent_count_;
}

std::optional<HangSite> Vm::hang_site() const {
  const TaintedBranch* best = nullptr;
  const size_t n = std::min(recent_count_, recent_.size());
  auto key = [this](const TaintedBranch& b) {
    return std::make_tuple(image_->functions[b.fn].name, b.block, b.index);
  };
  for (size_t i = 0; i < n; ++i) {
    const auto& b = recent_[i];
    if (b.at + kHangWindow < executed_) continue;
    if (!best || b.depth > best->depth || (b.depth == best->depth && key(b) < key(*best))) best = &b;
  }
  if (!best) return std::nullopt;
  HangSite h{image_->functions[best->fn].name, best->block, best->index, {}};
  const size_t keep = std::min<size_t>(best->depth, kHangStackFrames);
  for (size_t i = 0; i < keep; ++i) h.stack.push_back(image_->functions[best->callers[i]].name);
  return h;
}

Vm::Step Vm::exec_builtin(Frame& f, const CInstr& ins) {
  auto arg = [&](size_t i) { return eval(f, ins.args[i]); };
  switch (ins.builtin) {
    case Builtin::kYield:
      ++f.ip;
      return Step::kYield;
    case Builtin::kInput: {
      uint32_t w = arg(0).bits;
      if (ins.dst >= 0) f.slots[ins.dst] = Value{input_.read(w), 0, false, false};
      else input_.read(w);
      ++f.ip;
      return Step::kContinue;
    }
    case Builtin::kIsrEnabled: {
      uint32_t k = arg(0).bits;
      bool on = k < isr_disabled_.size() && !isr_disabled_[k];
      if (ins.dst >= 0) f.slots[ins.dst] = Value{on ? 1u : 0u, 0, false, false};
      ++f.ip;
      return Step::kContinue;
    }
    case Builtin::kMmioLoad: {
      Value addr = arg(0);
      if (fault_) return Step::kCrash;
      Value out;
      if (!mem_read(addr.bits, arg(1).bits, out)) return Step::kCrash;
      if (ins.dst >= 0) f.slots[ins.dst] = out;
      ++f.ip;
      return Step::kContinue;
    }
    case Builtin::kMmioStore: {
      Value addr = arg(0);
      if (fault_) return Step::kCrash;
      Value v = arg(1);
      if (fault_) return Step::kCrash;
      if (!mem_write(addr.bits, arg(2).bits, v)) return Step::kCrash;
      ++f.ip;
      return Step::kContinue;
    }
    case Builtin::kCopy: {
      Value dst = buffer_value(f, ins.buffer_args[ins.args[0]]);
      Value src = buffer_value(f, ins.buffer_args[ins.args[1]]);
      Value n = arg(2);
      if (fault_) return Step::kCrash;
      if (n.bits > src.len) {
        crash(CrashKind::kOobRead, "copy reads past the source buffer");
        crash_->length = src.len;
        crash_->attempted_index = src.len;
        return Step::kCrash;
      }
      if (n.bits > dst.len) {
        crash(CrashKind::kOobWrite, "copy writes past the destination buffer");
        crash_->length = dst.len;
        crash_->attempted_index = dst.len;
        return Step::kCrash;
      }
      if (n.bits > 0) {
        const uint32_t bytes = 4 * n.bits;
        std::memmove(byte_ptr(dst.bits, bytes), byte_ptr(src.bits, bytes), bytes);
        std::memmove(shadow_ptr(dst.bits), shadow_ptr(src.bits), bytes);
      }
      ++f.ip;
      return Step::kContinue;
    }
    case Builtin::kNone:
      break;
  }
  return Step::kContinue;
}

Vm::Step Vm::exec_call(Frame& f, const CInstr& ins) {
  if (ins.builtin != Builtin::kNone) return exec_builtin(f, ins);
  std::vector<Value> args;
  args.reserve(ins.args.size());
  for (size_t i = 0; i < ins.args.size(); ++i) {
    if (ins.arg_is_buffer[i]) {
      args.push_back(buffer_value(f, ins.buffer_args[ins.args[i]]));
    } else {
      args.push_back(eval(f, ins.args[i]));
      if (fault_) return Step::kCrash;
    }
  }
  Context& ctx = contexts_[current_];
  if (ctx.frames.size() >= limits_.max_call_depth) {
    enter_function(ctx, ins.callee, {}, -1);
    return Step::kCrash;
  }
  ++f.ip;
  enter_function(ctx, ins.callee, std::move(args), ins.dst);
  return Step::kContinue;
}

Vm::Step Vm::step() {
  Context& ctx = contexts_[current_];
  Frame& f = ctx.frames.back();
  const CInstr& ins = f.code->instrs[f.ip];
  switch (ins.op) {
    case Op::kLet: {
      Value v = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      f.slots[ins.dst] = word(v);
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kBinOp: {
      Value l = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      Value r = eval(f, ins.b);
      if (fault_) return Step::kCrash;
      if (is_division(ins.binop) && r.bits == 0) {
        crash(CrashKind::kDivByZero, std::string(fir::binop_mnemonic(ins.binop)) + " by zero");
        crash_->dividend = l.bits;
        return Step::kCrash;
      }
      f.slots[ins.dst] = Value{fir::eval_binop(ins.binop, l.bits, r.bits), 0, l.taint || r.taint, false};
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kLoad: {
      Value addr = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      Value out;
      if (!mem_read(addr.bits, ins.width, out)) return Step::kCrash;
      f.slots[ins.dst] = out;
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kStore: {
      Value addr = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      Value v = eval(f, ins.b);
      if (fault_) return Step::kCrash;
      if (!mem_write(addr.bits, ins.width, v)) return Step::kCrash;
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kIndex: {
      Value buf = buffer_value(f, ins.buffer);
      Value idx = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      if (idx.bits >= buf.len) {
        crash(CrashKind::kOobRead, "index past the end of the buffer");
        crash_->length = buf.len;
        crash_->attempted_index = idx.bits;
        return Step::kCrash;
      }
      Value out;
      if (!mem_read(buf.bits + 4 * idx.bits, 4, out)) return Step::kCrash;
      f.slots[ins.dst] = out;
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kIndexStore: {
      Value buf = buffer_value(f, ins.buffer);
      Value idx = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      Value v = eval(f, ins.b);
      if (fault_) return Step::kCrash;
      if (idx.bits >= buf.len) {
        crash(CrashKind::kOobWrite, "index past the end of the buffer");
        crash_->length = buf.len;
        crash_->attempted_index = idx.bits;
        return Step::kCrash;
      }
      if (!mem_write(buf.bits + 4 * idx.bits, 4, v)) return Step::kCrash;
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kAlloc: {
      Value n = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      const uint64_t bytes = 4ull * n.bits;
      const uint32_t cap = image_->layout.heap_segment().size;
      if (heap_top_ + bytes > cap) {
        crash(CrashKind::kOobWrite, "heap exhausted");
        crash_->address = image_->layout.heap_base + heap_top_;
        crash_->length = n.bits;
        return Step::kCrash;
      }
      const uint32_t base = image_->layout.heap_base + heap_top_;
      heap_top_ += static_cast<uint32_t>(bytes);
      heap_.resize(heap_top_, 0);
      heap_taint_.resize(heap_top_, 0);
      f.slots[ins.dst] = Value{base, n.bits, false, true};
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kCall:
      return exec_call(f, ins);
    case Op::kBranch: {
      Value c = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      bool taken = c.bits != 0;
      if (c.taint) {
        record_tainted_branch(f);
        if (ins.weakened) taken ^= (input_.read(1) & 1u) != 0;
      }
      enter_block(f, taken ? ins.target : ins.else_target);
      return Step::kContinue;
    }
    case Op::kJump:
      enter_block(f, ins.target);
      return Step::kContinue;
    case Op::kReturn: {
      Value v = ins.has_value ? eval(f, ins.a) : Value{};
      if (fault_) return Step::kCrash;
      const int32_t ret = f.ret_slot;
      ctx.frames.pop_back();
      if (ctx.frames.empty()) return Step::kFinished;
      if (ret >= 0) ctx.frames.back().slots[ret] = word(v);
      return Step::kContinue;
    }
    case Op::kAsm:
      for (int32_t o : ins.outputs) f.slots[o] = Value{};
      ++f.ip;
      return Step::kContinue;
    case Op::kAssert: {
      Value c = eval(f, ins.a);
      if (fault_) return Step::kCrash;
      if (c.bits == 0) {
        crash(CrashKind::kAssertFail, "assertion failed");
        return Step::kCrash;
      }
      ++f.ip;
      return Step::kContinue;
    }
    case Op::kHalt:
      return Step::kHalt;
  }
  return Step::kContinue;
}

int32_t Vm::pick_next() {
  int32_t best = -1;
  for (size_t i = 0; i < contexts_.size(); ++i) {
    const Context& c = contexts_[i];
    if (c.state != CtxState::kReady) continue;
    if (best < 0) {
      best = static_cast<int32_t>(i);
      continue;
    }
    const Context& b = contexts_[best];
    if (c.priority > b.priority || (c.priority == b.priority && c.last_run < b.last_run)) {
      best = static_cast<int32_t>(i);
    }
  }
  if (best >= 0) contexts_[best].last_run = ++dispatch_stamp_;
  return best;
}

void Vm::tick() {
  since_tick_ = 0;
  for (auto& c : contexts_) {
    if (c.state == CtxState::kDelayed) c.state = CtxState::kReady;
  }
  current_ = -1;
}

ExecutionReport Vm::finish(Outcome o) {
  ExecutionReport r;
  r.outcome = o;
  if (o == Outcome::kCrash) r.crash = crash_;
  if (o == Outcome::kHang) r.hang_site = hang_site();
  r.coverage = coverage_;
  r.instructions_executed = executed_;
  r.bytes_consumed = input_.cursor();
  r.input_exhausted = input_.exhausted();
  for (size_t k = 0; k < isr_disabled_.size(); ++k) {
    if (isr_disabled_[k]) r.disabled_isrs.insert(image_->functions[image_->vector_table[k]].name);
  }
  return r;
}

ExecutionReport Vm::run() {
  current_ = 0;
  entry_phase_ = true;
  while (true) {
    if (current_ < 0) {
      current_ = pick_next();
      if (current_ < 0) {
        const bool any_delayed = std::any_of(contexts_.begin(), contexts_.end(), [](const Context& c) {
          return c.state == CtxState::kDelayed;
        });
        if (!any_delayed) return finish(Outcome::kCleanExit);
        tick();
        continue;
      }
    }
    if (executed_ >= limits_.instruction_budget) return finish(Outcome::kHang);
    Context& ctx = contexts_[current_];
    if (!ctx.started) {
      ctx.started = true;
      enter_function(ctx, ctx.function, {}, -1);
    }
    const Step s = step();
    ++executed_;
    switch (s) {
      case Step::kCrash:
        return finish(Outcome::kCrash);
      case Step::kHalt:
        return finish(Outcome::kCleanExit);
      case Step::kYield:
        contexts_[current_].state = CtxState::kDelayed;
        entry_phase_ = false;
        current_ = -1;
        if (input_.remaining() == 0) return finish(Outcome::kInputExhaustedExit);
        break;
      case Step::kFinished:
        contexts_[current_].state = CtxState::kFinished;
        entry_phase_ = false;
        current_ = -1;
        break;
      case Step::kContinue:
        break;
    }
    if (!entry_phase_ && ++since_tick_ >= kTickQuantum) tick();
  }
}

std::optional<CrashRecord> Vm::run_single(int32_t ctx_index) {
  current_ = ctx_index;
  Context& ctx = contexts_[ctx_index];
  if (!ctx.started) {
    ctx.started = true;
    enter_function(ctx, ctx.function, {}, -1);
  }
  while (executed_ < limits_.instruction_budget) {
    const Step s = step();
    ++executed_;
    if (s == Step::kCrash) return crash_;
    if (s != Step::kContinue) return std::nullopt;
  }
  return std::nullopt;
}

std::optional<CrashRecord> Vm::run_entry_init() { return run_single(0); }

std::optional<CrashRecord> Vm::probe_call(std::string_view fn) const {
  Vm copy = *this;
  copy.executed_ = 0;
  copy.fault_ = false;
  copy.crash_.reset();
  Context c;
  c.name = std::string(fn);
  c.function = image_->function_index(fn);
  if (c.function < 0) return std::nullopt;
  copy.contexts_.push_back(std::move(c));
  return copy.run_single(static_cast<int32_t>(copy.contexts_.size() - 1));
}

ExecutionReport run_program(std::shared_ptr<const Image> image, std::vector<uint8_t> input,
                            Limits limits, const std::set<std::string>& disabled) {
  Vm vm(std::move(image), InputStream(std::move(input)), limits);
  vm.disable_isrs(disabled);
  return vm.run();
}

std::set<std::string> calibrate_isrs(std::shared_ptr<const Image> image, Limits limits) {
  std::set<std::string> disabled;
  if (image->vector_table.empty()) return disabled;
  Vm vm(image, InputStream{}, limits);
  vm.run_entry_init();
  for (int32_t fn : image->vector_table) {
    const std::string& name = image->functions[fn].name;
    if (vm.probe_call(name)) disabled.insert(name);
  }
  return disabled;
}

}  // namespace rehost::vm
