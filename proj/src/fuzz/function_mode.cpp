#include "rehost/fuzz/function_mode.hpp"

#include <map>
#include <set>

#include "rehost/fir/parser.hpp"

namespace rehost::fuzz {

using fir::BinOp;
using fir::Expr;
using fir::Function;
using fir::Instruction;
using Op = fir::Instruction::Op;

std::string format_arg_specs(const std::vector<ArgSpec>& specs) {
  std::string out = "{";
  for (size_t i = 0; i < specs.size(); ++i) {
    if (i) out += ", ";
    const auto& s = specs[i];
    out += s.param + ": ";
    if (s.kind == ArgSpec::Kind::kInt) {
      out += "Int";
    } else if (s.size_of) {
      out += "Array SIZE " + *s.size_of;
    } else {
      out += "Array Fixed(" + std::to_string(s.fixed) + ")";
    }
  }
  return out + "}";
}

namespace {

bool mentions(const Expr& e, const std::string& name) {
  switch (e.kind) {
    case Expr::Kind::kInt:
      return false;
    case Expr::Kind::kName:
      return e.name == name;
    case Expr::Kind::kBinary:
      return mentions(e.operands[0], name) || mentions(e.operands[1], name);
  }
  return false;
}

// Blocks that lie on a CFG cycle.
std::set<uint32_t> loop_blocks(const Function& fn) {
  const auto n = static_cast<uint32_t>(fn.blocks.size());
  std::vector<std::vector<uint32_t>> succ(n);
  for (uint32_t b = 0; b < n; ++b) {
    const auto& t = fn.blocks[b].instructions.back();
    if (t.op == Op::kJump) succ[b] = {t.target};
    if (t.op == Op::kBranch) succ[b] = {t.target, t.else_target};
  }
  std::set<uint32_t> out;
  for (uint32_t start = 0; start < n; ++start) {
    std::vector<bool> seen(n, false);
    std::vector<uint32_t> stack(succ[start].begin(), succ[start].end());
    while (!stack.empty()) {
      uint32_t b = stack.back();
      stack.pop_back();
      if (b == start) {
        out.insert(start);
        break;
      }
      if (seen[b]) continue;
      seen[b] = true;
      for (uint32_t s : succ[b]) stack.push_back(s);
    }
  }
  return out;
}

}  // namespace

std::vector<ArgSpec> infer_arg_specs(const fir::Program& p, const std::string& fname) {
  const Function* fn = p.find_function(fname);
  if (!fn) throw std::invalid_argument("undefined function '" + fname + "'");

  std::set<std::string> word_params;
  bool any_buffer = false;
  for (const auto& prm : fn->params) {
    if (prm.type == fir::ParamType::kBuffer) {
      any_buffer = true;
    } else {
      word_params.insert(prm.name);
    }
  }
  if (!any_buffer) throw NoBufferParams("function '" + fname + "' has no buffer parameters");

  const auto loops = loop_blocks(*fn);
  // Induction variables: locals redefined in terms of themselves.
  std::set<std::string> induction;
  // Condition local -> (induction candidate, bound parameter).
  std::map<std::string, std::pair<std::string, std::string>> guards;
  std::set<std::string> loop_conditions;
  for (uint32_t b = 0; b < fn->blocks.size(); ++b) {
    for (const auto& ins : fn->blocks[b].instructions) {
      if ((ins.op == Op::kLet && mentions(ins.a, ins.dst)) ||
          (ins.op == Op::kBinOp && (mentions(ins.a, ins.dst) || mentions(ins.b, ins.dst)))) {
        induction.insert(ins.dst);
      }
      if (ins.op == Op::kBinOp && (ins.binop == BinOp::kUlt || ins.binop == BinOp::kUle) &&
          ins.a.is_name() && ins.b.is_name() && word_params.count(ins.b.name)) {
        guards[ins.dst] = {ins.a.name, ins.b.name};
      }
      if (ins.op == Op::kBranch && ins.a.is_name() && loops.count(b)) {
        loop_conditions.insert(ins.a.name);
      }
    }
  }
  // Bound parameter per loop induction variable.
  std::map<std::string, std::set<std::string>> bounds;
  for (const auto& [cond, guard] : guards) {
    if (loop_conditions.count(cond) && induction.count(guard.first)) {
      bounds[guard.first].insert(guard.second);
    }
  }

  std::map<std::string, std::set<std::string>> sized_by;  // buffer param -> size params
  for (const auto& bb : fn->blocks) {
    for (const auto& ins : bb.instructions) {
      if (ins.op == Op::kIndex || ins.op == Op::kIndexStore) {
        for (const auto& [var, ns] : bounds) {
          if (mentions(ins.a, var)) sized_by[ins.buffer].insert(ns.begin(), ns.end());
        }
      }
      if (ins.op == Op::kCall && ins.callee == fir::builtin::kCopy && ins.args.size() == 3 &&
          ins.args[2].is_name() && word_params.count(ins.args[2].name)) {
        for (int k = 0; k < 2; ++k) {
          if (ins.args[k].is_name()) sized_by[ins.args[k].name].insert(ins.args[2].name);
        }
      }
    }
  }

  std::vector<ArgSpec> specs;
  for (const auto& prm : fn->params) {
    ArgSpec s;
    s.param = prm.name;
    if (prm.type == fir::ParamType::kBuffer) {
      s.kind = ArgSpec::Kind::kArray;
      auto it = sized_by.find(prm.name);
      if (it != sized_by.end()) {
        for (const auto& q : fn->params) {
          if (it->second.count(q.name)) {
            s.size_of = q.name;
            break;
          }
        }
      }
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

namespace {

class HarnessBuilder {
 public:
  uint32_t current() const { return static_cast<uint32_t>(fn_.blocks.size() - 1); }
  uint32_t new_block() {
    fn_.blocks.emplace_back();
    return current();
  }
  void emit(Instruction ins) { fn_.blocks.back().instructions.push_back(std::move(ins)); }

  void let(const std::string& dst, Expr e) {
    Instruction i;
    i.op = Op::kLet;
    i.dst = dst;
    i.a = std::move(e);
    emit(std::move(i));
  }
  void input(const std::string& dst, uint32_t width) {
    Instruction i;
    i.op = Op::kCall;
    i.dst = dst;
    i.callee = std::string(fir::builtin::kInput);
    i.args = {Expr::integer(width)};
    emit(std::move(i));
  }
  void binop(const std::string& dst, BinOp op, Expr a, Expr b) {
    Instruction i;
    i.op = Op::kBinOp;
    i.dst = dst;
    i.binop = op;
    i.a = std::move(a);
    i.b = std::move(b);
    emit(std::move(i));
  }
  void jump(uint32_t t) {
    Instruction i;
    i.op = Op::kJump;
    i.target = t;
    emit(std::move(i));
  }

  // alloc `len` words into buf and fill each from a 4-byte input read.
  void alloc_and_fill(const std::string& tag, const std::string& buf, Expr len) {
    Instruction a;
    a.op = Op::kAlloc;
    a.dst = buf;
    a.a = len;
    emit(std::move(a));
    const std::string i = "__i_" + tag, c = "__c_" + tag, v = "__v_" + tag;
    let(i, Expr::integer(0));
    const uint32_t head = current() + 1;
    jump(head);
    new_block();
    binop(c, BinOp::kUlt, Expr::ref(i), len);
    Instruction br;
    br.op = Op::kBranch;
    br.a = Expr::ref(c);
    br.target = head + 1;
    br.else_target = head + 2;
    emit(std::move(br));
    new_block();
    input(v, 4);
    Instruction st;
    st.op = Op::kIndexStore;
    st.buffer = buf;
    st.a = Expr::ref(i);
    st.b = Expr::ref(v);
    emit(std::move(st));
    let(i, Expr::binary(BinOp::kAdd, Expr::ref(i), Expr::integer(1)));
    jump(head);
    new_block();
  }

  Function fn_;
};

}  // namespace

fir::Program build_fn_harness(const fir::Program& p, const std::string& fname,
                              const std::vector<ArgSpec>& specs) {
  const Function* target = p.find_function(fname);
  if (!target) throw SpecMismatch("undefined function '" + fname + "'");
  if (p.find_function(kHarnessName)) {
    throw SpecMismatch("program already defines '" + std::string(kHarnessName) + "'");
  }
  if (specs.size() != target->params.size()) {
    throw SpecMismatch("expected " + std::to_string(target->params.size()) + " specs, got " +
                       std::to_string(specs.size()));
  }
  std::map<std::string, const ArgSpec*> by_name;
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& prm = target->params[i];
    const auto& s = specs[i];
    if (s.param != prm.name) throw SpecMismatch("spec " + std::to_string(i) + " names '" + s.param + "'");
    const bool is_buf = prm.type == fir::ParamType::kBuffer;
    if (is_buf != (s.kind == ArgSpec::Kind::kArray)) {
      throw SpecMismatch("spec kind of '" + s.param + "' does not match its type");
    }
    by_name[s.param] = &s;
  }
  std::set<std::string> size_params;
  for (const auto& s : specs) {
    if (!s.size_of) continue;
    auto it = by_name.find(*s.size_of);
    if (it == by_name.end() || *s.size_of == s.param || it->second->kind != ArgSpec::Kind::kInt) {
      throw SpecMismatch("'" + s.param + "' is sized by '" + *s.size_of +
                         "', which is not another word parameter");
    }
    size_params.insert(*s.size_of);
  }

  HarnessBuilder hb;
  hb.fn_.name = std::string(kHarnessName);
  hb.new_block();
  std::map<std::string, std::string> arg_local;
  for (const auto& s : specs) {
    if (s.kind != ArgSpec::Kind::kArray || !s.size_of) continue;
    const std::string len = "__len_" + *s.size_of;
    if (!arg_local.count(*s.size_of)) {
      hb.input("__s_" + *s.size_of, 1);
      hb.binop(len, BinOp::kMod, Expr::ref("__s_" + *s.size_of), Expr::integer(kArraySizeModulus));
      arg_local[*s.size_of] = len;
    }
    arg_local[s.param] = "__buf_" + s.param;
    hb.alloc_and_fill(s.param, "__buf_" + s.param, Expr::ref(len));
  }
  for (const auto& s : specs) {
    if (s.kind != ArgSpec::Kind::kArray || s.size_of) continue;
    arg_local[s.param] = "__buf_" + s.param;
    hb.alloc_and_fill(s.param, "__buf_" + s.param, Expr::integer(s.fixed));
  }
  for (const auto& s : specs) {
    if (s.kind != ArgSpec::Kind::kInt || size_params.count(s.param)) continue;
    arg_local[s.param] = "__arg_" + s.param;
    hb.input("__arg_" + s.param, 4);
  }
  Instruction call;
  call.op = Op::kCall;
  call.callee = fname;
  for (const auto& s : specs) call.args.push_back(Expr::ref(arg_local.at(s.param)));
  hb.emit(std::move(call));
  Instruction halt;
  halt.op = Op::kHalt;
  hb.emit(std::move(halt));

  fir::Program out = p;
  out.tasks.clear();
  out.vector_table.clear();
  for (auto& [name, f] : out.functions) f.is_isr = false;
  out.functions.emplace(hb.fn_.name, std::move(hb.fn_));
  out.entry = std::string(kHarnessName);
  fir::validate_program(out);
  return out;
}

FunctionCampaign fuzz_function(const fir::Program& p, const std::string& fname,
                               const FuzzOptions& opts, const xform::PipelineOptions* pipeline) {
  FunctionCampaign fc;
  fc.specs = infer_arg_specs(p, fname);
  const fir::Program harness = build_fn_harness(p, fname, fc.specs);
  xform::PipelineOptions po = pipeline ? *pipeline : xform::PipelineOptions{};
  po.dispatcher = false;
  fc.ip = xform::run_pipeline(harness, po);
  fc.campaign = fuzz_whole(fc.ip, {}, opts);
  return fc;
}

}  // namespace rehost::fuzz
