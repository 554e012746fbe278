#include "progen.hpp"

#include <random>
#include <sstream>
#include <vector>

namespace rehost::test {

namespace {

class Gen {
 public:
  Gen(uint64_t seed, const GenOptions& o) : rng_(seed), o_(o) {}

  std::string run() {
    const int n_words = pick(0, 3);
    const int n_bufs = pick(0, 2);
    out_ << "const K0 = " << pick(0, 9) << ";\n";
    out_ << "const K1 = 0x" << std::hex << (rng_() & 0xFFFFFFFF) << std::dec << ";\n";
    if (o_.mmio) out_ << "const DEV = 0x40001000;\n";
    for (int i = 0; i < n_words; ++i) {
      words_.push_back("g" + std::to_string(i));
      out_ << "global g" << i;
      if (coin()) out_ << " = " << pick(0, 100);
      out_ << ";\n";
    }
    for (int i = 0; i < n_bufs; ++i) {
      const int len = pick(1, 6);
      bufs_.push_back({"B" + std::to_string(i), len});
      out_ << "global B" << i << "[" << len << "]";
      if (coin()) out_ << " = " << pick(0, 50);
      out_ << ";\n";
    }
    const int n_fns = pick(0, 3);
    for (int i = 0; i < n_fns; ++i) arity_.push_back(pick(0, 2));
    for (int i = n_fns - 1; i >= 0; --i) {
      emit_function("f" + std::to_string(i), arity_[static_cast<size_t>(i)], i + 1, n_fns, false);
    }
    emit_function("main", 0, 0, n_fns, false);
    int n_tasks = o_.tasks ? pick(0, 2) : 0;
    for (int t = 0; t < n_tasks; ++t) {
      emit_function("t" + std::to_string(t), 0, 0, n_fns, true);
      out_ << "task task" << t << " priority " << pick(1, 3) << " calls t" << t << ";\n";
    }
    out_ << "entry main;\n";
    return out_.str();
  }

 private:
  struct Buf {
    std::string name;
    int len;
  };

  int pick(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<uint64_t>(hi - lo + 1)); }
  bool coin(int one_in = 2) { return pick(1, one_in) == 1; }

  std::string operand() {
    switch (pick(0, 4)) {
      case 0:
        return std::to_string(pick(0, 20));
      case 1:
        return coin() ? "K0" : "K1";
      default:
        return locals_[static_cast<size_t>(pick(0, static_cast<int>(locals_.size()) - 1))];
    }
  }

  std::string expr(int depth = 0) {
    if (depth >= 2 || coin()) return operand();
    static const char* kOps[] = {"+", "-", "*", "&", "|", "^", "<<", ">>"};
    return "(" + expr(depth + 1) + " " + kOps[pick(0, 7)] + " " + expr(depth + 1) + ")";
  }

  std::string fresh_dst() { return "v" + std::to_string(pick(0, 4)); }

  void statement(int callee_lo, int n_fns) {
    const std::string d = fresh_dst();
    switch (pick(0, 11)) {
      case 0:
      case 1:
        out_ << "  " << d << " = " << expr() << ";\n";
        break;
      case 2:
      case 3: {
        static const char* kSafe[] = {"add", "sub", "mul", "and", "or", "xor", "shl",
                                      "shr", "eq",  "ne",  "ult", "ule", "slt"};
        std::string op = kSafe[pick(0, 12)];
        if (o_.crashes && coin(5)) op = coin() ? "div" : "mod";
        out_ << "  " << d << " = " << op << " " << operand() << ", " << operand() << ";\n";
        break;
      }
      case 4:
        if (!words_.empty()) {
          const auto& g = words_[static_cast<size_t>(pick(0, static_cast<int>(words_.size()) - 1))];
          static const char* kLoads[] = {"load", "load1", "load2", "load4"};
          out_ << "  " << d << " = " << kLoads[pick(0, 3)] << " " << g << ";\n";
        }
        break;
      case 5:
        if (!words_.empty()) {
          const auto& g = words_[static_cast<size_t>(pick(0, static_cast<int>(words_.size()) - 1))];
          static const char* kStores[] = {"store", "store1", "store2", "store4"};
          out_ << "  " << kStores[pick(0, 3)] << " " << g << ", " << expr() << ";\n";
        }
        break;
      case 6:
      case 7:
        if (!bufs_.empty()) {
          const auto& b = bufs_[static_cast<size_t>(pick(0, static_cast<int>(bufs_.size()) - 1))];
          const int bound = o_.crashes ? b.len + 1 : b.len;
          const std::string idx = "mod " + operand() + ", " + std::to_string(bound);
          out_ << "  ix = " << idx << ";\n";
          if (coin()) {
            out_ << "  " << d << " = " << b.name << "[ix];\n";
          } else {
            out_ << "  " << b.name << "[ix] = " << expr() << ";\n";
          }
        }
        break;
      case 8:
        out_ << "  " << d << " = call __input(" << (1 << pick(0, 2)) << ");\n";
        break;
      case 9:
        if (callee_lo < n_fns) {
          const int j = pick(callee_lo, n_fns - 1);
          out_ << "  " << (coin() ? d + " = " : "") << "call f" << j << "(";
          for (int a = 0; a < arity_[static_cast<size_t>(j)]; ++a) out_ << (a ? ", " : "") << operand();
          out_ << ");\n";
        }
        break;
      case 10:
        if (o_.crashes && coin(4)) out_ << "  assert " << operand() << ";\n";
        if (o_.asm_blocks) out_ << "  asm \"mrs %0, ipsr\" -> " << d << ";\n";
        break;
      case 11:
        if (o_.mmio) {
          if (coin()) {
            out_ << "  " << d << " = load4 DEV + " << 4 * pick(0, 3) << ";\n";
          } else {
            out_ << "  store4 DEV + " << 4 * pick(0, 3) << ", " << operand() << ";\n";
          }
        }
        break;
    }
  }

  void emit_function(const std::string& name, int params, int callee_lo, int n_fns, bool task) {
    locals_ = {"v0", "v1", "v2", "v3", "v4"};
    out_ << "fn " << name << "(";
    for (int i = 0; i < params; ++i) {
      out_ << (i ? ", " : "") << "p" << i;
      locals_.push_back("p" + std::to_string(i));
    }
    out_ << ") {\n";
    const int n_blocks = pick(1, 5);
    int loops = 0;
    for (int b = 0; b < n_blocks; ++b) {
      out_ << "b" << b << ":\n";
      if (b == 0) {
        for (int v = 0; v < 5; ++v) out_ << "  v" << v << " = " << pick(0, 9) << ";\n";
        if (task) out_ << "  call yield();\n";
      }
      const int n_stmts = pick(0, 4);
      for (int s = 0; s < n_stmts; ++s) statement(callee_lo, n_fns);
      const bool last = b + 1 == n_blocks;
      if (last) {
        if (task) {
          out_ << "  jump b0;\n";
        } else if (name == "main" && coin(4)) {
          out_ << "  halt;\n";
        } else {
          out_ << "  return" << (coin() ? " " + operand() : "") << ";\n";
        }
        continue;
      }
      if (!task && b > 0 && coin(3)) {
        const std::string lc = "lc" + std::to_string(loops++);
        out_ << "  " << lc << " = " << lc << " + 1;\n";
        out_ << "  c_" << lc << " = ult " << lc << ", " << pick(1, 4) << ";\n";
        out_ << "  branch c_" << lc << ", b" << pick(0, b) << ", b" << b + 1 << ";\n";
      } else if (coin()) {
        out_ << "  branch " << operand() << ", b" << pick(b + 1, n_blocks - 1) << ", b"
             << pick(b + 1, n_blocks - 1) << ";\n";
      } else {
        out_ << "  jump b" << pick(b + 1, n_blocks - 1) << ";\n";
      }
    }
    out_ << "}\n";
  }

  std::mt19937_64 rng_;
  GenOptions o_;
  std::ostringstream out_;
  std::vector<std::string> words_;
  std::vector<Buf> bufs_;
  std::vector<std::string> locals_;
  std::vector<int> arity_;
};

}  // namespace

std::string generate_program(uint64_t seed, const GenOptions& opts) { return Gen(seed, opts).run(); }

}  // namespace rehost::test
