#include "rehost/fuzz/campaign.hpp"

#include <chrono>
#include <cstdio>
#include <mutex>
#include <thread>

namespace rehost::fuzz {

std::optional<Finding> finding_of(const vm::ExecutionReport& r) {
  if (r.outcome == vm::Outcome::kCrash && r.crash) {
    const auto& c = *r.crash;
    return Finding{vm::crash_kind_name(c.kind), c.function, c.block, c.index, c.stack};
  }
  if (r.outcome == vm::Outcome::kHang && r.hang_site) {
    const auto& h = *r.hang_site;
    return Finding{"Hang", h.function, h.block, h.index, h.stack};
  }
  return std::nullopt;
}

uint64_t signature(const Finding& f) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ull;
  };
  auto mix_str = [&](const std::string& s) {
    for (char c : s) mix(static_cast<uint8_t>(c));
    mix(0);
  };
  auto mix_u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) mix(static_cast<uint8_t>(v >> (8 * i)));
  };
  mix_str(f.kind);
  mix_str(f.function);
  mix_u32(f.block);
  mix_u32(f.index);
  for (size_t i = 0; i < 3 && i < f.stack.size(); ++i) mix_str(f.stack[i]);
  return h;
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_hex(const Bytes& b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (uint8_t c : b) {
    s.push_back(kDigits[c >> 4]);
    s.push_back(kDigits[c & 15]);
  }
  return s;
}

namespace {

size_t new_bits(const vm::CoverageMap& have, const vm::CoverageMap& got) {
  return (got & ~have).count();
}

class Engine {
 public:
  Engine(std::shared_ptr<const vm::Image> image, const FuzzOptions& opts)
      : image_(std::move(image)), opts_(opts) {}

  Campaign run(const std::vector<Bytes>& seeds) {
    if (opts_.budget.executions == 0 && opts_.budget.seconds <= 0) {
      throw BudgetZero("fuzzing budget must be a positive execution count or duration");
    }
    c_.seed = opts_.seed;
    c_.budget = opts_.budget;
    if (opts_.calibrate) c_.disabled_isrs = vm::calibrate_isrs(image_, opts_.limits);
    start_ = std::chrono::steady_clock::now();

    std::vector<Bytes> initial = seeds;
    if (initial.empty()) initial.push_back(Bytes(kDefaultSeedSize, 0));
    for (auto& s : initial) {
      if (s.size() > opts_.max_input) s.resize(opts_.max_input);
      if (!claim_execution()) break;
      record(s, execute(s), true);
    }
    if (c_.corpus.empty()) c_.corpus.push_back({initial.front(), 0});

    const unsigned workers = std::max(1u, opts_.workers);
    if (workers == 1) {
      worker(opts_.seed);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([this, w] { worker(opts_.seed + 0x9E3779B97F4A7C15ull * w); });
      }
      for (auto& t : pool) t.join();
    }
    return std::move(c_);
  }

 private:
  bool claim_execution() {
    if (opts_.budget.executions > 0) {
      if (c_.executions >= opts_.budget.executions) return false;
    } else {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
      if (elapsed.count() >= opts_.budget.seconds) return false;
    }
    ++c_.executions;
    return true;
  }

  vm::ExecutionReport execute(const Bytes& input) const {
    return vm::run_program(image_, input, opts_.limits, c_.disabled_isrs);
  }

  void record(const Bytes& input, const vm::ExecutionReport& r, bool force_admit) {
    const size_t fresh = new_bits(c_.bitmap, r.coverage);
    if (fresh > 0 || (force_admit && c_.corpus.empty())) {
      c_.bitmap |= r.coverage;
      c_.corpus.push_back({input, static_cast<uint32_t>(fresh)});
      c_.admission_history.push_back(c_.bitmap.count());
    }
    if (auto f = finding_of(r)) {
      CrashEntry e{input, *f, r.crash, signature(*f)};
      c_.crashes.push_back(std::move(e));
    }
  }

  void worker(uint64_t seed) {
    Rng rng(seed);
    std::vector<const Bytes*> others;
    while (true) {
      Bytes child;
      {
        std::lock_guard lock(mu_);
        if (!claim_execution()) return;
        const Bytes& parent = c_.corpus[rng.below(c_.corpus.size())].input;
        others.clear();
        if (c_.corpus.size() > 1) {
          for (const auto& e : c_.corpus) others.push_back(&e.input);
        }
        child = mutate(parent, others, rng, opts_.max_input);
      }
      auto report = execute(child);
      std::lock_guard lock(mu_);
      record(child, report, false);
    }
  }

  std::shared_ptr<const vm::Image> image_;
  FuzzOptions opts_;
  Campaign c_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

Campaign fuzz_image(std::shared_ptr<const vm::Image> image, const std::vector<Bytes>& seeds,
                    const FuzzOptions& opts) {
  return Engine(std::move(image), opts).run(seeds);
}

Campaign fuzz_whole(const xform::InstrumentedProgram& ip, const std::vector<Bytes>& seeds,
                    const FuzzOptions& opts) {
  return fuzz_image(vm::compile_image(ip), seeds, opts);
}

std::vector<CrashBucket> triage(const std::vector<CrashEntry>& crashes,
                                std::shared_ptr<const vm::Image> image, const vm::Limits& limits,
                                const std::set<std::string>& disabled) {
  std::map<uint64_t, CrashBucket> by_sig;
  for (const auto& c : crashes) {
    auto [it, inserted] = by_sig.try_emplace(c.signature);
    if (inserted) {
      it->second.signature = c.signature;
      it->second.finding = c.finding;
      it->second.representative = c.input;
    }
    ++it->second.count;
  }
  std::vector<CrashBucket> out;
  for (auto& [sig, b] : by_sig) {
    auto replay = finding_of(vm::run_program(image, b.representative, limits, disabled));
    b.stable = replay && signature(*replay) == sig;
    out.push_back(std::move(b));
  }
  return out;
}

nlohmann::ordered_json campaign_summary(const Campaign& c, const std::vector<CrashBucket>& buckets,
                                        size_t unique_blocks) {
  nlohmann::ordered_json j;
  j["executions"] = c.executions;
  j["seed"] = c.seed;
  j["corpus_size"] = c.corpus.size();
  j["unique_blocks"] = unique_blocks;
  j["bitmap_bits"] = c.bitmap.count();
  j["raw_findings"] = c.crashes.size();
  j["disabled_isrs"] = c.disabled_isrs;
  j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : buckets) {
    nlohmann::ordered_json e;
    e["signature"] = hex64(b.signature);
    e["kind"] = b.finding.kind;
    e["function"] = b.finding.function;
    e["block"] = b.finding.block;
    e["index"] = b.finding.index;
    e["stack"] = b.finding.stack;
    e["count"] = b.count;
    e["stable"] = b.stable;
    e["input"] = to_hex(b.representative);
    j["buckets"].push_back(std::move(e));
  }
  return j;
}

}  // namespace rehost::fuzz
