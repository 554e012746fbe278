#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rehost/fir/ast.hpp"
#include "rehost/fir/layout.hpp"

namespace rehost::mmio {

// Smallest address treated as a device register candidate; the page below is
// the null guard band.
inline constexpr uint32_t kMinDeviceAddress = 0x1000;

// Folds `e` to a constant using program constants, global addresses and the
// per-function constant locals in `locals`. Division by zero does not fold.
std::optional<uint32_t> fold_constant(const fir::Expr& e, const fir::Program& p,
                                      const fir::MemoryLayout& layout,
                                      const std::map<std::string, uint32_t>& locals);

// Locals of `fn` with a single definition that folds to a constant.
std::map<std::string, uint32_t> constant_locals(const fir::Function& fn, const fir::Program& p,
                                                const fir::MemoryLayout& layout);

// Every folded constant used as the address of a load or store (raw or hooked)
// that is at least kMinDeviceAddress and outside all memory segments.
// Deduplicated and ascending.
std::vector<uint32_t> collect_constant_addresses(const fir::Program& p,
                                                 const fir::MemoryLayout& layout);

}  // namespace rehost::mmio
