#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace rehost::link {

enum class Provenance : uint8_t { kApp, kLpl };
enum class Strength : uint8_t { kStrong, kWeak };

const char* provenance_name(Provenance p);
const char* strength_name(Strength s);

struct SymbolDef {
  std::string symbol;
  Strength strength = Strength::kStrong;
  bool operator==(const SymbolDef&) const = default;
};

struct ObjectDesc {
  std::string name;
  Provenance provenance = Provenance::kApp;
  std::vector<SymbolDef> defined;
  std::vector<std::string> undefined;
  bool operator==(const ObjectDesc&) const = default;
};

// Objects are identified by provenance and name: both pools may carry an
// object with the same file name (e.g. timers.o).
struct ObjectRef {
  Provenance provenance = Provenance::kApp;
  std::string name;
  auto operator<=>(const ObjectRef&) const = default;
};

struct Rename {
  ObjectRef object;
  std::string old_symbol;
  std::string new_symbol;
  bool operator==(const Rename&) const = default;
};

using Archive = std::pair<std::string, std::vector<std::string>>;

struct LinkPlan {
  std::vector<ObjectRef> selected;
  std::vector<Archive> archives;
  std::vector<Rename> renames;
  std::vector<std::pair<std::string, std::string>> alias_bindings;  // alias -> canonical
  bool operator==(const LinkPlan&) const = default;
};

struct AliasTable {
  std::map<std::string, std::string> entries;
};

using ConfigSet = std::vector<std::pair<std::string, std::string>>;

class LinkError : public std::runtime_error {
 public:
  LinkError(const std::string& what, std::string symbol)
      : std::runtime_error(what), symbol_(std::move(symbol)) {}
  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

#define REHOST_LINK_ERROR(Name)        \
  class Name : public LinkError {      \
   public:                             \
    using LinkError::LinkError;        \
  }
REHOST_LINK_ERROR(Unresolvable);
REHOST_LINK_ERROR(IrreconcilableDuplicate);
REHOST_LINK_ERROR(UnknownMember);
REHOST_LINK_ERROR(DanglingAlias);
REHOST_LINK_ERROR(OracleFailure);
REHOST_LINK_ERROR(ManifestError);
#undef REHOST_LINK_ERROR

inline constexpr std::string_view kRenameSuffix = "__app";

// Pulls objects until every undefined symbol of every selected object has a
// definition, preferring the LPL pool. A Strong clash between an App and an
// LPL object renames the App definition. Undefined symbols found in `aliases`
// are satisfied through their canonical symbol; bind_aliases records the binding.
LinkPlan resolve_links(const std::vector<ObjectDesc>& roots, const std::vector<ObjectDesc>& app_pool,
                       const std::vector<ObjectDesc>& lpl_pool, const AliasTable* aliases = nullptr);

struct ArchivePlan {
  std::vector<Archive> archives;
  // symbol -> member providing it (first Strong, else first Weak, in order)
  std::map<std::string, std::string> providers;
};

ArchivePlan plan_archives(const std::vector<Archive>& trace, const std::vector<ObjectDesc>& universe);

// Follows alias chains to their end; throws DanglingAlias on cycles.
std::string canonical_symbol(const AliasTable& aliases, const std::string& symbol);

LinkPlan bind_aliases(const LinkPlan& plan, const AliasTable& aliases,
                      const std::vector<ObjectDesc>& universe);

ConfigSet select_configs(const ConfigSet& app_configs,
                         const std::function<bool(const ConfigSet&)>& oracle);

struct ValidationReport {
  std::vector<std::string> unresolved;
  std::vector<std::string> duplicate_strong;
  bool ok() const { return unresolved.empty() && duplicate_strong.empty(); }
};

// Standalone check of a plan against the object universe.
ValidationReport validate_plan(const LinkPlan& plan, const std::vector<ObjectDesc>& universe);

struct Manifest {
  std::vector<ObjectDesc> roots;
  std::vector<ObjectDesc> app_pool;
  std::vector<ObjectDesc> lpl_pool;
  AliasTable aliases;
  std::vector<Archive> archives;
  ConfigSet configs;

  std::vector<ObjectDesc> universe() const;
};

Manifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json plan_to_json(const LinkPlan& plan, const ValidationReport& v);

}  // namespace rehost::link
