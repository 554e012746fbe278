#include "rehost/link/linkplan.hpp"

#include <algorithm>
#include <set>

namespace rehost::link {

const char* provenance_name(Provenance p) { return p == Provenance::kApp ? "App" : "LPL"; }
const char* strength_name(Strength s) { return s == Strength::kStrong ? "Strong" : "Weak"; }

namespace {

ObjectRef ref_of(const ObjectDesc& o) { return {o.provenance, o.name}; }

class Resolver {
 public:
  Resolver(const std::vector<ObjectDesc>& roots, const std::vector<ObjectDesc>& app,
           const std::vector<ObjectDesc>& lpl, const AliasTable* aliases)
      : app_(app), lpl_(lpl), aliases_(aliases) {
    for (const auto* pool : {&roots, &app, &lpl}) {
      for (const auto& o : *pool) {
        for (const auto& d : o.defined) universe_symbols_.insert(d.symbol);
        for (const auto& u : o.undefined) universe_symbols_.insert(u);
      }
    }
    for (const auto& r : roots) add(r);
  }

  LinkPlan run() {
    while (auto need = next_needed()) {
      const ObjectDesc* cand = find_definer(lpl_, *need);
      if (!cand) cand = find_definer(app_, *need);
      if (!cand) throw Unresolvable("no object defines '" + *need + "'", *need);
      add(*cand);
    }
    LinkPlan plan;
    for (const auto* o : selected_) plan.selected.push_back(ref_of(*o));
    plan.renames = renames_;
    return plan;
  }

 private:
  std::string effective(const ObjectDesc& o, const std::string& sym) const {
    for (const auto& r : renames_) {
      if (r.object == ref_of(o) && r.old_symbol == sym) return r.new_symbol;
    }
    return sym;
  }

  std::optional<Strength> defines(const ObjectDesc& o, const std::string& sym) const {
    for (const auto& d : o.defined) {
      if (effective(o, d.symbol) == sym) return d.strength;
    }
    return std::nullopt;
  }

  bool defined(const std::string& sym) const {
    return std::any_of(selected_.begin(), selected_.end(),
                       [&](const ObjectDesc* o) { return defines(*o, sym).has_value(); });
  }

  std::optional<std::string> next_needed() const {
    for (const auto* o : selected_) {
      for (const auto& u : o->undefined) {
        if (defined(u)) continue;
        if (aliases_ && aliases_->entries.count(u)) {
          std::string c = canonical_symbol(*aliases_, u);
          if (defined(c)) continue;
          return c;
        }
        return u;
      }
    }
    return std::nullopt;
  }

  const ObjectDesc* find_definer(const std::vector<ObjectDesc>& pool, const std::string& sym) const {
    for (const auto& o : pool) {
      if (is_selected(o)) continue;
      for (const auto& d : o.defined) {
        if (d.symbol == sym) return &o;
      }
    }
    return nullptr;
  }

  bool is_selected(const ObjectDesc& o) const {
    return std::any_of(selected_.begin(), selected_.end(),
                       [&](const ObjectDesc* s) { return ref_of(*s) == ref_of(o); });
  }

  std::string fresh_name(const std::string& sym) {
    std::string base = sym + std::string(kRenameSuffix);
    std::string name = base;
    for (int k = 2; universe_symbols_.count(name); ++k) name = base + std::to_string(k);
    universe_symbols_.insert(name);
    return name;
  }

  void add(const ObjectDesc& o) {
    if (is_selected(o)) return;
    selected_.push_back(&o);
    for (const auto& d : o.defined) {
      if (d.strength != Strength::kStrong) continue;
      for (const auto* other : selected_) {
        if (other == &o || defines(*other, d.symbol) != Strength::kStrong) continue;
        const bool mixed = o.provenance != other->provenance;
        if (!mixed) {
          throw IrreconcilableDuplicate("duplicate Strong definition of '" + d.symbol + "' in " +
                                            o.name + " and " + other->name,
                                        d.symbol);
        }
        const ObjectDesc& app_obj = o.provenance == Provenance::kApp ? o : *other;
        renames_.push_back({ref_of(app_obj), d.symbol, fresh_name(d.symbol)});
        break;
      }
    }
  }

  const std::vector<ObjectDesc>& app_;
  const std::vector<ObjectDesc>& lpl_;
  const AliasTable* aliases_;
  std::vector<const ObjectDesc*> selected_;
  std::vector<Rename> renames_;
  std::set<std::string> universe_symbols_;
};

const ObjectDesc* lookup(const std::vector<ObjectDesc>& universe, const ObjectRef& r) {
  for (const auto& o : universe) {
    if (ref_of(o) == r) return &o;
  }
  return nullptr;
}

// Definitions of the selected objects after renames: symbol -> strengths.
std::map<std::string, std::vector<Strength>> effective_definitions(
    const LinkPlan& plan, const std::vector<ObjectDesc>& universe) {
  std::map<std::string, std::vector<Strength>> defs;
  for (const auto& r : plan.selected) {
    const ObjectDesc* o = lookup(universe, r);
    if (!o) throw UnknownMember("plan selects unknown object " + r.name, r.name);
    for (const auto& d : o->defined) {
      std::string sym = d.symbol;
      for (const auto& rn : plan.renames) {
        if (rn.object == r && rn.old_symbol == d.symbol) sym = rn.new_symbol;
      }
      defs[sym].push_back(d.strength);
    }
  }
  return defs;
}

}  // namespace

LinkPlan resolve_links(const std::vector<ObjectDesc>& roots, const std::vector<ObjectDesc>& app_pool,
                       const std::vector<ObjectDesc>& lpl_pool, const AliasTable* aliases) {
  if (roots.empty()) throw std::invalid_argument("resolve_links needs at least one root object");
  return Resolver(roots, app_pool, lpl_pool, aliases).run();
}

ArchivePlan plan_archives(const std::vector<Archive>& trace, const std::vector<ObjectDesc>& universe) {
  ArchivePlan out;
  out.archives = trace;
  std::map<std::string, Strength> provider_strength;
  for (const auto& [archive, members] : trace) {
    for (const auto& m : members) {
      const ObjectDesc* obj = nullptr;
      for (const auto& o : universe) {
        if (o.name == m) {
          obj = &o;
          break;
        }
      }
      if (!obj) throw UnknownMember("archive " + archive + " lists unknown member " + m, m);
      for (const auto& d : obj->defined) {
        auto it = provider_strength.find(d.symbol);
        if (it == provider_strength.end() ||
            (it->second == Strength::kWeak && d.strength == Strength::kStrong)) {
          provider_strength[d.symbol] = d.strength;
          out.providers[d.symbol] = m;
        }
      }
    }
  }
  return out;
}

std::string canonical_symbol(const AliasTable& aliases, const std::string& symbol) {
  std::string cur = symbol;
  std::set<std::string> seen{cur};
  for (auto it = aliases.entries.find(cur); it != aliases.entries.end();
       it = aliases.entries.find(cur)) {
    cur = it->second;
    if (!seen.insert(cur).second) throw DanglingAlias("alias cycle through '" + cur + "'", cur);
  }
  return cur;
}

LinkPlan bind_aliases(const LinkPlan& plan, const AliasTable& aliases,
                      const std::vector<ObjectDesc>& universe) {
  LinkPlan out = plan;
  const auto defs = effective_definitions(plan, universe);
  std::set<std::string> bound;
  for (const auto& [a, c] : out.alias_bindings) bound.insert(a);
  for (const auto& r : plan.selected) {
    const ObjectDesc* o = lookup(universe, r);
    for (const auto& u : o->undefined) {
      if (defs.count(u)) continue;
      if (!aliases.entries.count(u)) throw Unresolvable("'" + u + "' is undefined after alias binding", u);
      const std::string c = canonical_symbol(aliases, u);
      if (!defs.count(c)) throw DanglingAlias("alias '" + u + "' resolves to undefined '" + c + "'", c);
      if (bound.insert(u).second) out.alias_bindings.emplace_back(u, c);
    }
  }
  return out;
}

ConfigSet select_configs(const ConfigSet& app_configs,
                         const std::function<bool(const ConfigSet&)>& oracle) {
  std::set<std::string> keys;
  for (const auto& [k, v] : app_configs) {
    if (!keys.insert(k).second) throw std::invalid_argument("duplicate config key '" + k + "'");
  }
  if (!oracle({})) throw OracleFailure("the build fails with no application configs", "");
  ConfigSet accepted;
  for (const auto& kv : app_configs) {
    ConfigSet trial = accepted;
    trial.push_back(kv);
    if (oracle(trial)) accepted = std::move(trial);
  }
  return accepted;
}

ValidationReport validate_plan(const LinkPlan& plan, const std::vector<ObjectDesc>& universe) {
  ValidationReport v;
  const auto defs = effective_definitions(plan, universe);
  std::map<std::string, std::string> binding(plan.alias_bindings.begin(), plan.alias_bindings.end());
  for (const auto& [sym, strengths] : defs) {
    if (std::count(strengths.begin(), strengths.end(), Strength::kStrong) > 1) {
      v.duplicate_strong.push_back(sym);
    }
  }
  std::set<std::string> missing;
  for (const auto& r : plan.selected) {
    for (const auto& u : lookup(universe, r)->undefined) {
      auto b = binding.find(u);
      const std::string& target = b == binding.end() ? u : b->second;
      if (!defs.count(target)) missing.insert(u);
    }
  }
  v.unresolved.assign(missing.begin(), missing.end());
  return v;
}

std::vector<ObjectDesc> Manifest::universe() const {
  std::vector<ObjectDesc> u = roots;
  u.insert(u.end(), app_pool.begin(), app_pool.end());
  u.insert(u.end(), lpl_pool.begin(), lpl_pool.end());
  return u;
}

namespace {

ObjectDesc object_from_json(const nlohmann::json& j, Provenance dflt) {
  ObjectDesc o;
  o.name = j.at("name").get<std::string>();
  o.provenance = dflt;
  if (j.contains("provenance")) {
    const auto p = j["provenance"].get<std::string>();
    if (p == "App") {
      o.provenance = Provenance::kApp;
    } else if (p == "LPL") {
      o.provenance = Provenance::kLpl;
    } else {
      throw ManifestError("object " + o.name + ": unknown provenance '" + p + "'", "");
    }
  }
  std::set<std::string> seen;
  for (const auto& d : j.value("defined", nlohmann::json::array())) {
    SymbolDef sd;
    sd.symbol = d.at("sym").get<std::string>();
    const auto s = d.value("strength", std::string("Strong"));
    if (s != "Strong" && s != "Weak") {
      throw ManifestError("object " + o.name + ": unknown strength '" + s + "'", sd.symbol);
    }
    sd.strength = s == "Weak" ? Strength::kWeak : Strength::kStrong;
    if (!seen.insert(sd.symbol).second) {
      throw ManifestError("object " + o.name + " defines '" + sd.symbol + "' twice", sd.symbol);
    }
    o.defined.push_back(std::move(sd));
  }
  for (const auto& u : j.value("undefined", nlohmann::json::array())) {
    auto sym = u.get<std::string>();
    if (seen.count(sym)) {
      throw ManifestError("object " + o.name + " both defines and references '" + sym + "'", sym);
    }
    o.undefined.push_back(std::move(sym));
  }
  return o;
}

}  // namespace

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    Manifest m;
    for (const auto& o : j.at("roots")) m.roots.push_back(object_from_json(o, Provenance::kApp));
    for (const auto& o : j.value("app_pool", nlohmann::json::array())) {
      m.app_pool.push_back(object_from_json(o, Provenance::kApp));
    }
    for (const auto& o : j.value("lpl_pool", nlohmann::json::array())) {
      m.lpl_pool.push_back(object_from_json(o, Provenance::kLpl));
    }
    for (const auto& [a, c] : j.value("aliases", nlohmann::json::object()).items()) {
      m.aliases.entries[a] = c.get<std::string>();
    }
    for (const auto& a : j.value("archives", nlohmann::json::array())) {
      m.archives.emplace_back(a.at("name").get<std::string>(),
                              a.at("members").get<std::vector<std::string>>());
    }
    for (const auto& c : j.value("configs", nlohmann::json::array())) {
      m.configs.emplace_back(c.at("key").get<std::string>(), c.at("value").get<std::string>());
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("malformed link manifest: ") + e.what(), "");
  }
}

nlohmann::ordered_json plan_to_json(const LinkPlan& plan, const ValidationReport& v) {
  nlohmann::ordered_json j;
  j["selected"] = nlohmann::ordered_json::array();
  for (const auto& r : plan.selected) {
    j["selected"].push_back({{"name", r.name}, {"provenance", provenance_name(r.provenance)}});
  }
  j["archives"] = nlohmann::ordered_json::array();
  for (const auto& [name, members] : plan.archives) {
    j["archives"].push_back({{"name", name}, {"members", members}});
  }
  j["renames"] = nlohmann::ordered_json::array();
  for (const auto& r : plan.renames) {
    j["renames"].push_back({{"object", r.object.name},
                            {"provenance", provenance_name(r.object.provenance)},
                            {"old", r.old_symbol},
                            {"new", r.new_symbol}});
  }
  j["alias_bindings"] = nlohmann::ordered_json::array();
  for (const auto& [a, c] : plan.alias_bindings) {
    j["alias_bindings"].push_back({{"alias", a}, {"canonical", c}});
  }
  j["validation"] = {{"unresolved", v.unresolved}, {"duplicate_strong", v.duplicate_strong}};
  return j;
}

}  // namespace rehost::link
