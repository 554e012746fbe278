#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "rehost/link/linkplan.hpp"

using namespace rehost::link;

namespace {

ObjectDesc obj(std::string name, Provenance p, std::vector<SymbolDef> defs, std::vector<std::string> undef = {}) {
  return {std::move(name), p, std::move(defs), std::move(undef)};
}

SymbolDef strong(std::string s) { return {std::move(s), Strength::kStrong}; }
SymbolDef weak(std::string s) { return {std::move(s), Strength::kWeak}; }

Manifest timers() {
  return manifest_from_json(nlohmann::json::parse(rehost::test::read_text(rehost::test::fixture_path("timers_scenario.json"))));
}

bool selected(const LinkPlan& p, Provenance prov, const std::string& name) {
  return std::find(p.selected.begin(), p.selected.end(), ObjectRef{prov, name}) != p.selected.end();
}

}  // namespace

TEST_CASE("timers scenario: app timers.o is pulled and its duplicate renamed") {
  const auto m = timers();
  const auto plan = resolve_links(m.roots, m.app_pool, m.lpl_pool);
  CHECK(selected(plan, Provenance::kApp, "timers.o"));
  CHECK(selected(plan, Provenance::kLpl, "timers.o"));
  CHECK_FALSE(selected(plan, Provenance::kApp, "board.o"));
  REQUIRE(plan.renames.size() == 1);
  CHECK(plan.renames[0] ==
        Rename{{Provenance::kApp, "timers.o"}, "prvInitialiseNewTimer", "prvInitialiseNewTimer__app"});
  const auto v = validate_plan(plan, m.universe());
  CHECK(v.ok());
}

TEST_CASE("undefineds satisfiable by the LPL pool select only LPL objects") {
  const std::vector<ObjectDesc> roots{obj("main.o", Provenance::kApp, {strong("main")}, {"f", "g"})};
  const std::vector<ObjectDesc> app{obj("f_app.o", Provenance::kApp, {strong("f")})};
  const std::vector<ObjectDesc> lpl{obj("f.o", Provenance::kLpl, {strong("f")}, {"g"}),
                                    obj("g.o", Provenance::kLpl, {strong("g")})};
  const auto plan = resolve_links(roots, app, lpl);
  CHECK(plan.selected == std::vector<ObjectRef>{{Provenance::kApp, "main.o"},
                                                {Provenance::kLpl, "f.o"},
                                                {Provenance::kLpl, "g.o"}});
  CHECK(plan.renames.empty());
}

TEST_CASE("resolution errors") {
  const std::vector<ObjectDesc> roots{obj("main.o", Provenance::kApp, {strong("main")}, {"nowhere"})};
  try {
    resolve_links(roots, {}, {});
    FAIL("expected Unresolvable");
  } catch (const Unresolvable& e) {
    CHECK(e.symbol() == "nowhere");
  }
  const std::vector<ObjectDesc> clash_roots{obj("main.o", Provenance::kApp, {strong("main"), strong("x")}, {"y"})};
  const std::vector<ObjectDesc> app{obj("y.o", Provenance::kApp, {strong("y"), strong("x")})};
  CHECK_THROWS_AS(resolve_links(clash_roots, app, {}), IrreconcilableDuplicate);
  CHECK_THROWS_AS(resolve_links({}, app, {}), std::invalid_argument);
}

TEST_CASE("rename suffix avoids existing names") {
  const std::vector<ObjectDesc> roots{
      obj("main.o", Provenance::kApp, {strong("main"), strong("f"), weak("f__app")}, {"g"})};
  const std::vector<ObjectDesc> lpl{obj("g.o", Provenance::kLpl, {strong("g"), strong("f")})};
  const auto plan = resolve_links(roots, {}, lpl);
  REQUIRE(plan.renames.size() == 1);
  CHECK(plan.renames[0].new_symbol == "f__app2");
  CHECK(plan.renames[0].object.provenance == Provenance::kApp);
}

TEST_CASE("archive order is preserved and Strong beats Weak") {
  const std::vector<ObjectDesc> u{obj("a.o", Provenance::kApp, {weak("f")}),
                                  obj("b.o", Provenance::kApp, {strong("g")}),
                                  obj("c.o", Provenance::kLpl, {strong("f")})};
  const std::vector<Archive> trace{{"libapp.a", {"a.o", "b.o"}}, {"libhal.a", {"c.o"}}};
  const auto ap = plan_archives(trace, u);
  CHECK(ap.archives == trace);
  CHECK(ap.providers.at("f") == "c.o");
  CHECK(ap.providers.at("g") == "b.o");
  CHECK_THROWS_AS(plan_archives({{"libx.a", {"d.o"}}}, u), UnknownMember);
}

TEST_CASE("archive providers agree with a pairwise strength table") {
  // First Strong wins; a Weak holds only until some Strong appears.
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ObjectDesc> u;
    std::vector<std::string> members;
    for (int i = 0; i < 6; ++i) {
      ObjectDesc o{"m" + std::to_string(i) + ".o", Provenance::kApp, {}, {}};
      for (int s = 0; s < 3; ++s) {
        if (rng() % 2) o.defined.push_back({"s" + std::to_string(s), rng() % 2 ? Strength::kStrong : Strength::kWeak});
      }
      members.push_back(o.name);
      u.push_back(std::move(o));
    }
    const auto ap = plan_archives({{"lib.a", members}}, u);
    for (int s = 0; s < 3; ++s) {
      const std::string sym = "s" + std::to_string(s);
      std::string first_strong, first_any;
      for (const auto& o : u) {
        for (const auto& d : o.defined) {
          if (d.symbol != sym) continue;
          if (first_any.empty()) first_any = o.name;
          if (d.strength == Strength::kStrong && first_strong.empty()) first_strong = o.name;
        }
      }
      const std::string expect = first_strong.empty() ? first_any : first_strong;
      if (expect.empty()) {
        CHECK(ap.providers.count(sym) == 0);
      } else {
        CHECK(ap.providers.at(sym) == expect);
      }
    }
  }
}

TEST_CASE("alias binding") {
  const std::vector<ObjectDesc> roots{obj("main.o", Provenance::kApp, {strong("main")}, {"__init_clock"})};
  const std::vector<ObjectDesc> lpl{obj("clock.o", Provenance::kLpl, {strong("__nrf52_clock_init")})};
  AliasTable t;
  t.entries["__init_clock"] = "__nrf52_clock_init";
  auto plan = resolve_links(roots, {}, lpl, &t);
  std::vector<ObjectDesc> u = roots;
  u.insert(u.end(), lpl.begin(), lpl.end());
  plan = bind_aliases(plan, t, u);
  CHECK(plan.alias_bindings ==
        std::vector<std::pair<std::string, std::string>>{{"__init_clock", "__nrf52_clock_init"}});
  CHECK(validate_plan(plan, u).ok());
  CHECK(bind_aliases(plan, t, u) == plan);

  const auto m = timers();
  const auto base = resolve_links(m.roots, m.app_pool, m.lpl_pool);
  CHECK(bind_aliases(base, AliasTable{}, m.universe()) == base);
}

TEST_CASE("alias chains collapse to the final canonical symbol") {
  AliasTable t;
  t.entries = {{"a", "b"}, {"b", "c"}};
  CHECK(canonical_symbol(t, "a") == "c");
  CHECK(canonical_symbol(t, "c") == "c");
  const std::vector<ObjectDesc> u{obj("main.o", Provenance::kApp, {strong("main")}, {"a"}),
                                  obj("c.o", Provenance::kLpl, {strong("c")})};
  auto plan = resolve_links({u[0]}, {}, {u[1]}, &t);
  plan = bind_aliases(plan, t, u);
  CHECK(plan.alias_bindings == std::vector<std::pair<std::string, std::string>>{{"a", "c"}});

  AliasTable cyc;
  cyc.entries = {{"x", "y"}, {"y", "x"}};
  CHECK_THROWS_AS(canonical_symbol(cyc, "x"), DanglingAlias);

  AliasTable dangling;
  dangling.entries = {{"a", "zz"}};
  const LinkPlan p{{{Provenance::kApp, "main.o"}}, {}, {}, {}};
  CHECK_THROWS_AS(bind_aliases(p, dangling, u), DanglingAlias);
}

TEST_CASE("alias transitive closure matches a reference walk") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    // Acyclic by construction: edges only go from lower to higher index.
    AliasTable t;
    for (int i = 0; i < 8; ++i) {
      if (rng() % 3) t.entries["n" + std::to_string(i)] = "n" + std::to_string(i + 1 + rng() % (9 - i));
    }
    for (int i = 0; i < 9; ++i) {
      std::string cur = "n" + std::to_string(i);
      for (int steps = 0; steps < 16 && t.entries.count(cur); ++steps) cur = t.entries.at(cur);
      CHECK(canonical_symbol(t, "n" + std::to_string(i)) == cur);
    }
  }
}

TEST_CASE("config selection") {
  const auto m = timers();
  int calls = 0;
  const auto all = select_configs(m.configs, [&](const ConfigSet&) {
    ++calls;
    return true;
  });
  CHECK(all == m.configs);
  CHECK(calls == static_cast<int>(m.configs.size()) + 1);

  const auto no_tickless = select_configs(m.configs, [](const ConfigSet& s) {
    return std::none_of(s.begin(), s.end(), [](const auto& kv) { return kv.first == "configUSE_TICKLESS_IDLE"; });
  });
  CHECK(no_tickless == ConfigSet{{"configTIMER_QUEUE_LENGTH", "32"}, {"configTICK_RATE_HZ", "1000"}});

  const auto queue_len = select_configs({{"configTIMER_QUEUE_LENGTH", "32"}}, [](const ConfigSet& s) {
    return s.empty() || s[0].second == "32";
  });
  CHECK(queue_len == ConfigSet{{"configTIMER_QUEUE_LENGTH", "32"}});

  CHECK_THROWS_AS(select_configs(m.configs, [](const ConfigSet&) { return false; }), OracleFailure);
}

TEST_CASE("config selection is oracle-consistent") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    ConfigSet cfg;
    for (int i = 0; i < 6; ++i) cfg.push_back({"K" + std::to_string(i), std::to_string(rng() % 100)});
    const uint64_t forbidden_pair = rng();
    auto oracle = [&](const ConfigSet& s) {
      // Rejects sets containing both of two keys chosen per trial.
      const std::string a = "K" + std::to_string(forbidden_pair % 6), b = "K" + std::to_string((forbidden_pair >> 8) % 6);
      const auto has = [&](const std::string& k) {
        return std::any_of(s.begin(), s.end(), [&](const auto& kv) { return kv.first == k; });
      };
      return !(has(a) && has(b));
    };
    const auto got = select_configs(cfg, oracle);
    CHECK(oracle(got));
    CHECK(select_configs(cfg, oracle) == got);
  }
}

TEST_CASE("resolved plans validate and prefer LPL definitions") {
  std::mt19937_64 rng(13);
  int resolved = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto sym = [](uint64_t i) { return "s" + std::to_string(i); };
    auto make = [&](const std::string& name, Provenance p) {
      ObjectDesc o{name, p, {}, {}};
      std::set<std::string> used;
      for (int k = 0; k < 3; ++k) {
        const std::string s = sym(rng() % 10);
        if (used.insert(s).second) o.defined.push_back({s, rng() % 4 ? Strength::kStrong : Strength::kWeak});
      }
      for (int k = 0; k < 2; ++k) {
        const std::string s = sym(rng() % 10);
        if (used.insert(s).second) o.undefined.push_back(s);
      }
      return o;
    };
    std::vector<ObjectDesc> roots{make("root.o", Provenance::kApp)};
    std::vector<ObjectDesc> app, lpl;
    for (int i = 0; i < 4; ++i) app.push_back(make("a" + std::to_string(i) + ".o", Provenance::kApp));
    for (int i = 0; i < 4; ++i) lpl.push_back(make("l" + std::to_string(i) + ".o", Provenance::kLpl));
    LinkPlan plan;
    try {
      plan = resolve_links(roots, app, lpl);
    } catch (const LinkError&) {
      continue;
    }
    ++resolved;
    std::vector<ObjectDesc> u = roots;
    u.insert(u.end(), app.begin(), app.end());
    u.insert(u.end(), lpl.begin(), lpl.end());
    const auto v = validate_plan(plan, u);
    CHECK_MESSAGE(v.ok(), trial);
    for (const auto& r : plan.renames) CHECK(r.object.provenance == Provenance::kApp);
  }
  CHECK(resolved > 50);
}

TEST_CASE("manifest parsing and plan json") {
  const auto m = timers();
  CHECK(m.roots.size() == 1);
  CHECK(m.app_pool.size() == 2);
  CHECK(m.lpl_pool.size() == 5);
  CHECK(m.archives.size() == 2);
  CHECK(m.configs.size() == 3);
  CHECK(m.universe().size() == 8);
  const auto plan = resolve_links(m.roots, m.app_pool, m.lpl_pool);
  const auto j = plan_to_json(plan, validate_plan(plan, m.universe()));
  CHECK(j.contains("selected"));
  CHECK(j.contains("renames"));
  CHECK_THROWS_AS(manifest_from_json(nlohmann::json::parse(R"({"roots":[{"name":"x","provenance":"Vendor"}]})")),
                  ManifestError);
  CHECK_THROWS_AS(manifest_from_json(nlohmann::json::parse(
                      R"({"roots":[{"name":"x","provenance":"App","defined":[{"sym":"f","strength":"Strong"}],"undefined":["f"]}]})")),
                  ManifestError);
}
