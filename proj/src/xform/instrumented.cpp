#include "rehost/xform/instrumented.hpp"

#include <algorithm>

#include "rehost/fir/parser.hpp"
#include "rehost/fir/printer.hpp"
#include "rehost/mmio/svd.hpp"

namespace rehost::xform {

namespace {

constexpr const char* kFormat = "rehost-instrumented";
constexpr int kVersion = 1;

using ojson = nlohmann::ordered_json;

}  // namespace

bool InstrumentedProgram::pass_enabled(std::string_view name) const {
  return std::any_of(passes_applied.begin(), passes_applied.end(),
                     [&](const PassRecord& r) { return r.name == name && r.enabled; });
}

uint16_t probe_id(std::string_view function, uint32_t block) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ull;
  };
  for (char c : function) mix(static_cast<uint8_t>(c));
  mix(0);
  for (int i = 0; i < 4; ++i) mix(static_cast<uint8_t>(block >> (8 * i)));
  return static_cast<uint16_t>(h & 0xFFFF);
}

InstrumentedProgram untransformed(fir::Program p) {
  InstrumentedProgram ip;
  ip.program = std::move(p);
  return ip;
}

std::string to_artifact(const InstrumentedProgram& ip) {
  ojson j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["passes_applied"] = ojson::array();
  for (const auto& r : ip.passes_applied) {
    j["passes_applied"].push_back({{"name", r.name}, {"enabled", r.enabled}});
  }
  j["dispatcher_task"] = ip.dispatcher_task;
  j["mmio_map"] = mmio::mmio_map_to_json(ip.mmio_map)["intervals"];
  j["weakened_branches"] = ojson::array();
  for (const auto& s : ip.weakened_branches) {
    j["weakened_branches"].push_back(
        {{"function", s.function}, {"block", s.block}, {"index", s.index}});
  }
  j["block_table"] = ojson::array();
  for (const auto& e : ip.block_table) {
    j["block_table"].push_back({{"function", e.function}, {"block", e.block}, {"probe", e.probe}});
  }
  j["program"] = fir::print_program(ip.program);
  return j.dump(2) + "\n";
}

InstrumentedProgram from_artifact(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError(std::string("artifact is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw ArtifactError("not an instrumented-program artifact");
    if (j.at("version").get<int>() != kVersion) {
      throw ArtifactError("unsupported artifact version " + j.at("version").dump());
    }
    InstrumentedProgram ip;
    ip.program = fir::parse_program(j.at("program").get<std::string>());
    for (const auto& r : j.at("passes_applied")) {
      ip.passes_applied.push_back({r.at("name").get<std::string>(), r.at("enabled").get<bool>()});
    }
    ip.dispatcher_task = j.at("dispatcher_task").get<std::string>();
    ip.mmio_map = mmio::mmio_map_from_json(nlohmann::json{{"intervals", j.at("mmio_map")}});
    for (const auto& s : j.at("weakened_branches")) {
      ip.weakened_branches.insert({s.at("function").get<std::string>(), s.at("block").get<uint32_t>(),
                                   s.at("index").get<uint32_t>()});
    }
    for (const auto& e : j.at("block_table")) {
      ip.block_table.push_back({e.at("function").get<std::string>(), e.at("block").get<uint32_t>(),
                                e.at("probe").get<uint16_t>()});
    }
    return ip;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError(std::string("malformed artifact: ") + e.what());
  } catch (const fir::ParseError& e) {
    throw ArtifactError(std::string("artifact program does not parse: ") + e.what());
  }
}

}  // namespace rehost::xform
