#include "rehost/mmio/svd.hpp"

#include <cstdio>

namespace rehost::mmio {

CompareReport svd_compare(const MmioMap& m, const SvdDoc& svd) {
  CompareReport r;
  for (const auto& iv : m.intervals()) {
    const SvdPeripheral* hit = nullptr;
    for (const auto& per : svd.peripherals) {
      if (iv.lo < per.end && per.base <= iv.hi) {
        hit = &per;
        break;
      }
    }
    if (hit) {
      r.matched.emplace_back(iv, hit->name);
    } else {
      r.undocumented.push_back(iv);
    }
  }
  return r;
}

std::string hex32(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

uint32_t json_u32(const nlohmann::json& j, const char* what) {
  if (j.is_number_unsigned()) {
    auto v = j.get<uint64_t>();
    if (v > 0xFFFF'FFFFull) throw SvdFormatError(std::string(what) + " exceeds 32 bits");
    return static_cast<uint32_t>(v);
  }
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    try {
      size_t used = 0;
      unsigned long long v = std::stoull(s, &used, 0);
      if (used != s.size() || v > 0xFFFF'FFFFull) throw std::out_of_range(s);
      return static_cast<uint32_t>(v);
    } catch (const std::exception&) {
      throw SvdFormatError(std::string("bad ") + what + " value '" + s + "'");
    }
  }
  throw SvdFormatError(std::string(what) + " must be an unsigned integer or string");
}

SvdDoc svd_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("peripherals") || !j["peripherals"].is_array()) {
    throw SvdFormatError("expected an object with a 'peripherals' array");
  }
  SvdDoc doc;
  for (const auto& e : j["peripherals"]) {
    SvdPeripheral per;
    if (!e.contains("name") || !e["name"].is_string()) throw SvdFormatError("peripheral without name");
    per.name = e["name"].get<std::string>();
    if (!e.contains("base") || !e.contains("end")) {
      throw SvdFormatError("peripheral '" + per.name + "' needs base and end");
    }
    per.base = json_u32(e["base"], "base");
    per.end = json_u32(e["end"], "end");
    if (per.base >= per.end) {
      throw SvdFormatError("peripheral '" + per.name + "' has base >= end");
    }
    doc.peripherals.push_back(std::move(per));
  }
  return doc;
}

namespace {

nlohmann::ordered_json interval_json(const Interval& iv) {
  nlohmann::ordered_json j;
  j["lo"] = hex32(iv.lo);
  j["hi"] = hex32(iv.hi);
  return j;
}

}  // namespace

nlohmann::ordered_json compare_report_to_json(const CompareReport& r) {
  nlohmann::ordered_json j;
  j["matched"] = nlohmann::ordered_json::array();
  for (const auto& [iv, name] : r.matched) {
    auto e = interval_json(iv);
    e["peripheral"] = name;
    j["matched"].push_back(std::move(e));
  }
  j["undocumented"] = nlohmann::ordered_json::array();
  for (const auto& iv : r.undocumented) j["undocumented"].push_back(interval_json(iv));
  return j;
}

nlohmann::ordered_json mmio_map_to_json(const MmioMap& m) {
  nlohmann::ordered_json j;
  j["intervals"] = nlohmann::ordered_json::array();
  for (const auto& iv : m.intervals()) j["intervals"].push_back(interval_json(iv));
  return j;
}

MmioMap mmio_map_from_json(const nlohmann::json& j) {
  std::vector<Interval> ivs;
  for (const auto& e : j.at("intervals")) {
    ivs.push_back({json_u32(e.at("lo"), "lo"), json_u32(e.at("hi"), "hi")});
  }
  return MmioMap(std::move(ivs));
}

}  // namespace rehost::mmio
