#pragma once

#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "rehost/fir/parser.hpp"

#ifndef REHOST_FIXTURE_DIR
#error "REHOST_FIXTURE_DIR must be defined"
#endif

namespace rehost::test {

inline std::string fixture_path(const std::string& name) { return std::string(REHOST_FIXTURE_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fir::Program load_fixture(const std::string& name) {
  return fir::parse_program(read_text(fixture_path(name)));
}

}  // namespace rehost::test
