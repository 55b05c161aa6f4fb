#pragma once

#include <stdexcept>
#include <string>

#include "ncomp/arch.hpp"

namespace ncomp {

struct ArchParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Human-readable architecture file:
//
//   ncomp-arch v1
//   input <c> <h> <w>
//   classes <n>
//   block <start> <end>          (zero or more)
//   layer <type> <k> <s> <p> <n> <skip_start> <skip_end>   (one per layer)
//
// parse(serialize(a)) == a, field for field.
std::string serialize_architecture(const Architecture& arch);
Architecture parse_architecture(const std::string& text);

Architecture load_architecture(const std::string& path);
void save_architecture(const std::string& path, const Architecture& arch);

}  // namespace ncomp
