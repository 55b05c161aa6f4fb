#include "ncomp/arch_text.hpp"

#include <fstream>
#include <sstream>

namespace ncomp {

std::string serialize_architecture(const Architecture& arch) {
  std::ostringstream out;
  out << "ncomp-arch v1\n";
  out << "input " << arch.input_shape.c << ' ' << arch.input_shape.h << ' '
      << arch.input_shape.w << '\n';
  out << "classes " << arch.n_classes << '\n';
  for (const Block& b : arch.blocks) out << "block " << b.start << ' ' << b.end << '\n';
  for (const LayerSpec& l : arch.layers) {
    out << "layer " << to_string(l.type) << ' ' << l.kernel << ' ' << l.stride << ' '
        << l.padding << ' ' << l.n_out << ' ' << l.skip_start << ' ' << l.skip_end << '\n';
  }
  return out.str();
}

Architecture parse_architecture(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) -> ArchParseError {
    return ArchParseError("architecture parse error at line " + std::to_string(line_no) +
                          ": " + why);
  };

  if (!std::getline(in, line)) throw ArchParseError("empty architecture file");
  ++line_no;
  if (line != "ncomp-arch v1") throw fail("expected header 'ncomp-arch v1'");

  Architecture arch;
  bool saw_input = false, saw_classes = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "input") {
      if (!(ls >> arch.input_shape.c >> arch.input_shape.h >> arch.input_shape.w))
        throw fail("input wants three integers");
      saw_input = true;
    } else if (tag == "classes") {
      if (!(ls >> arch.n_classes)) throw fail("classes wants one integer");
      saw_classes = true;
    } else if (tag == "block") {
      Block b;
      if (!(ls >> b.start >> b.end)) throw fail("block wants two integers");
      arch.blocks.push_back(b);
    } else if (tag == "layer") {
      std::string type_name;
      LayerSpec l;
      if (!(ls >> type_name >> l.kernel >> l.stride >> l.padding >> l.n_out >> l.skip_start >>
            l.skip_end))
        throw fail("layer wants a type and six integers");
      auto t = layer_type_from(type_name);
      if (!t) throw fail("unknown layer type '" + type_name + "'");
      l.type = *t;
      arch.layers.push_back(l);
    } else {
      throw fail("unknown record '" + tag + "'");
    }
  }
  if (!saw_input) throw ArchParseError("architecture file missing 'input' record");
  if (!saw_classes) throw ArchParseError("architecture file missing 'classes' record");

  const int n = static_cast<int>(arch.layers.size());
  int prev_end = -1;
  for (const Block& b : arch.blocks) {
    if (b.start < 0 || b.end >= n || b.start > b.end)
      throw ArchParseError("block span [" + std::to_string(b.start) + "," +
                           std::to_string(b.end) + "] out of range");
    if (b.start <= prev_end)
      throw ArchParseError("block spans must be sorted and non-overlapping");
    prev_end = b.end;
  }
  for (const Block& b : arch.blocks) {
    for (int i = b.start; i <= b.end; ++i) {
      const LayerSpec& l = arch.layers[i];
      if (l.skip_start != i - b.start + 1 || l.skip_end != b.end - i + 1)
        throw ArchParseError("layer " + std::to_string(i) +
                             " skip fields disagree with its block span");
    }
  }
  for (int i = 0; i < n; ++i) {
    const LayerSpec& l = arch.layers[i];
    if (l.skip_start == 0 && l.skip_end == 0) continue;
    if (l.skip_start == 0 || l.skip_end == 0)
      throw ArchParseError("layer " + std::to_string(i) + " has half-set skip fields");
    bool covered = false;
    for (const Block& b : arch.blocks) covered |= (i >= b.start && i <= b.end);
    if (!covered)
      throw ArchParseError("layer " + std::to_string(i) +
                           " claims block membership but no block covers it");
  }
  return arch;
}

Architecture load_architecture(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArchParseError("cannot open architecture file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_architecture(buf.str());
}

void save_architecture(const std::string& path, const Architecture& arch) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write architecture file: " + path);
  f << serialize_architecture(arch);
}

}  // namespace ncomp
