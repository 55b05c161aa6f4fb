#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ncomp {

// Versioned binary container of named tensors: little-endian 32-bit floats
// behind per-tensor shape headers.
struct NamedTensor {
  std::string name;
  std::vector<int> dims;
  std::vector<float> data;

  long long elem_count() const {
    long long n = 1;
    for (int d : dims) n *= d;
    return n;
  }
};

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::string& path);

// First tensor with the given name; throws if absent.
const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name);

}  // namespace ncomp
