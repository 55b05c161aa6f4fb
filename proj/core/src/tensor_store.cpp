#include "ncomp/tensor_store.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace ncomp {

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'C', 'T', 'S', 'v', '1', '\n', '\0'};

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& f, const std::string& path) {
  T v{};
  if (!f.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error("truncated tensor container: " + path);
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write tensor container: " + path);
  f.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.elem_count() != static_cast<long long>(t.data.size()))
      throw std::invalid_argument("tensor '" + t.name + "' dims disagree with data length");
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) write_pod<std::int64_t>(f, d);
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("short write to tensor container: " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open tensor container: " + path);
  char magic[sizeof kMagic];
  if (!f.read(magic, sizeof magic) || std::string(magic, sizeof magic) !=
                                          std::string(kMagic, sizeof kMagic))
    throw std::runtime_error("bad tensor container magic: " + path);
  const auto count = read_pod<std::uint32_t>(f, path);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = read_pod<std::uint32_t>(f, path);
    t.name.resize(name_len);
    if (!f.read(t.name.data(), name_len))
      throw std::runtime_error("truncated tensor container: " + path);
    const auto ndim = read_pod<std::uint32_t>(f, path);
    for (std::uint32_t d = 0; d < ndim; ++d)
      t.dims.push_back(static_cast<int>(read_pod<std::int64_t>(f, path)));
    t.data.resize(t.elem_count());
    if (!f.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float))))
      throw std::runtime_error("truncated tensor payload: " + path);
    tensors.push_back(std::move(t));
  }
  return tensors;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& tensors,
                               const std::string& name) {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error("tensor '" + name + "' not found in container");
}

}  // namespace ncomp
