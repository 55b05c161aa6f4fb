#include "ncomp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "ncomp/rng.hpp"

namespace ncomp {

Eigen::MatrixXd Dataset::batch_inputs(int begin, int count) const {
  Eigen::MatrixXd x(sample_size(), count);
  for (int j = 0; j < count; ++j) {
    const float* src = inputs.data() + (begin + j) * sample_size();
    for (long long i = 0; i < sample_size(); ++i) x(i, j) = src[i];
  }
  return x;
}

Eigen::MatrixXd Dataset::batch_inputs(const std::vector<int>& indices, int begin,
                                      int count) const {
  Eigen::MatrixXd x(sample_size(), count);
  for (int j = 0; j < count; ++j) {
    const float* src = inputs.data() + indices[begin + j] * sample_size();
    for (long long i = 0; i < sample_size(); ++i) x(i, j) = src[i];
  }
  return x;
}

Eigen::MatrixXd Dataset::batch_logits(const std::vector<int>& indices, int begin,
                                      int count) const {
  Eigen::MatrixXd z(n_classes, count);
  for (int j = 0; j < count; ++j) {
    const float* src = teacher_logits.data() + 1LL * indices[begin + j] * n_classes;
    for (int i = 0; i < n_classes; ++i) z(i, j) = src[i];
  }
  return z;
}

std::vector<int> Dataset::batch_labels(const std::vector<int>& indices, int begin,
                                       int count) const {
  std::vector<int> out(count);
  for (int j = 0; j < count; ++j) out[j] = labels[indices[begin + j]];
  return out;
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.n = static_cast<int>(indices.size());
  out.channels = channels;
  out.height = height;
  out.width = width;
  out.n_classes = n_classes;
  out.inputs.resize(out.n * sample_size());
  out.labels.resize(out.n);
  if (has_logits()) out.teacher_logits.resize(1LL * out.n * n_classes);
  for (int j = 0; j < out.n; ++j) {
    const int src = indices[j];
    std::copy_n(inputs.data() + src * sample_size(), sample_size(),
                out.inputs.data() + j * sample_size());
    out.labels[j] = labels[src];
    if (has_logits())
      std::copy_n(teacher_logits.data() + 1LL * src * n_classes, n_classes,
                  out.teacher_logits.data() + 1LL * j * n_classes);
  }
  return out;
}

Dataset Dataset::head(int count) const {
  std::vector<int> idx(std::min(count, n));
  for (int i = 0; i < static_cast<int>(idx.size()); ++i) idx[i] = i;
  return subset(idx);
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double val_fraction,
                                            std::uint64_t seed) {
  std::vector<int> idx(data.n);
  for (int i = 0; i < data.n; ++i) idx[i] = i;
  Rng rng(seed);
  for (int i = data.n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(idx[i], idx[j]);
  }
  const int n_val = std::max(1, static_cast<int>(std::lround(data.n * val_fraction)));
  const int n_train = data.n - n_val;
  if (n_train < 1) throw std::invalid_argument("validation fraction leaves no training data");
  std::vector<int> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<int> val_idx(idx.begin() + n_train, idx.end());
  return {data.subset(train_idx), data.subset(val_idx)};
}

// ---------------------------------------------------------------------------
// IDX container
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void write_be32(std::ofstream& f, std::uint32_t v) {
  const std::uint8_t bytes[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16),
                                 std::uint8_t(v >> 8), std::uint8_t(v)};
  f.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace

IdxFile load_idx(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IdxParseError("cannot open idx file: " + path);
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
  if (raw.size() < 4)
    throw IdxParseError(path + ": truncated before magic at offset 0");

  IdxFile idx;
  idx.magic = read_be32(raw.data());
  int n_dims = 0;
  if (idx.magic == kIdxImagesMagic) n_dims = 3;
  else if (idx.magic == kIdxLabelsMagic) n_dims = 1;
  else
    throw IdxParseError(path + ": bad magic 0x" + [&] {
      char buf[12];
      std::snprintf(buf, sizeof buf, "%08x", idx.magic);
      return std::string(buf);
    }() + " at offset 0");

  const std::size_t header = 4 + 4 * static_cast<std::size_t>(n_dims);
  if (raw.size() < header)
    throw IdxParseError(path + ": truncated header at offset " + std::to_string(raw.size()));
  std::size_t expect = 1;
  for (int d = 0; d < n_dims; ++d) {
    const std::uint32_t v = read_be32(raw.data() + 4 + 4 * d);
    idx.dims.push_back(static_cast<int>(v));
    expect *= v;
  }
  if (raw.size() != header + expect)
    throw IdxParseError(path + ": payload length " + std::to_string(raw.size() - header) +
                        " != expected " + std::to_string(expect) + " at offset " +
                        std::to_string(header));
  idx.payload.assign(raw.begin() + header, raw.end());
  return idx;
}

Dataset dataset_from_idx(const IdxFile& images, const IdxFile& labels, int n_classes,
                         int limit) {
  if (images.magic != kIdxImagesMagic) throw IdxParseError("images file has label magic");
  if (labels.magic != kIdxLabelsMagic) throw IdxParseError("labels file has image magic");
  if (images.dims[0] != labels.dims[0])
    throw IdxParseError("image/label counts differ: " + std::to_string(images.dims[0]) +
                        " vs " + std::to_string(labels.dims[0]));

  Dataset data;
  data.n = limit > 0 ? std::min(limit, images.dims[0]) : images.dims[0];
  data.channels = 1;
  data.height = images.dims[1];
  data.width = images.dims[2];
  data.n_classes = n_classes;
  data.inputs.resize(data.n * data.sample_size());
  data.labels.resize(data.n);
  for (int i = 0; i < data.n; ++i) {
    const std::uint8_t* src = images.payload.data() + 1LL * i * data.height * data.width;
    for (long long p = 0; p < data.sample_size(); ++p)
      data.inputs[i * data.sample_size() + p] = static_cast<float>(src[p]) / 255.0f;
    const int y = labels.payload[i];
    if (y < 0 || y >= n_classes)
      throw IdxParseError("label " + std::to_string(y) + " out of range at sample " +
                          std::to_string(i));
    data.labels[i] = y;
  }
  return data;
}

Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         int n_classes, int limit) {
  return dataset_from_idx(load_idx(images_path), load_idx(labels_path), n_classes, limit);
}

void save_idx_images(const std::string& path, const Dataset& data) {
  if (data.channels != 1)
    throw std::invalid_argument("idx image export supports single-channel data only");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write idx file: " + path);
  write_be32(f, kIdxImagesMagic);
  write_be32(f, static_cast<std::uint32_t>(data.n));
  write_be32(f, static_cast<std::uint32_t>(data.height));
  write_be32(f, static_cast<std::uint32_t>(data.width));
  for (float v : data.inputs) {
    const int q = std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255);
    const std::uint8_t b = static_cast<std::uint8_t>(q);
    f.write(reinterpret_cast<const char*>(&b), 1);
  }
}

void save_idx_labels(const std::string& path, const Dataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write idx file: " + path);
  write_be32(f, kIdxLabelsMagic);
  write_be32(f, static_cast<std::uint32_t>(data.n));
  for (int y : data.labels) {
    const std::uint8_t b = static_cast<std::uint8_t>(y);
    f.write(reinterpret_cast<const char*>(&b), 1);
  }
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 1 || spec.samples_per_class < 1 || spec.image_size < 4)
    throw std::invalid_argument("synthetic spec needs classes >= 1, samples >= 1, size >= 4");

  const int s = spec.image_size;
  Dataset data;
  data.n = spec.n_classes * spec.samples_per_class;
  data.channels = 1;
  data.height = s;
  data.width = s;
  data.n_classes = spec.n_classes;
  data.inputs.resize(data.n * data.sample_size());
  data.labels.resize(data.n);

  // Class templates: one blob per class, centers spread over a ring.
  std::vector<std::vector<float>> templates(spec.n_classes,
                                            std::vector<float>(s * s, 0.0f));
  const double ring = s / 3.5;
  const double sigma_blob = s / 9.0;
  for (int k = 0; k < spec.n_classes; ++k) {
    const double angle = 2.0 * M_PI * k / spec.n_classes;
    const double cy = s / 2.0 + ring * std::sin(angle);
    const double cx = s / 2.0 + ring * std::cos(angle);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        templates[k][y * s + x] =
            static_cast<float>(std::exp(-d2 / (2.0 * sigma_blob * sigma_blob)));
      }
  }

  Rng rng(spec.seed);
  int row = 0;
  for (int k = 0; k < spec.n_classes; ++k) {
    for (int i = 0; i < spec.samples_per_class; ++i, ++row) {
      float* dst = data.inputs.data() + row * data.sample_size();
      for (int p = 0; p < s * s; ++p) {
        double v = templates[k][p];
        if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.normal();
        dst[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
      data.labels[row] = k;
    }
  }
  return data;
}

}  // namespace ncomp
