#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace ncomp {

// Image classification data, NCHW, pixels in [0,1]. Teacher logits are
// attached by the distillation pipeline.
struct Dataset {
  int n = 0, channels = 0, height = 0, width = 0;
  int n_classes = 0;
  std::vector<float> inputs;          // n * channels * height * width
  std::vector<int> labels;            // n
  std::vector<float> teacher_logits;  // n * n_classes, or empty

  bool has_logits() const { return !teacher_logits.empty(); }
  long long sample_size() const { return 1LL * channels * height * width; }

  // (sample_size, count) column-major batch of rows [begin, begin+count).
  Eigen::MatrixXd batch_inputs(int begin, int count) const;
  Eigen::MatrixXd batch_inputs(const std::vector<int>& indices, int begin, int count) const;
  Eigen::MatrixXd batch_logits(const std::vector<int>& indices, int begin, int count) const;
  std::vector<int> batch_labels(const std::vector<int>& indices, int begin, int count) const;

  Dataset subset(const std::vector<int>& indices) const;
  Dataset head(int count) const;
};

// Deterministic train/validation split: seeded shuffle, the trailing
// fraction becomes validation.
std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double val_fraction,
                                            std::uint64_t seed);

struct IdxParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One file of the IDX container family (big-endian header).
struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<int> dims;
  std::vector<std::uint8_t> payload;
};

// Accepts image files (magic 0x00000803, 3 dims) and label files
// (magic 0x00000801, 1 dim); anything else raises IdxParseError naming the
// bad byte offset.
IdxFile load_idx(const std::string& path);

Dataset dataset_from_idx(const IdxFile& images, const IdxFile& labels, int n_classes = 10,
                         int limit = -1);
Dataset load_idx_dataset(const std::string& images_path, const std::string& labels_path,
                         int n_classes = 10, int limit = -1);

void save_idx_images(const std::string& path, const Dataset& data);
void save_idx_labels(const std::string& path, const Dataset& data);

// Class-conditional Gaussian blobs: each class owns a fixed template image
// (a blob at a class-specific location), samples add pixel noise of the
// given sigma. noise_sigma = 0 reproduces the templates exactly, which is
// linearly separable by construction.
struct SyntheticSpec {
  int n_classes = 10;
  int samples_per_class = 100;
  int image_size = 28;
  double noise_sigma = 0.5;
  std::uint64_t seed = 1;
  bool operator==(const SyntheticSpec&) const = default;
};

Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace ncomp
