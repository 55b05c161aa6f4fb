#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ncomp {

enum class LayerType { Conv2d, Linear, MaxPool, Activation, BatchNorm, Flatten };
inline constexpr int kLayerTypeCount = 6;

std::string_view to_string(LayerType t);
std::optional<LayerType> layer_type_from(std::string_view name);

// One layer of a sequential architecture. kernel/stride/padding apply to
// spatial layer types only; n_out to Conv2d (filters) and Linear (units).
// skip_start/skip_end locate the layer inside its residual block: 1-based
// distance from the block start / to the block end, both 0 outside blocks.
struct LayerSpec {
  LayerType type = LayerType::Activation;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  int n_out = 0;
  int skip_start = 0;
  int skip_end = 0;

  bool operator==(const LayerSpec&) const = default;
  bool has_weights() const { return type == LayerType::Conv2d || type == LayerType::Linear; }
};

struct Shape {
  int c = 0, h = 0, w = 0;
  long long flat() const { return 1LL * c * h * w; }
  bool operator==(const Shape&) const = default;
};

// Inclusive span [start, end] of layer indices covered by one identity skip.
struct Block {
  int start = 0;
  int end = 0;
  bool operator==(const Block&) const = default;
};

struct Architecture {
  std::vector<LayerSpec> layers;
  Shape input_shape;
  int n_classes = 0;
  std::vector<Block> blocks;  // sorted, non-overlapping

  bool operator==(const Architecture&) const = default;
};

// Stage-1 action sequence: keep[i] != 0 keeps layer i.
struct RemovalMask {
  std::vector<std::uint8_t> keep;
};

// Stage-2 action sequence: one factor from {0.1, ..., 1.0} per shrinkable
// configuration variable, in shrink_variables() order.
struct ShrinkVector {
  std::vector<double> factors;
};

enum class Degeneracy { Valid, EmptyArchitecture, LargeFC, BlockMismatch, ShapeFailure };
std::string_view to_string(Degeneracy d);
std::optional<Degeneracy> degeneracy_from(std::string_view name);

struct DegeneracyLimits {
  long long max_flatten = 16384;
};

struct ShapeFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeResult {
  bool ok = false;
  std::vector<Shape> shapes;  // output shape after each layer (when ok)
  int fail_layer = -1;
  std::string error;
};

// Output shape after every layer. Spatial size after Conv2d/MaxPool is
// floor((W - k + 2p)/s) + 1; Linear consumes its input flattened.
ShapeResult infer_shapes(const Architecture& arch);

// Trainable parameter total. Conv2d: in_c*n_out*k^2 + n_out; Linear:
// in_features*n_out + n_out; BatchNorm: 2*in_c. Throws ShapeFailureError
// when shape inference fails.
long long param_count(const Architecture& arch);

// New architecture with exactly the kept layers, blocks re-spanned onto the
// survivors (a block with no survivors disappears), skip fields recomputed.
Architecture apply_removal(const Architecture& arch, const RemovalMask& mask);

// Which field of which layer a shrink factor acts on. Conv2d exposes
// kernel, padding and n_out; Linear exposes n_out, except the final
// classifier layer whose width is pinned to n_classes.
struct ShrinkVar {
  enum class Field { Kernel, Padding, NOut };
  int layer = 0;
  Field field = Field::NOut;
  bool operator==(const ShrinkVar&) const = default;
};

// Index of the last Conv2d/Linear layer (the classifier head), -1 if none.
int final_classifier_index(const Architecture& arch);

std::vector<ShrinkVar> shrink_variables(const Architecture& arch);

// Applies factors in shrink_variables() order: kernel and n_out become
// max(1, round(a*v)); padding becomes round(a*p).
Architecture apply_shrinkage(const Architecture& arch, const ShrinkVector& actions);

Degeneracy classify_degenerate(const Architecture& arch, const DegeneracyLimits& limits = {});

// Per-layer policy observation: the type code plus the six numeric fields,
// each divided by its maximum over the reference (teacher) architecture.
struct LayerFeature {
  int type_code = 0;  // index into LayerType, for one-hot expansion downstream
  double kernel = 0, stride = 0, padding = 0, n_out = 0;
  double skip_start = 0, skip_end = 0;
};

// Per-field normalizers captured from the teacher so features stay on a
// fixed scale across the whole trajectory.
struct FeatureScale {
  double kernel = 1, stride = 1, padding = 1, n_out = 1;
  double skip_start = 1, skip_end = 1;
};

FeatureScale feature_scale_from(const Architecture& teacher);
std::vector<LayerFeature> encode_layer_features(const Architecture& arch,
                                                const FeatureScale& scale);
inline std::vector<LayerFeature> encode_layer_features(const Architecture& arch) {
  return encode_layer_features(arch, feature_scale_from(arch));
}

// FNV-1a over the canonical serialization; keys the reward cache.
std::uint64_t arch_hash(const Architecture& arch);

}  // namespace ncomp
