#include "ncomp/arch.hpp"

#include <algorithm>
#include <cmath>

#include "ncomp/arch_text.hpp"

namespace ncomp {

std::string_view to_string(LayerType t) {
  switch (t) {
    case LayerType::Conv2d: return "conv2d";
    case LayerType::Linear: return "linear";
    case LayerType::MaxPool: return "maxpool";
    case LayerType::Activation: return "activation";
    case LayerType::BatchNorm: return "batchnorm";
    case LayerType::Flatten: return "flatten";
  }
  return "?";
}

std::optional<LayerType> layer_type_from(std::string_view name) {
  for (int i = 0; i < kLayerTypeCount; ++i) {
    auto t = static_cast<LayerType>(i);
    if (name == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(Degeneracy d) {
  switch (d) {
    case Degeneracy::Valid: return "valid";
    case Degeneracy::EmptyArchitecture: return "empty";
    case Degeneracy::LargeFC: return "large_fc";
    case Degeneracy::BlockMismatch: return "block_mismatch";
    case Degeneracy::ShapeFailure: return "shape_failure";
  }
  return "?";
}

std::optional<Degeneracy> degeneracy_from(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Degeneracy::ShapeFailure); ++i) {
    auto d = static_cast<Degeneracy>(i);
    if (name == to_string(d)) return d;
  }
  return std::nullopt;
}

ShapeResult infer_shapes(const Architecture& arch) {
  ShapeResult res;
  if (arch.layers.empty()) {
    res.error = "architecture has no layers";
    return res;
  }
  Shape cur = arch.input_shape;
  if (cur.c < 1 || cur.h < 1 || cur.w < 1) {
    res.error = "input shape has a non-positive dimension";
    return res;
  }
  res.shapes.reserve(arch.layers.size());
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    switch (l.type) {
      case LayerType::Conv2d:
      case LayerType::MaxPool: {
        const int k = l.kernel, s = l.stride, p = l.padding;
        if (k < 1 || s < 1 || p < 0) {
          res.fail_layer = static_cast<int>(i);
          res.error = "invalid kernel/stride/padding at layer " + std::to_string(i);
          return res;
        }
        const int oh = (cur.h - k + 2 * p) / s + 1;
        const int ow = (cur.w - k + 2 * p) / s + 1;
        if (cur.h - k + 2 * p < 0 || cur.w - k + 2 * p < 0 || oh < 1 || ow < 1) {
          res.fail_layer = static_cast<int>(i);
          res.error = "spatial dimension collapsed below 1 at layer " + std::to_string(i);
          return res;
        }
        const int oc = l.type == LayerType::Conv2d ? l.n_out : cur.c;
        if (oc < 1) {
          res.fail_layer = static_cast<int>(i);
          res.error = "conv layer " + std::to_string(i) + " has no output filters";
          return res;
        }
        cur = Shape{oc, oh, ow};
        break;
      }
      case LayerType::Linear: {
        if (l.n_out < 1) {
          res.fail_layer = static_cast<int>(i);
          res.error = "linear layer " + std::to_string(i) + " has no output units";
          return res;
        }
        cur = Shape{l.n_out, 1, 1};
        break;
      }
      case LayerType::Flatten:
        cur = Shape{static_cast<int>(cur.flat()), 1, 1};
        break;
      case LayerType::Activation:
      case LayerType::BatchNorm:
        break;
    }
    res.shapes.push_back(cur);
  }
  res.ok = true;
  return res;
}

long long param_count(const Architecture& arch) {
  ShapeResult sr = infer_shapes(arch);
  if (!sr.ok) throw ShapeFailureError(sr.error);
  long long total = 0;
  Shape in = arch.input_shape;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    switch (l.type) {
      case LayerType::Conv2d:
        total += 1LL * in.c * l.n_out * l.kernel * l.kernel + l.n_out;
        break;
      case LayerType::Linear:
        total += in.flat() * l.n_out + l.n_out;
        break;
      case LayerType::BatchNorm:
        total += 2LL * in.c;
        break;
      default:
        break;
    }
    in = sr.shapes[i];
  }
  return total;
}

namespace {

// Rewrites skip_start/skip_end on every layer from the block list.
void refresh_skip_fields(Architecture& arch) {
  for (auto& l : arch.layers) {
    l.skip_start = 0;
    l.skip_end = 0;
  }
  for (const Block& b : arch.blocks) {
    for (int i = b.start; i <= b.end; ++i) {
      arch.layers[i].skip_start = i - b.start + 1;
      arch.layers[i].skip_end = b.end - i + 1;
    }
  }
}

}  // namespace

Architecture apply_removal(const Architecture& arch, const RemovalMask& mask) {
  if (mask.keep.size() != arch.layers.size())
    throw std::invalid_argument("removal mask length " + std::to_string(mask.keep.size()) +
                                " != layer count " + std::to_string(arch.layers.size()));
  Architecture out;
  out.input_shape = arch.input_shape;
  out.n_classes = arch.n_classes;

  std::vector<int> new_index(arch.layers.size(), -1);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (!mask.keep[i]) continue;
    new_index[i] = static_cast<int>(out.layers.size());
    out.layers.push_back(arch.layers[i]);
  }
  for (const Block& b : arch.blocks) {
    int first = -1, last = -1;
    for (int i = b.start; i <= b.end; ++i) {
      if (new_index[i] < 0) continue;
      if (first < 0) first = new_index[i];
      last = new_index[i];
    }
    if (first >= 0) out.blocks.push_back(Block{first, last});
  }
  refresh_skip_fields(out);
  return out;
}

int final_classifier_index(const Architecture& arch) {
  for (int i = static_cast<int>(arch.layers.size()) - 1; i >= 0; --i)
    if (arch.layers[i].has_weights()) return i;
  return -1;
}

std::vector<ShrinkVar> shrink_variables(const Architecture& arch) {
  std::vector<ShrinkVar> vars;
  const int classifier = final_classifier_index(arch);
  for (int i = 0; i < static_cast<int>(arch.layers.size()); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (l.type == LayerType::Conv2d) {
      vars.push_back({i, ShrinkVar::Field::Kernel});
      vars.push_back({i, ShrinkVar::Field::Padding});
      if (i != classifier) vars.push_back({i, ShrinkVar::Field::NOut});
    } else if (l.type == LayerType::Linear && i != classifier) {
      vars.push_back({i, ShrinkVar::Field::NOut});
    }
  }
  return vars;
}

Architecture apply_shrinkage(const Architecture& arch, const ShrinkVector& actions) {
  const std::vector<ShrinkVar> vars = shrink_variables(arch);
  if (actions.factors.size() != vars.size())
    throw std::invalid_argument("shrink vector length " + std::to_string(actions.factors.size()) +
                                " != variable count " + std::to_string(vars.size()));
  Architecture out = arch;
  for (std::size_t t = 0; t < vars.size(); ++t) {
    const double a = actions.factors[t];
    if (!(a > 0.0 && a <= 1.0))
      throw std::invalid_argument("shrink factor out of (0,1]: " + std::to_string(a));
    LayerSpec& l = out.layers[vars[t].layer];
    switch (vars[t].field) {
      case ShrinkVar::Field::Kernel:
        l.kernel = std::max(1, static_cast<int>(std::lround(a * l.kernel)));
        break;
      case ShrinkVar::Field::Padding:
        l.padding = static_cast<int>(std::lround(a * l.padding));
        break;
      case ShrinkVar::Field::NOut:
        l.n_out = std::max(1, static_cast<int>(std::lround(a * l.n_out)));
        break;
    }
  }
  return out;
}

Degeneracy classify_degenerate(const Architecture& arch, const DegeneracyLimits& limits) {
  bool any_weights = false;
  for (const auto& l : arch.layers) any_weights |= l.has_weights();
  if (arch.layers.empty() || !any_weights) return Degeneracy::EmptyArchitecture;

  ShapeResult sr = infer_shapes(arch);
  if (!sr.ok) return Degeneracy::ShapeFailure;

  // Flatten size feeding the first Linear layer (Linear flattens implicitly).
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (arch.layers[i].type != LayerType::Linear) continue;
    const long long flat = i == 0 ? arch.input_shape.flat() : sr.shapes[i - 1].flat();
    if (flat > limits.max_flatten) return Degeneracy::LargeFC;
    break;
  }

  for (const Block& b : arch.blocks) {
    const Shape entering = b.start == 0 ? arch.input_shape : sr.shapes[b.start - 1];
    if (!(entering == sr.shapes[b.end])) return Degeneracy::BlockMismatch;
  }

  if (sr.shapes.back().flat() != arch.n_classes) return Degeneracy::ShapeFailure;
  return Degeneracy::Valid;
}

FeatureScale feature_scale_from(const Architecture& teacher) {
  FeatureScale s;
  for (const auto& l : teacher.layers) {
    s.kernel = std::max(s.kernel, static_cast<double>(l.kernel));
    s.stride = std::max(s.stride, static_cast<double>(l.stride));
    s.padding = std::max(s.padding, static_cast<double>(l.padding));
    s.n_out = std::max(s.n_out, static_cast<double>(l.n_out));
    s.skip_start = std::max(s.skip_start, static_cast<double>(l.skip_start));
    s.skip_end = std::max(s.skip_end, static_cast<double>(l.skip_end));
  }
  return s;
}

std::vector<LayerFeature> encode_layer_features(const Architecture& arch,
                                                const FeatureScale& scale) {
  ShapeResult sr = infer_shapes(arch);
  if (!sr.ok) throw ShapeFailureError(sr.error);
  std::vector<LayerFeature> feats;
  feats.reserve(arch.layers.size());
  for (const auto& l : arch.layers) {
    LayerFeature f;
    f.type_code = static_cast<int>(l.type);
    f.kernel = l.kernel / scale.kernel;
    f.stride = l.stride / scale.stride;
    f.padding = l.padding / scale.padding;
    f.n_out = l.n_out / scale.n_out;
    f.skip_start = l.skip_start / scale.skip_start;
    f.skip_end = l.skip_end / scale.skip_end;
    feats.push_back(f);
  }
  return feats;
}

std::uint64_t arch_hash(const Architecture& arch) {
  const std::string text = serialize_architecture(arch);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ncomp
