#include <doctest.h>

#include <filesystem>

#include "ncomp/arch.hpp"
#include "ncomp/arch_text.hpp"
#include "test_support.hpp"

using namespace ncomp;
using namespace ncomp::testing;

namespace {

Architecture single_layer(LayerSpec l, Shape in = {1, 28, 28}, int classes = 10) {
  Architecture a;
  a.input_shape = in;
  a.n_classes = classes;
  a.layers = {l};
  return a;
}

// Oracle: walk the kept layers and count parameters from first principles,
// independent of apply_removal/infer_shapes.
long long naive_params_of_kept(const Architecture& arch, unsigned mask) {
  long long total = 0;
  Shape cur = arch.input_shape;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (!(mask & (1u << i))) continue;
    const LayerSpec& l = arch.layers[i];
    switch (l.type) {
      case LayerType::Conv2d: {
        total += 1LL * cur.c * l.n_out * l.kernel * l.kernel + l.n_out;
        cur = {l.n_out, (cur.h - l.kernel + 2 * l.padding) / l.stride + 1,
               (cur.w - l.kernel + 2 * l.padding) / l.stride + 1};
        break;
      }
      case LayerType::MaxPool:
        cur = {cur.c, (cur.h - l.kernel + 2 * l.padding) / l.stride + 1,
               (cur.w - l.kernel + 2 * l.padding) / l.stride + 1};
        break;
      case LayerType::Linear:
        total += cur.flat() * l.n_out + l.n_out;
        cur = {l.n_out, 1, 1};
        break;
      case LayerType::BatchNorm:
        total += 2LL * cur.c;
        break;
      case LayerType::Flatten:
        cur = {static_cast<int>(cur.flat()), 1, 1};
        break;
      case LayerType::Activation:
        break;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("infer_shapes: same-padding conv keeps spatial size") {
  const auto sr = infer_shapes(single_layer(conv(3, 1, 1, 5)));
  REQUIRE(sr.ok);
  CHECK(sr.shapes[0] == Shape{5, 28, 28});
}

TEST_CASE("infer_shapes: halving pool") {
  const auto sr = infer_shapes(single_layer(pool(2, 2), {8, 28, 28}));
  REQUIRE(sr.ok);
  CHECK(sr.shapes[0] == Shape{8, 14, 14});
}

TEST_CASE("infer_shapes: kernel exceeding input fails") {
  const auto sr = infer_shapes(single_layer(conv(7, 1, 0, 4), {1, 5, 5}));
  CHECK_FALSE(sr.ok);
  CHECK(sr.fail_layer == 0);
}

TEST_CASE("infer_shapes: deterministic") {
  const Architecture t = conv_teacher();
  const auto a = infer_shapes(t);
  const auto b = infer_shapes(t);
  REQUIRE(a.ok);
  CHECK(a.shapes == b.shapes);
}

TEST_CASE("param_count: known layer formulas") {
  CHECK(param_count(single_layer(conv(3, 1, 1, 8))) == 80);  // 1*8*9 + 8

  Architecture lin_arch;
  lin_arch.input_shape = {100, 1, 1};
  lin_arch.n_classes = 10;
  lin_arch.layers = {lin(10)};
  CHECK(param_count(lin_arch) == 1010);  // 100*10 + 10

  CHECK(param_count(single_layer(act())) == 0);
}

TEST_CASE("param_count propagates shape failure") {
  CHECK_THROWS_AS(param_count(single_layer(conv(7, 1, 0, 4), {1, 5, 5})), ShapeFailureError);
}

TEST_CASE("apply_removal: identity, annihilation, order") {
  const Architecture t = conv_teacher();

  RemovalMask all_keep{std::vector<std::uint8_t>(t.layers.size(), 1)};
  CHECK(apply_removal(t, all_keep) == t);

  RemovalMask all_remove{std::vector<std::uint8_t>(t.layers.size(), 0)};
  CHECK(apply_removal(t, all_remove).layers.empty());

  Architecture three;
  three.input_shape = {1, 8, 8};
  three.n_classes = 4;
  three.layers = {conv(3, 1, 1, 2), conv(3, 1, 1, 3), lin(4)};
  const Architecture kept = apply_removal(three, RemovalMask{{1, 0, 1}});
  REQUIRE(kept.layers.size() == 2);
  CHECK(kept.layers[0] == three.layers[0]);
  CHECK(kept.layers[1] == three.layers[2]);
}

TEST_CASE("apply_removal: input architecture is untouched and blocks reindex") {
  const Architecture t = residual_teacher();
  const Architecture before = t;
  RemovalMask mask{std::vector<std::uint8_t>(t.layers.size(), 1)};
  mask.keep[3] = 0;  // drop the activation inside the block
  const Architecture out = apply_removal(t, mask);
  CHECK(t == before);
  REQUIRE(out.blocks.size() == 1);
  CHECK(out.blocks[0] == Block{2, 3});
  CHECK(out.layers[2].skip_start == 1);
  CHECK(out.layers[2].skip_end == 2);
  CHECK(out.layers[3].skip_start == 2);
  CHECK(out.layers[3].skip_end == 1);
}

TEST_CASE("apply_removal: fully removed block disappears") {
  const Architecture t = residual_teacher();
  RemovalMask mask{std::vector<std::uint8_t>(t.layers.size(), 1)};
  mask.keep[2] = mask.keep[3] = mask.keep[4] = 0;
  const Architecture out = apply_removal(t, mask);
  CHECK(out.blocks.empty());
  for (const auto& l : out.layers) {
    CHECK(l.skip_start == 0);
    CHECK(l.skip_end == 0);
  }
}

TEST_CASE("apply_removal rejects wrong mask length") {
  CHECK_THROWS_AS(apply_removal(conv_teacher(), RemovalMask{{1, 0}}), std::invalid_argument);
}

TEST_CASE("shrink_variables: conv exposes k/p/n, final classifier width pinned") {
  const Architecture t = conv_teacher();
  const auto vars = shrink_variables(t);
  // 3 convs * 3 vars + first linear n_out; the final linear is pinned.
  CHECK(vars.size() == 10);
  for (const auto& v : vars)
    CHECK_FALSE((v.layer == final_classifier_index(t) && v.field == ShrinkVar::Field::NOut));
}

TEST_CASE("apply_shrinkage: rounding and clamps") {
  Architecture a;
  a.input_shape = {1, 28, 28};
  a.n_classes = 10;
  a.layers = {conv(3, 1, 1, 64), flat(), lin(10)};
  const auto vars = shrink_variables(a);
  REQUIRE(vars.size() == 3);  // kernel, padding, n_out of the conv

  ShrinkVector v{{1.0, 1.0, 0.5}};
  CHECK(apply_shrinkage(a, v).layers[0].n_out == 32);

  Architecture one = a;
  one.layers[0].n_out = 1;
  ShrinkVector tiny{{1.0, 1.0, 0.1}};
  CHECK(apply_shrinkage(one, tiny).layers[0].n_out == 1);

  ShrinkVector identity{{1.0, 1.0, 1.0}};
  CHECK(apply_shrinkage(a, identity) == a);

  ShrinkVector pad_out{{1.0, 0.1, 1.0}};
  CHECK(apply_shrinkage(a, pad_out).layers[0].padding == 0);
}

TEST_CASE("apply_shrinkage validates lengths and ranges") {
  const Architecture t = conv_teacher();
  CHECK_THROWS_AS(apply_shrinkage(t, ShrinkVector{{0.5}}), std::invalid_argument);
  ShrinkVector bad{std::vector<double>(shrink_variables(t).size(), 1.0)};
  bad.factors[0] = 0.0;
  CHECK_THROWS_AS(apply_shrinkage(t, bad), std::invalid_argument);
}

TEST_CASE("classify_degenerate: every degeneracy class") {
  const Architecture t = conv_teacher();
  CHECK(classify_degenerate(t) == Degeneracy::Valid);

  const Architecture empty = apply_removal(
      t, RemovalMask{std::vector<std::uint8_t>(t.layers.size(), 0)});
  CHECK(classify_degenerate(empty) == Degeneracy::EmptyArchitecture);

  // 8 channels at 28x28 feeding a linear: flatten 6272 > 4096.
  Architecture big_fc;
  big_fc.input_shape = {1, 28, 28};
  big_fc.n_classes = 10;
  big_fc.layers = {conv(3, 1, 1, 8), flat(), lin(10)};
  CHECK(classify_degenerate(big_fc, {4096}) == Degeneracy::LargeFC);
  CHECK(classify_degenerate(big_fc, {6272}) == Degeneracy::Valid);

  // Shape failure from a collapsed spatial dimension.
  Architecture collapse;
  collapse.input_shape = {1, 5, 5};
  collapse.n_classes = 10;
  collapse.layers = {conv(7, 1, 0, 4), flat(), lin(10)};
  CHECK(classify_degenerate(collapse) == Degeneracy::ShapeFailure);

  // Wrong head width is a shape-contract violation.
  Architecture wrong_head;
  wrong_head.input_shape = {1, 8, 8};
  wrong_head.n_classes = 10;
  wrong_head.layers = {flat(), lin(7)};
  CHECK(classify_degenerate(wrong_head) == Degeneracy::ShapeFailure);
}

TEST_CASE("classify_degenerate: block mismatch after removal") {
  const Architecture t = residual_teacher();
  CHECK(classify_degenerate(t) == Degeneracy::Valid);
  // Removing a conv ahead of the block changes the channel count entering
  // it (8 -> 1), so the identity skip no longer matches.
  RemovalMask mask{std::vector<std::uint8_t>(t.layers.size(), 1)};
  mask.keep[0] = 0;
  const Architecture broken = apply_removal(t, mask);
  CHECK(classify_degenerate(broken) == Degeneracy::BlockMismatch);
}

TEST_CASE("property: removal param_count matches brute-force walker for all masks") {
  Architecture a;
  a.input_shape = {1, 12, 12};
  a.n_classes = 6;
  a.layers = {conv(3, 1, 1, 4), bnorm(), act(), pool(2, 2), conv(3, 1, 1, 6), flat(),
              lin(8), lin(6)};
  REQUIRE(a.layers.size() == 8);
  for (unsigned mask = 0; mask < (1u << 8); ++mask) {
    RemovalMask rm;
    for (int i = 0; i < 8; ++i) rm.keep.push_back((mask >> i) & 1u);
    const Architecture cand = apply_removal(a, rm);
    const auto sr = infer_shapes(cand);
    if (!sr.ok) continue;  // oracle only defined where shapes exist
    CHECK(param_count(cand) == naive_params_of_kept(a, mask));
  }
}

TEST_CASE("property: all-ones shrink keeps param_count; width/padding shrinks never grow it") {
  const Architecture t = conv_teacher();
  const auto vars = shrink_variables(t);
  ShrinkVector ones{std::vector<double>(vars.size(), 1.0)};
  CHECK(param_count(apply_shrinkage(t, ones)) == param_count(t));

  // Monotone per coordinate for n_out and padding factors. Kernel factors
  // are excluded: a smaller kernel at fixed padding grows the feature map
  // ((W - k + 2p)/s + 1 rises as k drops), which can inflate a downstream
  // Linear layer; see the counterexample below.
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i].field == ShrinkVar::Field::Kernel) continue;
    long long prev = param_count(t);
    for (int level = 9; level >= 0; --level) {
      ShrinkVector v = ones;
      v.factors[i] = (level + 1) / 10.0;
      const Architecture shrunk = apply_shrinkage(t, v);
      const auto sr = infer_shapes(shrunk);
      if (!sr.ok) continue;
      const long long params = param_count(shrunk);
      CHECK(params <= prev);
      prev = params;
    }
  }
}

TEST_CASE("kernel shrinkage can grow the total parameter count (documented)") {
  // conv k3 p1 on 7x7 keeps 7x7; k1 p1 yields 9x9, so the flatten feeding
  // the linear head grows. The reward handles this via the C >= 0 clamp.
  Architecture a;
  a.input_shape = {1, 7, 7};
  a.n_classes = 10;
  a.layers = {conv(3, 1, 1, 8), flat(), lin(10)};
  const auto vars = shrink_variables(a);
  REQUIRE(vars.size() == 3);
  ShrinkVector v{{1.0 / 3.0 + 1e-9, 1.0, 1.0}};  // kernel 3 -> 1
  v.factors[0] = 0.4;                            // round(0.4*3) = 1
  const Architecture shrunk = apply_shrinkage(a, v);
  CHECK(shrunk.layers[0].kernel == 1);
  CHECK(param_count(shrunk) > param_count(a));
}

TEST_CASE("encode_layer_features: normalization and determinism") {
  const Architecture t = conv_teacher();
  const auto feats = encode_layer_features(t);
  REQUIRE(feats.size() == t.layers.size());

  // The widest layer normalizes to 1.
  double max_n = 0;
  for (const auto& f : feats) max_n = std::max(max_n, f.n_out);
  CHECK(max_n == doctest::Approx(1.0));
  CHECK(feats[10].n_out == doctest::Approx(1.0));  // linear 128 is the widest

  for (const auto& f : feats) {
    CHECK(f.skip_start == 0.0);
    CHECK(f.skip_end == 0.0);
    CHECK(f.kernel <= 1.0);
    CHECK(f.n_out <= 1.0);
  }

  // Structurally identical layers encode identically.
  Architecture twin;
  twin.input_shape = {1, 10, 10};
  twin.n_classes = 10;
  twin.layers = {conv(3, 1, 1, 8), conv(3, 1, 1, 8), flat(), lin(10)};
  const auto tf = encode_layer_features(twin);
  CHECK(tf[0].type_code == tf[1].type_code);
  CHECK(tf[0].kernel == tf[1].kernel);
  CHECK(tf[0].n_out == tf[1].n_out);

  // Same inputs, same outputs.
  const auto again = encode_layer_features(t);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    CHECK(feats[i].type_code == again[i].type_code);
    CHECK(feats[i].n_out == again[i].n_out);
  }
}

TEST_CASE("architecture text format round-trips") {
  for (const Architecture& a :
       {conv_teacher(), residual_teacher(), surrogate8_teacher(), tiny_all_layers()}) {
    const std::string text = serialize_architecture(a);
    CHECK(parse_architecture(text) == a);
  }
}

TEST_CASE("architecture parser rejects malformed input") {
  CHECK_THROWS_AS(parse_architecture(""), ArchParseError);
  CHECK_THROWS_AS(parse_architecture("not-a-header\n"), ArchParseError);
  CHECK_THROWS_AS(parse_architecture("ncomp-arch v1\nclasses 10\n"), ArchParseError);
  CHECK_THROWS_AS(
      parse_architecture("ncomp-arch v1\ninput 1 8 8\nclasses 10\n"
                         "layer warp 1 1 0 0 0 0\n"),
      ArchParseError);
  // Skip fields disagreeing with the block span.
  CHECK_THROWS_AS(
      parse_architecture("ncomp-arch v1\ninput 1 8 8\nclasses 10\nblock 0 1\n"
                         "layer conv2d 3 1 1 4 1 2\n"
                         "layer conv2d 3 1 1 4 9 9\n"),
      ArchParseError);
}

TEST_CASE("shipped teacher files parse and are valid") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(NCOMP_SOURCE_DIR) / "configs";
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".arch") continue;
    const Architecture a = load_architecture(entry.path().string());
    CHECK(classify_degenerate(a) == Degeneracy::Valid);
    ++seen;
  }
  CHECK(seen >= 3);
}

TEST_CASE("arch_hash distinguishes structures") {
  const Architecture t = conv_teacher();
  Architecture u = t;
  u.layers[0].n_out += 1;
  CHECK(arch_hash(t) != arch_hash(u));
  CHECK(arch_hash(t) == arch_hash(conv_teacher()));
}
