#include "ncomp/net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ncomp/rng.hpp"

namespace ncomp {

using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXd;

namespace {
constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
}  // namespace

struct TrainableNet::LayerState {
  LayerSpec spec;
  Shape in, out;
  int w_off = -1, w_rows = 0, w_cols = 0;
  int b_off = -1, b_len = 0;
  int bn_index = -1;
};

struct TrainableNet::Cache {
  std::vector<MatrixXd> acts;      // acts[i] = input of layer i; acts[L] = logits
  std::vector<MatrixXd> cols;      // conv im2col buffers
  std::vector<MatrixXi> pool_idx;  // maxpool argmax source index
  std::vector<MatrixXd> bn_xhat;
  std::vector<VectorXd> bn_istd;
};

TrainableNet::TrainableNet(const Architecture& arch, std::uint64_t seed,
                           const DegeneracyLimits& limits)
    : arch_(arch), seed_(seed) {
  if (classify_degenerate(arch, limits) != Degeneracy::Valid)
    throw std::invalid_argument("cannot build a degenerate architecture");

  const ShapeResult sr = infer_shapes(arch);
  long long total = 0;
  Shape in = arch.input_shape;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    LayerState st;
    st.spec = arch.layers[i];
    st.in = in;
    st.out = sr.shapes[i];
    switch (st.spec.type) {
      case LayerType::Conv2d:
        st.w_rows = st.spec.n_out;
        st.w_cols = in.c * st.spec.kernel * st.spec.kernel;
        st.w_off = static_cast<int>(total);
        total += 1LL * st.w_rows * st.w_cols;
        st.b_len = st.spec.n_out;
        st.b_off = static_cast<int>(total);
        total += st.b_len;
        break;
      case LayerType::Linear:
        st.w_rows = st.spec.n_out;
        st.w_cols = static_cast<int>(in.flat());
        st.w_off = static_cast<int>(total);
        total += 1LL * st.w_rows * st.w_cols;
        st.b_len = st.spec.n_out;
        st.b_off = static_cast<int>(total);
        total += st.b_len;
        break;
      case LayerType::BatchNorm:
        st.w_rows = in.c;  // gamma
        st.w_cols = 1;
        st.w_off = static_cast<int>(total);
        total += in.c;
        st.b_len = in.c;  // beta
        st.b_off = static_cast<int>(total);
        total += in.c;
        st.bn_index = static_cast<int>(bn_mean_.size());
        bn_mean_.push_back(VectorXd::Zero(in.c));
        bn_var_.push_back(VectorXd::Ones(in.c));
        break;
      default:
        break;
    }
    layers_.push_back(st);
    in = st.out;
  }

  theta_ = VectorXd::Zero(total);
  Rng rng(seed);
  for (const LayerState& st : layers_) {
    if (st.spec.type == LayerType::Conv2d || st.spec.type == LayerType::Linear) {
      const double scale = std::sqrt(2.0 / st.w_cols);
      for (int i = 0; i < st.w_rows * st.w_cols; ++i)
        theta_(st.w_off + i) = scale * rng.normal();
      // biases stay zero
    } else if (st.spec.type == LayerType::BatchNorm) {
      for (int i = 0; i < st.w_rows; ++i) theta_(st.w_off + i) = 1.0;  // gamma
    }
  }
}

TrainableNet::TrainableNet(const TrainableNet&) = default;
TrainableNet::TrainableNet(TrainableNet&&) noexcept = default;
TrainableNet& TrainableNet::operator=(const TrainableNet&) = default;
TrainableNet& TrainableNet::operator=(TrainableNet&&) noexcept = default;
TrainableNet::~TrainableNet() = default;

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

// (in_c*k*k, B*OH*OW) patch matrix; out-of-bounds taps are zero.
MatrixXd im2col(const MatrixXd& x, const Shape& in, int k, int stride, int pad, int oh,
                int ow) {
  const int B = static_cast<int>(x.cols());
  MatrixXd col = MatrixXd::Zero(1LL * in.c * k * k, 1LL * B * oh * ow);
  for (int j = 0; j < B; ++j) {
    const double* xj = x.col(j).data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const long long cidx = 1LL * j * oh * ow + 1LL * oy * ow + ox;
        double* dst = col.col(cidx).data();
        for (int c = 0; c < in.c; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= in.h) continue;
            const double* src = xj + (1LL * c * in.h + iy) * in.w;
            double* drow = dst + (1LL * c * k + ky) * k;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= in.w) continue;
              drow[kx] = src[ix];
            }
          }
        }
      }
    }
  }
  return col;
}

// Scatter-add of patch gradients back onto the input image layout.
void col2im(const MatrixXd& dcol, const Shape& in, int k, int stride, int pad, int oh,
            int ow, MatrixXd& dx) {
  const int B = static_cast<int>(dx.cols());
  for (int j = 0; j < B; ++j) {
    double* dxj = dx.col(j).data();
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const long long cidx = 1LL * j * oh * ow + 1LL * oy * ow + ox;
        const double* src = dcol.col(cidx).data();
        for (int c = 0; c < in.c; ++c) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= in.h) continue;
            double* drow = dxj + (1LL * c * in.h + iy) * in.w;
            const double* srow = src + (1LL * c * k + ky) * k;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= in.w) continue;
              drow[ix] += srow[kx];
            }
          }
        }
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd TrainableNet::forward_impl(const MatrixXd& x0, bool training,
                                           Cache* cache) const {
  if (x0.rows() != arch_.input_shape.flat())
    throw std::invalid_argument("input rows " + std::to_string(x0.rows()) +
                                " != architecture input size " +
                                std::to_string(arch_.input_shape.flat()));
  const int B = static_cast<int>(x0.cols());
  const int L = static_cast<int>(layers_.size());

  std::vector<MatrixXd> local_acts;
  std::vector<MatrixXd>& acts = cache ? cache->acts : local_acts;
  acts.assign(1, x0);
  acts.reserve(L + 1);
  if (cache) {
    cache->cols.assign(L, MatrixXd());
    cache->pool_idx.assign(L, MatrixXi());
    cache->bn_xhat.assign(L, MatrixXd());
    cache->bn_istd.assign(L, VectorXd());
  }

  for (int li = 0; li < L; ++li) {
    const LayerState& st = layers_[li];
    const MatrixXd& x = acts.back();
    MatrixXd y;
    switch (st.spec.type) {
      case LayerType::Conv2d: {
        const int k = st.spec.kernel, s = st.spec.stride, p = st.spec.padding;
        const int oh = st.out.h, ow = st.out.w;
        MatrixXd col = im2col(x, st.in, k, s, p, oh, ow);
        const Eigen::Map<const MatrixXd> W(theta_.data() + st.w_off, st.w_rows, st.w_cols);
        const Eigen::Map<const VectorXd> b(theta_.data() + st.b_off, st.b_len);
        MatrixXd out_all(st.w_rows, col.cols());
        out_all.noalias() = W * col;
        out_all.colwise() += b;
        y.resize(st.out.flat(), B);
        for (int j = 0; j < B; ++j)
          for (int oc = 0; oc < st.out.c; ++oc)
            for (int pos = 0; pos < oh * ow; ++pos)
              y(1LL * oc * oh * ow + pos, j) = out_all(oc, 1LL * j * oh * ow + pos);
        if (cache) cache->cols[li] = std::move(col);
        break;
      }
      case LayerType::Linear: {
        const Eigen::Map<const MatrixXd> W(theta_.data() + st.w_off, st.w_rows, st.w_cols);
        const Eigen::Map<const VectorXd> b(theta_.data() + st.b_off, st.b_len);
        y.noalias() = W * x;
        y.colwise() += b;
        break;
      }
      case LayerType::MaxPool: {
        const int k = st.spec.kernel, s = st.spec.stride, p = st.spec.padding;
        const int oh = st.out.h, ow = st.out.w;
        y.resize(st.out.flat(), B);
        MatrixXi idx(st.out.flat(), B);
        for (int j = 0; j < B; ++j) {
          const double* xj = x.col(j).data();
          for (int c = 0; c < st.in.c; ++c) {
            for (int oy = 0; oy < oh; ++oy) {
              for (int ox = 0; ox < ow; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                int best_idx = -1;
                for (int ky = 0; ky < k; ++ky) {
                  const int iy = oy * s - p + ky;
                  if (iy < 0 || iy >= st.in.h) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * s - p + kx;
                    if (ix < 0 || ix >= st.in.w) continue;
                    const long long fi = (1LL * c * st.in.h + iy) * st.in.w + ix;
                    if (xj[fi] > best) {
                      best = xj[fi];
                      best_idx = static_cast<int>(fi);
                    }
                  }
                }
                const long long fo = (1LL * c * oh + oy) * ow + ox;
                y(fo, j) = best;
                idx(fo, j) = best_idx;
              }
            }
          }
        }
        if (cache) cache->pool_idx[li] = std::move(idx);
        break;
      }
      case LayerType::Activation:
        y = x.cwiseMax(0.0);
        break;
      case LayerType::BatchNorm: {
        const Eigen::Map<const VectorXd> gamma(theta_.data() + st.w_off, st.in.c);
        const Eigen::Map<const VectorXd> beta(theta_.data() + st.b_off, st.in.c);
        const int hw = st.in.h * st.in.w;
        y.resize(st.in.flat(), B);
        VectorXd mean(st.in.c), var(st.in.c);
        if (training) {
          for (int c = 0; c < st.in.c; ++c) {
            double sum = 0, sq = 0;
            for (int j = 0; j < B; ++j) {
              const double* src = x.col(j).data() + 1LL * c * hw;
              for (int pxy = 0; pxy < hw; ++pxy) {
                sum += src[pxy];
                sq += src[pxy] * src[pxy];
              }
            }
            const double nelem = static_cast<double>(B) * hw;
            mean(c) = sum / nelem;
            var(c) = sq / nelem - mean(c) * mean(c);
            if (var(c) < 0) var(c) = 0;
          }
          bn_mean_[st.bn_index] = (1.0 - kBnMomentum) * bn_mean_[st.bn_index] +
                                  kBnMomentum * mean;
          bn_var_[st.bn_index] = (1.0 - kBnMomentum) * bn_var_[st.bn_index] +
                                 kBnMomentum * var;
        } else {
          mean = bn_mean_[st.bn_index];
          var = bn_var_[st.bn_index];
        }
        MatrixXd xhat(st.in.flat(), B);
        VectorXd istd(st.in.c);
        for (int c = 0; c < st.in.c; ++c) {
          istd(c) = 1.0 / std::sqrt(var(c) + kBnEps);
          for (int j = 0; j < B; ++j) {
            const double* src = x.col(j).data() + 1LL * c * hw;
            double* xh = xhat.col(j).data() + 1LL * c * hw;
            double* dst = y.col(j).data() + 1LL * c * hw;
            for (int pxy = 0; pxy < hw; ++pxy) {
              xh[pxy] = (src[pxy] - mean(c)) * istd(c);
              dst[pxy] = gamma(c) * xh[pxy] + beta(c);
            }
          }
        }
        if (cache) {
          cache->bn_xhat[li] = std::move(xhat);
          cache->bn_istd[li] = std::move(istd);
        }
        break;
      }
      case LayerType::Flatten:
        y = x;  // CHW flattening is the storage order already
        break;
    }
    acts.push_back(std::move(y));

    // Identity skip: add the activation entering the block to its output.
    for (const Block& blk : arch_.blocks)
      if (blk.end == li) acts.back() += acts[blk.start];
  }
  return acts.back();
}

Eigen::MatrixXd TrainableNet::forward(const MatrixXd& inputs) const {
  const MatrixXd logits = forward_impl(inputs, /*training=*/false, nullptr);
  return logits.transpose();
}

Eigen::MatrixXd TrainableNet::forward(const Dataset& data, int begin, int end) const {
  return forward(data.batch_inputs(begin, end - begin));
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

double kd_loss(const MatrixXd& logits, const MatrixXd& z) {
  if (logits.rows() != z.rows() || logits.cols() != z.cols())
    throw std::invalid_argument("kd_loss: logits and teacher logits differ in shape");
  if (logits.rows() == 0) throw std::invalid_argument("kd_loss: empty batch");
  return (logits - z).squaredNorm() / static_cast<double>(logits.rows());
}

double cross_entropy_loss(const MatrixXd& logits, const std::vector<int>& labels) {
  const int n = static_cast<int>(logits.rows());
  if (n != static_cast<int>(labels.size()))
    throw std::invalid_argument("cross_entropy: label count mismatch");
  if (n == 0) throw std::invalid_argument("cross_entropy: empty batch");
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const auto row = logits.row(i);
    const double mx = row.maxCoeff();
    const double lse = std::log((row.array() - mx).exp().sum()) + mx;
    total += lse - row(labels[i]);
  }
  return total / n;
}

double combined_loss(const MatrixXd& logits, const std::vector<int>& labels,
                     const MatrixXd& z, double lambda) {
  if (z.rows() == 0) throw std::invalid_argument("combined loss requires teacher logits");
  return cross_entropy_loss(logits, labels) + lambda * kd_loss(logits, z);
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

double TrainableNet::loss_and_grad(const MatrixXd& x, const std::vector<int>& labels,
                                   const MatrixXd& z, const LossSpec& loss,
                                   VectorXd* grad) const {
  Cache cache;
  const MatrixXd logits_cm = forward_impl(x, /*training=*/true, &cache);  // (classes, B)
  const int B = static_cast<int>(x.cols());
  const int C = static_cast<int>(logits_cm.rows());

  const MatrixXd logits = logits_cm.transpose();  // (B, classes)
  double loss_value = 0;
  MatrixXd dlogits = MatrixXd::Zero(C, B);  // column-major, matches activations

  const bool want_hard = loss.mode != LossMode::KDOnly;
  const bool want_kd = loss.mode != LossMode::HardOnly;
  const double kd_weight = loss.mode == LossMode::KDOnly ? 1.0 : loss.lambda;

  if (want_hard) {
    if (static_cast<int>(labels.size()) != B)
      throw std::invalid_argument("loss: label count mismatch");
    loss_value += cross_entropy_loss(logits, labels);
    for (int j = 0; j < B; ++j) {
      const auto col = logits_cm.col(j);
      const double mx = col.maxCoeff();
      VectorXd p = (col.array() - mx).exp();
      p /= p.sum();
      p(labels[j]) -= 1.0;
      dlogits.col(j) += p / B;
    }
  }
  if (want_kd) {
    if (z.rows() != B || z.cols() != C)
      throw std::invalid_argument("loss: teacher logits absent or mis-shaped");
    loss_value += kd_weight * kd_loss(logits, z);
    dlogits += kd_weight * 2.0 / B * (logits_cm - MatrixXd(z.transpose()));
  }

  if (!grad) return loss_value;
  grad->setZero(theta_.size());

  const int L = static_cast<int>(layers_.size());
  std::vector<MatrixXd> dacts(L + 1);
  dacts[L] = std::move(dlogits);

  for (int li = L - 1; li >= 0; --li) {
    // Skip-path gradient flows straight from the block output to its input.
    for (const Block& blk : arch_.blocks)
      if (blk.end == li) {
        if (dacts[blk.start].size() == 0)
          dacts[blk.start] = MatrixXd::Zero(cache.acts[blk.start].rows(), B);
        dacts[blk.start] += dacts[li + 1];
      }

    const LayerState& st = layers_[li];
    const MatrixXd& dy = dacts[li + 1];
    const MatrixXd& xin = cache.acts[li];
    MatrixXd dx;
    switch (st.spec.type) {
      case LayerType::Conv2d: {
        const int k = st.spec.kernel, s = st.spec.stride, p = st.spec.padding;
        const int oh = st.out.h, ow = st.out.w;
        MatrixXd dy_all(st.w_rows, 1LL * B * oh * ow);
        for (int j = 0; j < B; ++j)
          for (int oc = 0; oc < st.out.c; ++oc)
            for (int pos = 0; pos < oh * ow; ++pos)
              dy_all(oc, 1LL * j * oh * ow + pos) = dy(1LL * oc * oh * ow + pos, j);
        const Eigen::Map<const MatrixXd> W(theta_.data() + st.w_off, st.w_rows, st.w_cols);
        Eigen::Map<MatrixXd> gW(grad->data() + st.w_off, st.w_rows, st.w_cols);
        Eigen::Map<VectorXd> gb(grad->data() + st.b_off, st.b_len);
        gW.noalias() += dy_all * cache.cols[li].transpose();
        gb += dy_all.rowwise().sum();
        MatrixXd dcol(st.w_cols, dy_all.cols());
        dcol.noalias() = W.transpose() * dy_all;
        dx = MatrixXd::Zero(st.in.flat(), B);
        col2im(dcol, st.in, k, s, p, oh, ow, dx);
        break;
      }
      case LayerType::Linear: {
        const Eigen::Map<const MatrixXd> W(theta_.data() + st.w_off, st.w_rows, st.w_cols);
        Eigen::Map<MatrixXd> gW(grad->data() + st.w_off, st.w_rows, st.w_cols);
        Eigen::Map<VectorXd> gb(grad->data() + st.b_off, st.b_len);
        gW.noalias() += dy * xin.transpose();
        gb += dy.rowwise().sum();
        dx.noalias() = W.transpose() * dy;
        break;
      }
      case LayerType::MaxPool: {
        dx = MatrixXd::Zero(st.in.flat(), B);
        const MatrixXi& idx = cache.pool_idx[li];
        for (int j = 0; j < B; ++j)
          for (int fo = 0; fo < st.out.flat(); ++fo)
            if (idx(fo, j) >= 0) dx(idx(fo, j), j) += dy(fo, j);
        break;
      }
      case LayerType::Activation:
        dx = (xin.array() > 0.0).cast<double>().matrix().cwiseProduct(dy);
        break;
      case LayerType::BatchNorm: {
        const Eigen::Map<const VectorXd> gamma(theta_.data() + st.w_off, st.in.c);
        Eigen::Map<VectorXd> dgamma(grad->data() + st.w_off, st.in.c);
        Eigen::Map<VectorXd> dbeta(grad->data() + st.b_off, st.in.c);
        const MatrixXd& xhat = cache.bn_xhat[li];
        const VectorXd& istd = cache.bn_istd[li];
        const int hw = st.in.h * st.in.w;
        const double nelem = static_cast<double>(B) * hw;
        dx.resize(st.in.flat(), B);
        for (int c = 0; c < st.in.c; ++c) {
          double sum_dy = 0, sum_dy_xhat = 0;
          for (int j = 0; j < B; ++j) {
            const double* dyp = dy.col(j).data() + 1LL * c * hw;
            const double* xh = xhat.col(j).data() + 1LL * c * hw;
            for (int pxy = 0; pxy < hw; ++pxy) {
              sum_dy += dyp[pxy];
              sum_dy_xhat += dyp[pxy] * xh[pxy];
            }
          }
          dgamma(c) += sum_dy_xhat;
          dbeta(c) += sum_dy;
          const double g = gamma(c);
          for (int j = 0; j < B; ++j) {
            const double* dyp = dy.col(j).data() + 1LL * c * hw;
            const double* xh = xhat.col(j).data() + 1LL * c * hw;
            double* dxp = dx.col(j).data() + 1LL * c * hw;
            for (int pxy = 0; pxy < hw; ++pxy)
              dxp[pxy] = g * istd(c) / nelem *
                         (nelem * dyp[pxy] - sum_dy - xh[pxy] * sum_dy_xhat);
          }
        }
        break;
      }
      case LayerType::Flatten:
        dx = dy;
        break;
    }
    if (dacts[li].size() == 0) dacts[li] = std::move(dx);
    else dacts[li] += dx;
  }
  return loss_value;
}

double TrainableNet::batch_loss(const MatrixXd& x, const std::vector<int>& labels,
                                const MatrixXd& z, const LossSpec& loss) const {
  return loss_and_grad(x, labels, z, loss, nullptr);
}

Eigen::VectorXd TrainableNet::batch_grad(const MatrixXd& x, const std::vector<int>& labels,
                                         const MatrixXd& z, const LossSpec& loss) const {
  VectorXd grad;
  loss_and_grad(x, labels, z, loss, &grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Training and evaluation
// ---------------------------------------------------------------------------

void TrainableNet::train(const Dataset& data, const LossSpec& loss, const TrainOptions& opt) {
  if (opt.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (data.n < 1) throw std::invalid_argument("train: empty dataset");
  if ((loss.mode == LossMode::KDOnly || loss.mode == LossMode::Combined) &&
      !data.has_logits())
    throw std::invalid_argument("train: loss mode needs teacher logits");

  AdamState adam = AdamState::sized_like(theta_, opt.lr);
  std::vector<int> order(data.n);
  for (int i = 0; i < data.n; ++i) order[i] = i;

  VectorXd grad(theta_.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    Rng rng(derive_seed(seed_, 0xE70C, epoch));
    for (int i = data.n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(order[i], order[j]);
    }
    for (int begin = 0; begin < data.n; begin += opt.batch_size) {
      const int count = std::min(opt.batch_size, data.n - begin);
      const MatrixXd x = data.batch_inputs(order, begin, count);
      const std::vector<int> labels = data.batch_labels(order, begin, count);
      const MatrixXd z = data.has_logits() ? MatrixXd(data.batch_logits(order, begin, count).transpose())
                                           : MatrixXd();
      const double loss_value = loss_and_grad(x, labels, z, loss, &grad);
      if (!std::isfinite(loss_value))
        throw TrainDivergence("training loss went non-finite at epoch " +
                              std::to_string(epoch));
      if (opt.optimizer == TrainOptions::Optimizer::Adam) {
        adam_step(adam, theta_, VectorXd(-grad));
      } else {
        theta_ -= opt.lr * grad;
      }
    }
  }
}

double TrainableNet::evaluate_accuracy(const Dataset& data) const {
  if (data.n < 1) throw std::invalid_argument("evaluate_accuracy: empty dataset");
  long long correct = 0;
  const int chunk = 256;
  for (int begin = 0; begin < data.n; begin += chunk) {
    const int count = std::min(chunk, data.n - begin);
    const MatrixXd logits = forward(data.batch_inputs(begin, count));
    for (int i = 0; i < count; ++i) {
      int arg = 0;
      logits.row(i).maxCoeff(&arg);
      correct += arg == data.labels[begin + i];
    }
  }
  return static_cast<double>(correct) / data.n;
}

std::vector<std::pair<VectorXd, VectorXd>> TrainableNet::batchnorm_stats() const {
  std::vector<std::pair<VectorXd, VectorXd>> out;
  for (std::size_t i = 0; i < bn_mean_.size(); ++i) out.push_back({bn_mean_[i], bn_var_[i]});
  return out;
}

void TrainableNet::set_batchnorm_stats(
    const std::vector<std::pair<VectorXd, VectorXd>>& stats) {
  if (stats.size() != bn_mean_.size())
    throw std::invalid_argument("batchnorm stats count mismatch");
  for (std::size_t i = 0; i < stats.size(); ++i) {
    bn_mean_[i] = stats[i].first;
    bn_var_[i] = stats[i].second;
  }
}

}  // namespace ncomp
