// Relative pose regressor: a stack of 12 input channels (live stereo pair
// followed by map stereo pair), strided convolutions with interleaved max
// pooling, spatial pyramid pooling, and a fully connected head ending in a
// linear 3-output layer (x, y, theta). Forward and backward passes are
// written out by hand on top of Eigen GEMMs; the scalar type is a template
// parameter so the same code runs in float for training and in double for
// gradient checking.

#ifndef TNR_MODEL_HPP_
#define TNR_MODEL_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnr/geometry.hpp"

namespace tnr {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConvStage {
  int kernel = 3;
  int stride = 1;
  int pad = 0;
  int in_channels = 0;
  int out_channels = 0;
  int pool_kernel = 0;  // 0 = no pooling after this stage
  int pool_stride = 0;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct MapShape {
  int c = 0;
  int h = 0;
  int w = 0;
};

struct NetworkConfig {
  int input_height = 96;
  int input_width = 128;
  int input_channels = 12;
  std::vector<ConvStage> conv;
  std::vector<int> spp_bins{5, 3, 2, 1};
  std::vector<int> fc_widths{4096, 4096};
  int output_dim = 3;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;

  /// The AlexNet convolution stack (conv1..conv5, pool5 replaced by SPP)
  /// on 512x384 inputs with 4096-wide FC layers.
  static NetworkConfig full() {
    NetworkConfig c;
    c.input_height = 384;
    c.input_width = 512;
    c.conv = {{11, 4, 0, 12, 96, 3, 2},
              {5, 1, 2, 96, 256, 3, 2},
              {3, 1, 1, 256, 384, 0, 0},
              {3, 1, 1, 384, 384, 0, 0},
              {3, 1, 1, 384, 256, 0, 0}};
    return c;
  }

  /// Reduced-depth variant with the same pattern (stride-4 first conv,
  /// interleaved max pooling) for 128x96 inputs.
  static NetworkConfig desk() {
    NetworkConfig c;
    c.input_height = 96;
    c.input_width = 128;
    c.conv = {{11, 4, 5, 12, 24, 3, 2},
              {5, 1, 2, 24, 48, 3, 2},
              {3, 1, 1, 48, 64, 0, 0}};
    c.fc_widths = {512, 512};
    return c;
  }

  /// Two conv stages on an 8x8 input; small enough for finite differences.
  static NetworkConfig tiny() {
    NetworkConfig c;
    c.input_height = 8;
    c.input_width = 8;
    c.conv = {{3, 1, 1, 12, 4, 2, 2}, {3, 1, 1, 4, 5, 0, 0}};
    c.spp_bins = {2, 1};
    c.fc_widths = {8};
    return c;
  }

  /// Shape after each conv stage (including its pooling) for an input of
  /// the given spatial size.
  std::vector<MapShape> stage_shapes(int h, int w) const {
    std::vector<MapShape> out;
    int c = input_channels;
    for (const auto& s : conv) {
      if (s.in_channels != c)
        throw ModelError("conv stage expects " + std::to_string(s.in_channels) +
                         " input channels, previous stage has " +
                         std::to_string(c));
      h = (h + 2 * s.pad - s.kernel) / s.stride + 1;
      w = (w + 2 * s.pad - s.kernel) / s.stride + 1;
      if (h <= 0 || w <= 0) throw ModelError("conv stage output is empty");
      if (s.pool_kernel > 0) {
        h = (h - s.pool_kernel) / s.pool_stride + 1;
        w = (w - s.pool_kernel) / s.pool_stride + 1;
        if (h <= 0 || w <= 0) throw ModelError("pooling output is empty");
      }
      c = s.out_channels;
      out.push_back({c, h, w});
    }
    return out;
  }

  MapShape feature_shape() const {
    if (conv.empty()) return {input_channels, input_height, input_width};
    return stage_shapes(input_height, input_width).back();
  }

  int spp_cells() const {
    int n = 0;
    for (int b : spp_bins) n += b * b;
    return n;
  }

  int spp_length() const { return feature_shape().c * spp_cells(); }

  void validate() const {
    if (input_channels != 12)
      throw ModelError("input_channels must be 12 (two stereo RGB pairs)");
    if (output_dim != 3) throw ModelError("output_dim must be 3");
    if (conv.empty()) throw ModelError("conv stack is empty");
    if (spp_bins.empty()) throw ModelError("spp_bins is empty");
    for (int b : spp_bins)
      if (b < 1) throw ModelError("spp bins must be >= 1");
    for (int f : fc_widths)
      if (f < 1) throw ModelError("fc widths must be >= 1");
    for (const auto& s : conv)
      if (s.kernel < 1 || s.stride < 1 || s.pad < 0 || s.out_channels < 1 ||
          (s.pool_kernel > 0 && s.pool_stride < 1))
        throw ModelError("invalid conv stage parameters");
    const auto f = feature_shape();
    const int need = *std::max_element(spp_bins.begin(), spp_bins.end());
    if (f.h < need || f.w < need)
      throw ModelError("final feature map " + std::to_string(f.h) + "x" +
                       std::to_string(f.w) + " is smaller than the largest " +
                       "pyramid grid " + std::to_string(need));
  }

  std::size_t num_layers() const { return conv.size() + fc_widths.size() + 1; }
};

/// N x C x H x W, contiguous, row-major in the last index.
template <typename T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), data(std::size_t(n_) * c_ * h_ * w_, T(0)) {}

  T& at(int i, int ch, int y, int x) {
    return data[((std::size_t(i) * c + ch) * h + y) * w + x];
  }
  const T& at(int i, int ch, int y, int x) const {
    return data[((std::size_t(i) * c + ch) * h + y) * w + x];
  }
  std::size_t sample_size() const { return std::size_t(c) * h * w; }
};

/// Learnable tensors: conv stages first, then the FC layers.
template <typename T>
struct Params {
  std::vector<Mat<T>> weights;
  std::vector<Vec<T>> biases;

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += std::size_t(w.size());
    for (const auto& b : biases) n += std::size_t(b.size());
    return n;
  }

  /// Flat view across all tensors: weights in layer order, then biases.
  T& flat(std::size_t i) {
    for (auto& w : weights) {
      if (i < std::size_t(w.size())) return w.data()[i];
      i -= std::size_t(w.size());
    }
    for (auto& b : biases) {
      if (i < std::size_t(b.size())) return b.data()[i];
      i -= std::size_t(b.size());
    }
    throw std::out_of_range("Params::flat");
  }

  Params zeros_like() const {
    Params p;
    for (const auto& w : weights) p.weights.push_back(Mat<T>::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) p.biases.push_back(Vec<T>::Zero(b.size()));
    return p;
  }

  template <typename U>
  Params<U> cast() const {
    Params<U> p;
    for (const auto& w : weights) p.weights.push_back(w.template cast<U>());
    for (const auto& b : biases) p.biases.push_back(b.template cast<U>());
    return p;
  }

  bool all_finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

template <typename T>
struct RegressorState {
  NetworkConfig config;
  Params<T> params;
  std::int64_t step = 0;

  template <typename U>
  RegressorState<U> cast() const {
    return {config, params.template cast<U>(), step};
  }
};

/// Fan-in scaled normal weights (He for ReLU layers, a 0.1-scaled LeCun
/// draw for the linear output layer), zero biases. Weights are drawn in
/// double so float and double states built from one seed agree.
template <typename T = float>
RegressorState<T> init(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  RegressorState<T> st;
  st.config = config;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto layer = [&](int rows, int cols, double stddev) {
    Mat<T> w(rows, cols);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = static_cast<T>(stddev * gauss(rng));
    st.params.weights.push_back(std::move(w));
    st.params.biases.push_back(Vec<T>::Zero(rows));
  };
  for (const auto& s : config.conv) {
    const int fan_in = s.kernel * s.kernel * s.in_channels;
    layer(s.out_channels, fan_in, std::sqrt(2.0 / fan_in));
  }
  int in = config.spp_length();
  for (int width : config.fc_widths) {
    layer(width, in, std::sqrt(2.0 / in));
    in = width;
  }
  layer(config.output_dim, in, 0.1 * std::sqrt(1.0 / in));
  return st;
}

// ---------------------------------------------------------------------------
// Building blocks. Feature maps of one sample are stored as a C x (H*W)
// column-major matrix, i.e. channel-interleaved (HWC) in memory.

namespace nn {

template <typename T>
struct FeatureMap {
  int c = 0, h = 0, w = 0;
  Mat<T> data;  // c x (h*w)
};

/// Patch matrix (k*k*C) x (oh*ow); row order is (ky, kx, channel).
template <typename T>
void im2col(const FeatureMap<T>& in, const ConvStage& s, int oh, int ow,
            Mat<T>& cols) {
  const int C = in.c, K = s.kernel;
  cols.resize(Eigen::Index(K) * K * C, Eigen::Index(oh) * ow);
  T* dst = cols.data();
  const T* src = in.data.data();
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      for (int ky = 0; ky < K; ++ky) {
        const int iy = oy * s.stride - s.pad + ky;
        for (int kx = 0; kx < K; ++kx) {
          const int ix = ox * s.stride - s.pad + kx;
          if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w)
            std::fill(dst, dst + C, T(0));
          else
            std::memcpy(dst, src + (std::size_t(iy) * in.w + ix) * C, sizeof(T) * C);
          dst += C;
        }
      }
    }
}

template <typename T>
void col2im_add(const Mat<T>& dcols, const ConvStage& s, int oh, int ow,
                FeatureMap<T>& din) {
  const int C = din.c, K = s.kernel;
  const T* src = dcols.data();
  T* dst = din.data.data();
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox)
      for (int ky = 0; ky < K; ++ky) {
        const int iy = oy * s.stride - s.pad + ky;
        for (int kx = 0; kx < K; ++kx) {
          const int ix = ox * s.stride - s.pad + kx;
          if (iy >= 0 && iy < din.h && ix >= 0 && ix < din.w) {
            T* d = dst + (std::size_t(iy) * din.w + ix) * C;
            for (int c = 0; c < C; ++c) d[c] += src[c];
          }
          src += C;
        }
      }
}

/// Max pooling without padding; `arg` receives the flat input index of
/// each output's winner.
template <typename T>
FeatureMap<T> max_pool(const FeatureMap<T>& in, int k, int stride,
                       std::vector<int>& arg) {
  FeatureMap<T> out;
  out.c = in.c;
  out.h = (in.h - k) / stride + 1;
  out.w = (in.w - k) / stride + 1;
  out.data.resize(in.c, Eigen::Index(out.h) * out.w);
  arg.assign(std::size_t(out.data.size()), 0);
  const T* src = in.data.data();
  T* dst = out.data.data();
  for (int oy = 0; oy < out.h; ++oy)
    for (int ox = 0; ox < out.w; ++ox) {
      const std::size_t o = (std::size_t(oy) * out.w + ox) * in.c;
      for (int c = 0; c < in.c; ++c) {
        T best = -std::numeric_limits<T>::infinity();
        int best_i = 0;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const int i = ((oy * stride + ky) * in.w + ox * stride + kx) * in.c + c;
            if (src[i] > best) {
              best = src[i];
              best_i = i;
            }
          }
        dst[o + c] = best;
        arg[o + c] = best_i;
      }
    }
  return out;
}

/// Cell boundaries of bin `i` out of `b` over an extent `n`: rows
/// [floor(i*n/b), ceil((i+1)*n/b)), so neighbouring cells may overlap by one
/// pixel and every pixel is covered.
inline std::pair<int, int> spp_cell(int i, int b, int n) {
  const int start = (i * n) / b;
  const int end = ((i + 1) * n + b - 1) / b;
  return {start, end};
}

/// Spatial pyramid max pooling. Output layout: level, then channel, then
/// bin row, then bin column; length C * sum(b^2).
template <typename T>
Vec<T> spp(const FeatureMap<T>& in, const std::vector<int>& bins,
           std::vector<int>* arg = nullptr) {
  if (bins.empty()) throw ModelError("spp: no pyramid levels");
  const int need = *std::max_element(bins.begin(), bins.end());
  if (in.h < need || in.w < need)
    throw ModelError("spp: feature map " + std::to_string(in.h) + "x" +
                     std::to_string(in.w) + " smaller than " +
                     std::to_string(need) + "x" + std::to_string(need) + " grid");
  int cells = 0;
  for (int b : bins) cells += b * b;
  Vec<T> out(Eigen::Index(in.c) * cells);
  if (arg) arg->assign(std::size_t(out.size()), 0);
  const T* src = in.data.data();
  Eigen::Index o = 0;
  for (int b : bins)
    for (int c = 0; c < in.c; ++c)
      for (int by = 0; by < b; ++by) {
        const auto [y0, y1] = spp_cell(by, b, in.h);
        for (int bx = 0; bx < b; ++bx) {
          const auto [x0, x1] = spp_cell(bx, b, in.w);
          T best = -std::numeric_limits<T>::infinity();
          int best_i = 0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
              const int i = (y * in.w + x) * in.c + c;
              if (src[i] > best) {
                best = src[i];
                best_i = i;
              }
            }
          if (arg) (*arg)[std::size_t(o)] = best_i;
          out[o++] = best;
        }
      }
  return out;
}

}  // namespace nn

// ---------------------------------------------------------------------------

/// Forward/backward engine. Holds activations of the last forward pass so
/// that `backward` can run; const-correct with respect to the parameters.
template <typename T>
class Regressor {
 public:
  explicit Regressor(const NetworkConfig& config) : config_(config) {
    config_.validate();
  }

  const NetworkConfig& config() const { return config_; }

  /// Returns predictions as output_dim x N.
  Mat<T> forward(const Params<T>& p, const Tensor4<T>& batch) {
    check_batch(batch);
    const std::size_t nconv = config_.conv.size();
    const int N = batch.n;
    samples_.resize(std::size_t(N));
    Mat<T> features(config_.spp_length(), N);
    for (int i = 0; i < N; ++i) {
      auto& sc = samples_[std::size_t(i)];
      sc.stages.resize(nconv);
      nn::FeatureMap<T> x = to_map(batch, i);
      for (std::size_t l = 0; l < nconv; ++l) {
        const ConvStage& s = config_.conv[l];
        auto& st = sc.stages[l];
        st.in = std::move(x);
        const int oh = (st.in.h + 2 * s.pad - s.kernel) / s.stride + 1;
        const int ow = (st.in.w + 2 * s.pad - s.kernel) / s.stride + 1;
        nn::im2col(st.in, s, oh, ow, cols_);
        st.act.c = s.out_channels;
        st.act.h = oh;
        st.act.w = ow;
        st.act.data.noalias() = p.weights[l] * cols_;
        st.act.data.colwise() += p.biases[l];
        st.act.data = st.act.data.cwiseMax(T(0));
        if (s.pool_kernel > 0)
          x = nn::max_pool(st.act, s.pool_kernel, s.pool_stride, st.pool_arg);
        else
          x = st.act;
      }
      sc.top = std::move(x);
      features.col(i) = nn::spp(sc.top, config_.spp_bins, &sc.spp_arg);
    }
    fc_in_.clear();
    fc_in_.push_back(std::move(features));
    const std::size_t nfc = config_.fc_widths.size() + 1;
    for (std::size_t k = 0; k < nfc; ++k) {
      const std::size_t l = nconv + k;
      Mat<T> z = p.weights[l] * fc_in_.back();
      z.colwise() += p.biases[l];
      if (k + 1 < nfc) {
        fc_in_.push_back(z.cwiseMax(T(0)));
      } else {
        return z;
      }
    }
    return {};
  }

  /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output)
  /// (output_dim x N) for the most recent forward pass.
  void backward(const Params<T>& p, const Mat<T>& d_out, Params<T>& grads) {
    const std::size_t nconv = config_.conv.size();
    const std::size_t nfc = config_.fc_widths.size() + 1;
    Mat<T> dz = d_out;
    for (std::size_t k = nfc; k-- > 0;) {
      const std::size_t l = nconv + k;
      const Mat<T>& a = fc_in_[k];
      grads.weights[l].noalias() += dz * a.transpose();
      grads.biases[l] += dz.rowwise().sum();
      Mat<T> da = p.weights[l].transpose() * dz;
      if (k > 0) da = (a.array() > T(0)).select(da, T(0));
      dz = std::move(da);
    }
    // dz now holds d(loss)/d(spp features), one column per sample.
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      auto& sc = samples_[i];
      nn::FeatureMap<T> dtop{sc.top.c, sc.top.h, sc.top.w,
                             Mat<T>::Zero(sc.top.c, Eigen::Index(sc.top.h) * sc.top.w)};
      for (Eigen::Index j = 0; j < dz.rows(); ++j)
        dtop.data.data()[sc.spp_arg[std::size_t(j)]] += dz(j, Eigen::Index(i));
      nn::FeatureMap<T> dx = std::move(dtop);
      for (std::size_t l = nconv; l-- > 0;) {
        const ConvStage& s = config_.conv[l];
        auto& st = sc.stages[l];
        Mat<T> dact;
        if (s.pool_kernel > 0) {
          dact = Mat<T>::Zero(st.act.data.rows(), st.act.data.cols());
          for (std::size_t j = 0; j < st.pool_arg.size(); ++j)
            dact.data()[st.pool_arg[j]] += dx.data.data()[j];
        } else {
          dact = std::move(dx.data);
        }
        dact = (st.act.data.array() > T(0)).select(dact, T(0));
        nn::im2col(st.in, s, st.act.h, st.act.w, cols_);
        grads.weights[l].noalias() += dact * cols_.transpose();
        grads.biases[l] += dact.rowwise().sum();
        if (l == 0) break;
        Mat<T> dcols = p.weights[l].transpose() * dact;
        dx = nn::FeatureMap<T>{st.in.c, st.in.h, st.in.w,
                               Mat<T>::Zero(st.in.c, Eigen::Index(st.in.h) * st.in.w)};
        nn::col2im_add(dcols, s, st.act.h, st.act.w, dx);
      }
    }
  }

 private:
  struct StageCache {
    nn::FeatureMap<T> in;   // stage input
    nn::FeatureMap<T> act;  // after ReLU, before pooling
    std::vector<int> pool_arg;
  };
  struct SampleCache {
    std::vector<StageCache> stages;
    nn::FeatureMap<T> top;
    std::vector<int> spp_arg;
  };

  void check_batch(const Tensor4<T>& b) const {
    if (b.n < 1 || b.c != config_.input_channels || b.h != config_.input_height ||
        b.w != config_.input_width ||
        b.data.size() != std::size_t(b.n) * b.sample_size())
      throw ModelError("batch is " + std::to_string(b.n) + "x" + std::to_string(b.c) +
                       "x" + std::to_string(b.h) + "x" + std::to_string(b.w) +
                       ", network expects Nx" + std::to_string(config_.input_channels) +
                       "x" + std::to_string(config_.input_height) + "x" +
                       std::to_string(config_.input_width));
  }

  /// NCHW sample -> HWC map. Each RGB image (group of 3 channels) is
  /// standardised to zero mean and unit variance.
  static nn::FeatureMap<T> to_map(const Tensor4<T>& b, int i) {
    nn::FeatureMap<T> m{b.c, b.h, b.w, Mat<T>(b.c, Eigen::Index(b.h) * b.w)};
    const T* src = b.data.data() + std::size_t(i) * b.sample_size();
    T* dst = m.data.data();
    const std::size_t hw = std::size_t(b.h) * b.w;
    for (int c0 = 0; c0 < b.c; c0 += 3) {
      const int c1 = std::min(b.c, c0 + 3);
      const std::size_t n = std::size_t(c1 - c0) * hw;
      double sum = 0, sq = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = src[std::size_t(c0) * hw + k];
        sum += v;
        sq += v * v;
      }
      const double mean = sum / double(n);
      const double sd = std::sqrt(std::max(0.0, sq / double(n) - mean * mean));
      const T scale = T(1.0 / (sd + 0.02));
      for (int c = c0; c < c1; ++c)
        for (std::size_t px = 0; px < hw; ++px)
          dst[px * b.c + c] = (src[std::size_t(c) * hw + px] - T(mean)) * scale;
    }
    return m;
  }

  NetworkConfig config_;
  std::vector<SampleCache> samples_;
  std::vector<Mat<T>> fc_in_;
  Mat<T> cols_;
};

/// Inference: N x 3 predictions.
template <typename T>
Mat<T> forward(const RegressorState<T>& state, const Tensor4<T>& batch) {
  Regressor<T> net(state.config);
  return net.forward(state.params, batch).transpose();
}

// ---------------------------------------------------------------------------
// Loss: 0.5 * (xi - xi_hat)^T W (xi - xi_hat), W = diag(w_x, w_y, w_theta).

inline double loss(const std::array<double, 3>& target,
                   const std::array<double, 3>& pred, const LossWeights& w = {}) {
  const double dx = target[0] - pred[0];
  const double dy = target[1] - pred[1];
  const double dt = target[2] - pred[2];
  return 0.5 * (w.w_x * dx * dx + w.w_y * dy * dy + w.w_theta * dt * dt);
}

inline double loss(const Pose2& target, const Pose2& pred, const LossWeights& w = {}) {
  return loss(std::array<double, 3>{target.x, target.y, target.theta},
              std::array<double, 3>{pred.x, pred.y, pred.theta}, w);
}

/// Mean loss over a batch (targets and predictions are 3 x N). When `grad`
/// is given it receives d(mean loss)/d(pred).
template <typename T>
double batch_loss(const Mat<T>& target, const Mat<T>& pred, const LossWeights& w,
                  Mat<T>* grad = nullptr) {
  const Eigen::Index n = pred.cols();
  const Mat<T> diff = pred - target;
  const T wt[3] = {T(w.w_x), T(w.w_y), T(w.w_theta)};
  double total = 0.0;
  if (grad) grad->resize(3, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int k = 0; k < 3; ++k) {
      const double d = double(diff(k, j));
      total += 0.5 * double(wt[k]) * d * d;
      if (grad) (*grad)(k, j) = wt[k] * diff(k, j) / T(n);
    }
  return total / double(n);
}

// ---------------------------------------------------------------------------
// Checkpoint: text header (version, config, step, tensor shapes) followed by
// raw little-endian float32 tensors in layer order (weight, then bias).

inline constexpr const char* kCheckpointMagic = "TNRCKPT v1";

inline void save_checkpoint(const RegressorState<float>& st, std::ostream& os) {
  const auto& c = st.config;
  os << kCheckpointMagic << "\n";
  os << "input " << c.input_channels << " " << c.input_height << " "
     << c.input_width << "\n";
  for (const auto& s : c.conv)
    os << "conv " << s.kernel << " " << s.stride << " " << s.pad << " "
       << s.in_channels << " " << s.out_channels << " " << s.pool_kernel << " "
       << s.pool_stride << "\n";
  os << "spp_bins";
  for (int b : c.spp_bins) os << " " << b;
  os << "\nfc_widths";
  for (int f : c.fc_widths) os << " " << f;
  os << "\noutput_dim " << c.output_dim << "\n";
  os << "step " << st.step << "\n";
  os << "tensors " << st.params.weights.size() << "\n";
  for (std::size_t l = 0; l < st.params.weights.size(); ++l)
    os << "shape " << st.params.weights[l].rows() << " "
       << st.params.weights[l].cols() << " " << st.params.biases[l].size() << "\n";
  os << "DATA\n";
  for (std::size_t l = 0; l < st.params.weights.size(); ++l) {
    os.write(reinterpret_cast<const char*>(st.params.weights[l].data()),
             std::streamsize(sizeof(float) * st.params.weights[l].size()));
    os.write(reinterpret_cast<const char*>(st.params.biases[l].data()),
             std::streamsize(sizeof(float) * st.params.biases[l].size()));
  }
}

inline void save_checkpoint(const RegressorState<float>& st, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ModelError("cannot open '" + path + "' for writing");
  save_checkpoint(st, os);
  if (!os) throw ModelError("write failed for '" + path + "'");
}

inline RegressorState<float> load_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic)
    throw ModelError("not a checkpoint (bad header)");
  RegressorState<float> st;
  auto& c = st.config;
  c.conv.clear();
  c.spp_bins.clear();
  c.fc_widths.clear();
  std::vector<std::array<Eigen::Index, 3>> shapes;
  std::size_t ntensors = 0;
  while (std::getline(is, line) && line != "DATA") {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "input") {
      ss >> c.input_channels >> c.input_height >> c.input_width;
    } else if (key == "conv") {
      ConvStage s;
      ss >> s.kernel >> s.stride >> s.pad >> s.in_channels >> s.out_channels >>
          s.pool_kernel >> s.pool_stride;
      c.conv.push_back(s);
    } else if (key == "spp_bins") {
      for (int b; ss >> b;) c.spp_bins.push_back(b);
      if (ss.eof()) ss.clear();
    } else if (key == "fc_widths") {
      for (int f; ss >> f;) c.fc_widths.push_back(f);
      if (ss.eof()) ss.clear();
    } else if (key == "output_dim") {
      ss >> c.output_dim;
    } else if (key == "step") {
      ss >> st.step;
    } else if (key == "tensors") {
      ss >> ntensors;
    } else if (key == "shape") {
      std::array<Eigen::Index, 3> sh{};
      ss >> sh[0] >> sh[1] >> sh[2];
      shapes.push_back(sh);
    } else {
      throw ModelError("checkpoint: unknown header key '" + key + "'");
    }
    if (ss.fail()) throw ModelError("checkpoint: malformed line '" + line + "'");
  }
  if (line != "DATA") throw ModelError("checkpoint: missing DATA marker");
  c.validate();
  const RegressorState<float> ref = init<float>(c, 0);
  if (shapes.size() != ntensors || ntensors != ref.params.weights.size())
    throw ModelError("checkpoint: tensor count does not match config");
  for (std::size_t l = 0; l < ntensors; ++l) {
    const auto& w = ref.params.weights[l];
    if (shapes[l][0] != w.rows() || shapes[l][1] != w.cols() ||
        shapes[l][2] != ref.params.biases[l].size())
      throw ModelError("checkpoint: tensor " + std::to_string(l) +
                       " shape does not match config");
    Mat<float> wm(shapes[l][0], shapes[l][1]);
    Vec<float> bv(shapes[l][2]);
    is.read(reinterpret_cast<char*>(wm.data()), std::streamsize(sizeof(float) * wm.size()));
    is.read(reinterpret_cast<char*>(bv.data()), std::streamsize(sizeof(float) * bv.size()));
    if (!is) throw ModelError("checkpoint: truncated tensor data");
    st.params.weights.push_back(std::move(wm));
    st.params.biases.push_back(std::move(bv));
  }
  return st;
}

inline RegressorState<float> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ModelError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(is);
}

}  // namespace tnr

#endif  // TNR_MODEL_HPP_
