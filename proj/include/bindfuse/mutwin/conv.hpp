// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The bindfuse Authors.

#pragma once

#include <cmath>
#include <string>

#include "bindfuse/nn.hpp"
#include "bindfuse/tensor.hpp"

namespace bindfuse::mutwin {

/// ReLU(kernels * x + bias), same-padded cross-correlation over the window.
struct Conv1dLayer {
  Tensor kernels;  // [out x in x width]
  Tensor bias;     // [out]

  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in, std::size_t out, std::size_t width, Rng& rng)
      : kernels(init::glorot({out, in, width}, in * width, out * width, rng)), bias(init::constant({out}, 0.0)) {
    if (width % 2 == 0) throw ValidationError("Conv1dLayer: kernel width must be odd");
  }

  std::size_t in_channels() const { return kernels.shape()[1]; }
  std::size_t out_channels() const { return kernels.shape()[0]; }

  Tensor pre_activation(const Tensor& x) const {
    if (x.rank() != 2 || x.cols() != in_channels()) {
      throw ShapeError("conv_forward: expected [T x " + std::to_string(in_channels()) + "], got " +
                       shape_str(x.shape()));
    }
    return conv1d_same(x, kernels, bias);
  }

  Tensor operator()(const Tensor& x) const { return relu(pre_activation(x)); }

  void collect(ParamList& params, const std::string& prefix) const {
    params.push_back({prefix + ".kernels", kernels});
    params.push_back({prefix + ".bias", bias});
  }
};

}  // namespace bindfuse::mutwin
