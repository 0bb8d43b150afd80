// Copyright 2026 The hginet-desk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hgi/decoder.hpp"

#include "hgi/error.hpp"

namespace hgi::decoder {

Tensor ambiguity_indicator(const Tensor& p) {
  return mul(p, rsub_scalar(p, 1.0));
}

Tensor ambiguity_reweight(const Tensor& fc, const Tensor& p,
                          const nn::Conv2d& conv) {
  if (p.rank() != 4 || fc.rank() != 4 || p.dim(1) != 1 ||
      p.dim(0) != fc.dim(0) || p.dim(2) != fc.dim(2) || p.dim(3) != fc.dim(3)) {
    throw DimensionError("ambiguity_reweight: map " + shape_str(p.shape()) +
                         " does not match features " + shape_str(fc.shape()));
  }
  return add(mul(fc, conv(ambiguity_indicator(p))), fc);
}

Tensor Decoder::Head::operator()(const Tensor& x, bool training) const {
  Tensor y = x;
  for (const auto& b : blocks) y = b(y, training);
  return sigmoid(out(y));
}

Tensor Decoder::Up::operator()(const Tensor& x, bool training) const {
  return pixel_shuffle(cbr(x, training), 2);
}

Decoder::Head Decoder::make_head(nn::ParamFactory f, std::size_t in,
                                 std::size_t mid) const {
  Head h;
  std::size_t c = in;
  for (std::size_t l = 0; l < opt_.head_layers; ++l) {
    h.blocks.emplace_back(f.scope("block" + std::to_string(l)), c, mid);
    c = mid;
  }
  h.out = nn::Conv2d(f.scope("out"), c, 1, 1);
  return h;
}

Decoder::Decoder(nn::ParamFactory f, const DecoderOptions& opt) : opt_(opt) {
  const auto& c = opt.channels;
  const bool caff = opt.variant == Variant::kCaff;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string s = std::to_string(i + 1);
    align_[i] = nn::Conv2d(f.scope("align" + s), c[i + 1], c[i], 1);
    squeeze_[i] = nn::ConvBnRelu(f.scope("squeeze" + s), 2 * c[i], c[i]);
    if (caff) {
      coarse_[i] = nn::Conv2d(f.scope("coarse" + s), c[i], 1, 3);
      reweight_[i] = nn::Conv2d(f.scope("reweight" + s), 1, 1, 3);
    }
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string s = std::to_string(i + 1);
    up_[i].cbr = nn::ConvBnRelu(f.scope("up" + s), c[i + 1], 4 * c[i]);
    merge_[i] = nn::ConvBnRelu(f.scope("merge" + s), 2 * c[i], c[i]);
  }
  if (caff) {
    up_refine_.cbr = nn::ConvBnRelu(f.scope("up_refine"), c[1], 4 * c[0]);
    for (std::size_t i = 0; i < 2; ++i) {
      down_[i] = nn::ConvBnRelu(f.scope("down" + std::to_string(i + 2)), c[i],
                                c[i + 1], 3, 2);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    heads_[i] = make_head(f.scope("head" + std::to_string(i + 1)),
                          caff ? 2 * c[i] : c[i], c[i]);
  }
}

PredictionPyramid Decoder::operator()(const std::array<Tensor, 3>& to_i,
                                      const std::array<Tensor, 3>& to_j,
                                      std::size_t out_h, std::size_t out_w,
                                      bool training) const {
  const bool caff = opt_.variant == Variant::kCaff;
  PredictionPyramid p;
  for (std::size_t i = 0; i < 3; ++i) {
    const Tensor& a = to_i[i];
    if (a.rank() != 4 || a.dim(1) != opt_.channels[i]) {
      throw DimensionError("decoder: stage " + std::to_string(i + 1) +
                           " features " + shape_str(a.shape()) +
                           " do not have " +
                           std::to_string(opt_.channels[i]) + " channels");
    }
    auto b = align_[i](bilinear_resize(to_j[i], a.dim(2), a.dim(3)));
    p.concatenated[i] = squeeze_[i](concat({a, b}, 1), training);
    if (caff) {
      p.coarse[i] = sigmoid(coarse_[i](p.concatenated[i]));
      p.reweighted[i] =
          ambiguity_reweight(p.concatenated[i], p.coarse[i], reweight_[i]);
    } else {
      p.reweighted[i] = p.concatenated[i];
    }
  }

  p.fused[2] = p.reweighted[2];
  for (std::size_t i = 2; i-- > 0;) {
    auto up = up_[i](p.fused[i + 1], training);
    p.fused[i] = merge_[i](concat({up, p.reweighted[i]}, 1), training);
  }

  if (caff) {
    auto up = up_refine_(p.fused[1], training);
    p.refined[0] = heads_[0](concat({p.fused[0], up}, 1), training);
    for (std::size_t i = 1; i < 3; ++i) {
      auto down = down_[i - 1](p.reweighted[i - 1], training);
      p.refined[i] = heads_[i](concat({p.fused[i], down}, 1), training);
    }
  } else {
    for (std::size_t i = 0; i < 3; ++i) {
      p.refined[i] = heads_[i](p.fused[i], training);
    }
  }
  p.final_map = bilinear_resize(p.refined[0], out_h, out_w);
  return p;
}

}  // namespace hgi::decoder
