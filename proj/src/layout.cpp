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

#include <numeric>

#include "hgi/error.hpp"
#include "hgi/tensor.hpp"

namespace hgi {

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(x.shape()) +
                         " as " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const bool rec = detail::should_record({&x});
  return detail::make_result(std::move(shape), std::move(out), rec,
                             [x](const detail::TensorImpl& o) {
                               auto& gx = detail::grad_buffer(x);
                               for (std::size_t i = 0; i < gx.size(); ++i) {
                                 gx[i] += o.grad[i];
                               }
                             });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const Shape& s = x.shape();
  const std::size_t rank = s.size();
  if (order.size() != rank) {
    throw DimensionError("permute: order has " + std::to_string(order.size()) +
                         " axes for shape " + shape_str(s));
  }
  std::vector<bool> seen(rank, false);
  for (std::size_t a : order) {
    if (a >= rank || seen[a]) throw DimensionError("permute: invalid order");
    seen[a] = true;
  }
  std::vector<std::size_t> in_stride(rank);
  std::size_t st = 1;
  for (std::size_t i = rank; i-- > 0;) {
    in_stride[i] = st;
    st *= s[i];
  }
  Shape os(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    os[i] = s[order[i]];
    step[i] = in_stride[order[i]];
  }
  const std::size_t n = x.numel();
  // src[flat_out] = flat input index
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    src[flat] = off;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      off += step[d];
      if (idx[d] < os[d]) break;
      off -= step[d] * idx[d];
      idx[d] = 0;
    }
  }
  const auto xv = x.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = xv[src[i]];
  const bool rec = detail::should_record({&x});
  return detail::make_result(std::move(os), std::move(out), rec,
                             [x, src = std::move(src)](
                                 const detail::TensorImpl& o) {
                               auto& gx = detail::grad_buffer(x);
                               for (std::size_t i = 0; i < src.size(); ++i) {
                                 gx[src[i]] += o.grad[i];
                               }
                             });
}

Tensor transpose_last2(const Tensor& x) {
  const std::size_t rank = x.rank();
  if (rank < 2) throw DimensionError("transpose_last2 needs rank >= 2");
  std::vector<std::size_t> order(rank);
  std::iota(order.begin(), order.end(), 0);
  std::swap(order[rank - 1], order[rank - 2]);
  return permute(x, order);
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) throw DimensionError("concat: axis out of range");
  Shape os = s0;
  os[axis] = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != s0[i]) ok = false;
    }
    if (!ok) {
      throw DimensionError("concat: " + shape_str(s) + " does not match " +
                           shape_str(s0) + " off axis " +
                           std::to_string(axis));
    }
    os[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s0[i];
  for (std::size_t i = axis + 1; i < s0.size(); ++i) inner *= s0[i];
  std::vector<double> out(shape_numel(os));
  const std::size_t out_row = os[axis] * inner;
  std::size_t col = 0;
  for (const Tensor& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    const auto pv = p.values();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(&pv[o * chunk], chunk, &out[o * out_row + col]);
    }
    col += chunk;
  }
  const bool rec = detail::should_record(parts);
  return detail::make_result(
      std::move(os), std::move(out), rec,
      [parts, outer, inner, out_row, axis](const detail::TensorImpl& o) {
        std::size_t col = 0;
        for (const Tensor& p : parts) {
          const std::size_t chunk = p.dim(axis) * inner;
          if (p.requires_grad()) {
            auto& gp = detail::grad_buffer(p);
            for (std::size_t a = 0; a < outer; ++a) {
              for (std::size_t i = 0; i < chunk; ++i) {
                gp[a * chunk + i] += o.grad[a * out_row + col + i];
              }
            }
          }
          col += chunk;
        }
      });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start,
             std::size_t length) {
  const Shape& s = x.shape();
  if (axis >= s.size() || start + length > s[axis]) {
    throw DimensionError("slice [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") out of range for " +
                         shape_str(s) + " axis " + std::to_string(axis));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  Shape os = s;
  os[axis] = length;
  const std::size_t in_row = s[axis] * inner;
  const std::size_t chunk = length * inner;
  const auto xv = x.values();
  std::vector<double> out(outer * chunk);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(&xv[o * in_row + start * inner], chunk, &out[o * chunk]);
  }
  const bool rec = detail::should_record({&x});
  return detail::make_result(
      std::move(os), std::move(out), rec,
      [x, outer, in_row, chunk, start, inner](const detail::TensorImpl& o) {
        auto& gx = detail::grad_buffer(x);
        for (std::size_t a = 0; a < outer; ++a) {
          for (std::size_t i = 0; i < chunk; ++i) {
            gx[a * in_row + start * inner + i] += o.grad[a * chunk + i];
          }
        }
      });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows,
                   Shape leading) {
  if (x.rank() == 0) throw DimensionError("gather_rows on rank-0 tensor");
  const std::size_t row_len = x.shape().back();
  const std::size_t n_rows = x.numel() / row_len;
  if (shape_numel(leading) != rows.size()) {
    throw DimensionError("gather_rows: " + std::to_string(rows.size()) +
                         " rows do not fill leading shape " +
                         shape_str(leading));
  }
  const auto xv = x.values();
  std::vector<double> out(rows.size() * row_len);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows) {
      throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                           " out of range (" + std::to_string(n_rows) + ")");
    }
    std::copy_n(&xv[rows[i] * row_len], row_len, &out[i * row_len]);
  }
  leading.push_back(row_len);
  const bool rec = detail::should_record({&x});
  return detail::make_result(
      std::move(leading), std::move(out), rec,
      [x, rows, row_len](const detail::TensorImpl& o) {
        auto& gx = detail::grad_buffer(x);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          double* dst = &gx[rows[i] * row_len];
          const double* src = &o.grad[i * row_len];
          for (std::size_t j = 0; j < row_len; ++j) dst[j] += src[j];
        }
      });
}

}  // namespace hgi
