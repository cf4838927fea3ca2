#include "uamtfl/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "uamtfl/errors.hpp"

namespace uamtfl {

namespace {

using detail::Node;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_str(a.shape()) << " and "
     << shape_str(b.shape());
  throw DimensionError(os.str());
}

// Shared skeleton for elementwise binaries with scalar broadcast. da/db
// give the local partials as functions of the operand values.
template <class F, class Da, class Db>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F f, Da da, Db db) {
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  Shape out_shape;
  if (a.shape() == b.shape()) {
    out_shape = a.shape();
  } else if (b_scalar) {
    out_shape = a.shape();
  } else if (a_scalar) {
    out_shape = b.shape();
  } else {
    shape_error(name, a, b);
  }
  const std::size_t n = shape_numel(out_shape);
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  }
  return make_node(name, std::move(out_shape), std::move(out), {a, b},
                   [a_scalar, b_scalar, da, db](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     const std::size_t n = self.numel();
                     if (pa.requires_grad) {
                       auto& ga = pa.ensure_grad();
                       for (std::size_t i = 0; i < n; ++i) {
                         const double x = pa.data[a_scalar ? 0 : i];
                         const double y = pb.data[b_scalar ? 0 : i];
                         ga[a_scalar ? 0 : i] += self.grad[i] * da(x, y);
                       }
                     }
                     if (pb.requires_grad) {
                       auto& gb = pb.ensure_grad();
                       for (std::size_t i = 0; i < n; ++i) {
                         const double x = pa.data[a_scalar ? 0 : i];
                         const double y = pb.data[b_scalar ? 0 : i];
                         gb[b_scalar ? 0 : i] += self.grad[i] * db(x, y);
                       }
                     }
                   });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor add_const(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += c;
  return make_node("add_const", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < self.numel(); ++i) g[i] += self.grad[i];
  });
}

Tensor mul_const(const Tensor& a, double c) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= c;
  return make_node("mul_const", a.shape(), std::move(out), {a}, [c](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < self.numel(); ++i) g[i] += c * self.grad[i];
  });
}

Tensor neg(const Tensor& a) { return mul_const(a, -1.0); }

Tensor exp_elem(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
  return make_node("exp", a.shape(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < self.numel(); ++i) g[i] += self.grad[i] * self.data[i];
  });
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.rows()) shape_error("matmul", x, w);
  const std::size_t n = x.rows(), d = x.cols(), h = w.cols();
  std::vector<double> out(n * h, 0.0);
  auto xv = x.data();
  auto wv = w.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double xik = xv[i * d + k];
      for (std::size_t j = 0; j < h; ++j) out[i * h + j] += xik * wv[k * h + j];
    }
  }
  return make_node("matmul", {n, h}, std::move(out), {x, w}, [n, d, h](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    const auto& g = self.grad;
    if (px.requires_grad) {
      auto& gx = px.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < h; ++j) {
          const double gij = g[i * h + j];
          for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += gij * pw.data[k * h + j];
        }
      }
    }
    if (pw.requires_grad) {
      auto& gw = pw.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
          const double xik = px.data[i * d + k];
          for (std::size_t j = 0; j < h; ++j) gw[k * h + j] += xik * g[i * h + j];
        }
      }
    }
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.rows()) shape_error("affine", x, w);
  if (b.rank() != 1 || b.numel() != w.cols()) shape_error("affine", w, b);
  const std::size_t n = x.rows(), d = x.cols(), h = w.cols();
  std::vector<double> out(n * h);
  auto xv = x.data();
  auto wv = w.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < h; ++j) out[i * h + j] = bv[j];
    for (std::size_t k = 0; k < d; ++k) {
      const double xik = xv[i * d + k];
      for (std::size_t j = 0; j < h; ++j) out[i * h + j] += xik * wv[k * h + j];
    }
  }
  return make_node("affine", {n, h}, std::move(out), {x, w, b}, [n, d, h](Node& self) {
    Node& px = *self.parents[0];
    Node& pw = *self.parents[1];
    Node& pb = *self.parents[2];
    const auto& g = self.grad;
    if (px.requires_grad) {
      auto& gx = px.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < h; ++j) {
          const double gij = g[i * h + j];
          for (std::size_t k = 0; k < d; ++k) gx[i * d + k] += gij * pw.data[k * h + j];
        }
      }
    }
    if (pw.requires_grad) {
      auto& gw = pw.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
          const double xik = px.data[i * d + k];
          for (std::size_t j = 0; j < h; ++j) gw[k * h + j] += xik * g[i * h + j];
        }
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < h; ++j) gb[j] += g[i * h + j];
      }
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_node("relu", x.shape(), std::move(out), {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < self.numel(); ++i) {
      if (p.data[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() > 2) {
    throw DimensionError("softmax_rows: expected rank-1 or rank-2 logits, got " +
                         shape_str(logits.shape()));
  }
  const std::size_t n = logits.rank() == 2 ? logits.rows() : 1;
  const std::size_t k = logits.rank() == 2 ? logits.cols() : logits.numel();
  auto lv = logits.data();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * k;
    double m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = std::exp(row[j] - m);
      z += out[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= z;
  }
  return make_node("softmax_rows", logits.shape(), std::move(out), {logits},
                   [n, k](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     auto& g = p.ensure_grad();
                     for (std::size_t i = 0; i < n; ++i) {
                       const double* prob = self.data.data() + i * k;
                       const double* gout = self.grad.data() + i * k;
                       double dot = 0.0;
                       for (std::size_t j = 0; j < k; ++j) dot += gout[j] * prob[j];
                       for (std::size_t j = 0; j < k; ++j) {
                         g[i * k + j] += prob[j] * (gout[j] - dot);
                       }
                     }
                   });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_node("sum", {1}, {s}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < p.numel(); ++i) g[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return make_node("mean", {1}, {s * inv}, {x}, [inv](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < p.numel(); ++i) g[i] += self.grad[0] * inv;
  });
}

Tensor mean_square(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return make_node("mean_square", {1}, {s * inv}, {x}, [inv](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < p.numel(); ++i) {
      g[i] += self.grad[0] * 2.0 * p.data[i] * inv;
    }
  });
}

Tensor l1(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += std::abs(v);
  return make_node("l1", {1}, {s}, {x}, [](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < p.numel(); ++i) g[i] += self.grad[0] * sign_of(p.data[i]);
  });
}

Tensor weighted_row_l1(const Tensor& a, std::span<const double> row_weights) {
  if (a.rank() != 2) {
    throw DimensionError("weighted_row_l1: expected rank-2 tensor, got " +
                         shape_str(a.shape()));
  }
  const std::size_t t = a.rows(), h = a.cols();
  if (row_weights.size() != t) {
    std::ostringstream os;
    os << "weighted_row_l1: " << row_weights.size() << " weights for " << t << " rows";
    throw DimensionError(os.str());
  }
  auto av = a.data();
  double s = 0.0;
  for (std::size_t r = 0; r < t; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < h; ++c) row += std::abs(av[r * h + c]);
    s += row_weights[r] * row;
  }
  std::vector<double> w(row_weights.begin(), row_weights.end());
  return make_node("weighted_row_l1", {1}, {s}, {a}, [t, h, w = std::move(w)](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < t; ++r) {
      for (std::size_t c = 0; c < h; ++c) {
        g[r * h + c] += self.grad[0] * w[r] * sign_of(p.data[r * h + c]);
      }
    }
  });
}

Tensor cross_entropy_mean(const Tensor& logits, std::span<const int> labels,
                          std::span<const std::uint8_t> mask) {
  if (logits.rank() != 2) {
    throw DimensionError("cross_entropy_mean: expected rank-2 logits, got " +
                         shape_str(logits.shape()));
  }
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) {
    std::ostringstream os;
    os << "cross_entropy_mean: " << labels.size() << " labels for " << n << " rows";
    throw DimensionError(os.str());
  }
  if (!mask.empty() && mask.size() != n) {
    throw DimensionError("cross_entropy_mean: mask length does not match rows");
  }
  auto lv = logits.data();
  std::vector<std::uint8_t> valid(n, 1);
  if (!mask.empty()) valid.assign(mask.begin(), mask.end());
  std::size_t n_valid = 0;
  // Cache the row probabilities for the backward pass.
  std::vector<double> probs(n * k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      std::ostringstream os;
      os << "cross_entropy_mean: label " << y << " out of range [0, " << k
         << ") at sample " << i;
      throw DataError(os.str());
    }
    const double* row = lv.data() + i * k;
    double m = row[0];
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[i * k + j] = std::exp(row[j] - m);
      z += probs[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= z;
    total += (m + std::log(z)) - row[y];
    ++n_valid;
  }
  if (n_valid == 0) throw ContractError("cross_entropy_mean: no valid samples");
  const double inv = 1.0 / static_cast<double>(n_valid);
  std::vector<int> ys(labels.begin(), labels.end());
  return make_node(
      "cross_entropy_mean", {1}, {total * inv}, {logits},
      [n, k, inv, ys = std::move(ys), valid = std::move(valid),
       probs = std::move(probs)](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          if (!valid[i]) continue;
          for (std::size_t j = 0; j < k; ++j) {
            double d = probs[i * k + j];
            if (static_cast<std::size_t>(ys[i]) == j) d -= 1.0;
            g[i * k + j] += self.grad[0] * d * inv;
          }
        }
      });
}

Tensor masked_mse(const Tensor& pred, std::span<const double> target,
                  std::span<const std::uint8_t> mask) {
  if (pred.rank() > 2 || (pred.rank() == 2 && pred.cols() != 1)) {
    throw DimensionError("masked_mse: expected a column vector, got " +
                         shape_str(pred.shape()));
  }
  const std::size_t n = pred.numel();
  if (target.size() != n) {
    std::ostringstream os;
    os << "masked_mse: " << target.size() << " targets for " << n << " predictions";
    throw DimensionError(os.str());
  }
  if (!mask.empty() && mask.size() != n) {
    throw DimensionError("masked_mse: mask length does not match predictions");
  }
  auto pv = pred.data();
  std::size_t n_valid = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double r = pv[i] - target[i];
    total += r * r;
    ++n_valid;
  }
  if (n_valid == 0) throw ContractError("masked_mse: no valid samples");
  const double inv = 1.0 / static_cast<double>(n_valid);
  std::vector<double> tv(target.begin(), target.end());
  std::vector<std::uint8_t> mv(mask.begin(), mask.end());
  return make_node("masked_mse", {1}, {total * inv}, {pred},
                   [inv, tv = std::move(tv), mv = std::move(mv)](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     auto& g = p.ensure_grad();
                     for (std::size_t i = 0; i < p.numel(); ++i) {
                       if (!mv.empty() && !mv[i]) continue;
                       g[i] += self.grad[0] * 2.0 * (p.data[i] - tv[i]) * inv;
                     }
                   });
}

Tensor binary_logits(const Tensor& z) {
  if (z.rank() > 2 || (z.rank() == 2 && z.cols() != 1)) {
    throw DimensionError("binary_logits: expected a column vector, got " +
                         shape_str(z.shape()));
  }
  const std::size_t n = z.numel();
  std::vector<double> out(n * 2, 0.0);
  auto zv = z.data();
  for (std::size_t i = 0; i < n; ++i) out[i * 2 + 1] = zv[i];
  return make_node("binary_logits", {n, 2}, std::move(out), {z}, [n](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i * 2 + 1];
  });
}

Tensor concat_cols(std::span<const Tensor> cols) {
  if (cols.empty()) throw ContractError("concat_cols: no columns given");
  const std::size_t n = cols[0].numel();
  const std::size_t t = cols.size();
  std::vector<double> out(n * t);
  for (std::size_t c = 0; c < t; ++c) {
    const Tensor& col = cols[c];
    if (col.rank() > 2 || (col.rank() == 2 && col.cols() != 1) || col.numel() != n) {
      throw DimensionError("concat_cols: column " + std::to_string(c) + " has shape " +
                           shape_str(col.shape()) + ", expected length " +
                           std::to_string(n));
    }
    auto cv = col.data();
    for (std::size_t i = 0; i < n; ++i) out[i * t + c] = cv[i];
  }
  std::vector<Tensor> parents(cols.begin(), cols.end());
  return make_node("concat_cols", {n, t}, std::move(out), std::move(parents),
                   [n, t](Node& self) {
                     for (std::size_t c = 0; c < t; ++c) {
                       Node& p = *self.parents[c];
                       if (!p.requires_grad) continue;
                       auto& g = p.ensure_grad();
                       for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i * t + c];
                     }
                   });
}

Tensor element(const Tensor& v, std::size_t index) {
  if (v.rank() != 1) {
    throw DimensionError("element: expected rank-1 tensor, got " + shape_str(v.shape()));
  }
  if (index >= v.numel()) {
    throw ContractError("element: index " + std::to_string(index) + " out of range for " +
                        shape_str(v.shape()));
  }
  return make_node("element", {1}, {v.at(index)}, {v}, [index](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad()[index] += self.grad[0];
  });
}

}  // namespace uamtfl
