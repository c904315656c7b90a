#include "ulab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace ulab {

namespace {

using detail::TensorData;
using DataPtr = std::shared_ptr<TensorData>;

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw_numeric(std::string(op) + " produced a non-finite value");
    }
  }
}

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw_validation(std::string(op) + " requires a 2-D tensor, got shape " + t.shape_str());
  }
}

// C[M x N] += A[M x K] . B[K x N]
void gemm_nn(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int l = 0; l < k; ++l) {
      const double av = a[static_cast<std::size_t>(i) * k + l];
      const double* brow = b + static_cast<std::size_t>(l) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M x N] += A[M x K] . B[N x K]^T
void gemm_nt(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * k;
      double acc = 0.0;
      for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
      crow[j] += acc;
    }
  }
}

// C[M x N] += A[K x M]^T . B[K x N]
void gemm_tn(double* c, const double* a, const double* b, int m, int k, int n) {
  for (int l = 0; l < k; ++l) {
    const double* arow = a + static_cast<std::size_t>(l) * m;
    const double* brow = b + static_cast<std::size_t>(l) * n;
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw_validation("matmul: inner dimensions mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  gemm_nn(out.mutable_values().data(), a.values().data(), b.values().data(), m, k, n);
  check_finite(out.data()->values, "matmul");
  if (tape) {
    DataPtr ad = a.data(), bd = b.data(), od = out.data();
    tape->record({ad, bd}, od, [ad, bd, od, m, k, n] {
      gemm_nt(ad->grad.data(), od->grad.data(), bd->values.data(), m, n, k);
      gemm_tn(bd->grad.data(), ad->values.data(), od->grad.data(), k, m, n);
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw_validation("add: shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] + b.values()[i];
  check_finite(ov, "add");
  if (tape) {
    DataPtr ad = a.data(), bd = b.data(), od = out.data();
    tape->record({ad, bd}, od, [ad, bd, od] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) {
        ad->grad[i] += od->grad[i];
        bd->grad[i] += od->grad[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw_validation("mul: shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.values()[i] * b.values()[i];
  check_finite(ov, "mul");
  if (tape) {
    DataPtr ad = a.data(), bd = b.data(), od = out.data();
    tape->record({ad, bd}, od, [ad, bd, od] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) {
        ad->grad[i] += od->grad[i] * bd->values[i];
        bd->grad[i] += od->grad[i] * ad->values[i];
      }
    });
  }
  return out;
}

Tensor add_row(Tape* tape, const Tensor& x, const Tensor& row) {
  require_2d(x, "add_row");
  if (row.ndim() != 1 || row.dim(0) != x.dim(1)) {
    throw_validation("add_row: shape mismatch: " + x.shape_str() + " vs " + row.shape_str());
  }
  const int t = x.dim(0), n = x.dim(1);
  Tensor out = Tensor::zeros({t, n});
  auto& ov = out.data()->values;
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < n; ++j) {
      ov[static_cast<std::size_t>(i) * n + j] = x.values()[static_cast<std::size_t>(i) * n + j] + row.values()[j];
    }
  }
  check_finite(ov, "add_row");
  if (tape) {
    DataPtr xd = x.data(), rd = row.data(), od = out.data();
    tape->record({xd, rd}, od, [xd, rd, od, t, n] {
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < n; ++j) {
          const double g = od->grad[static_cast<std::size_t>(i) * n + j];
          xd->grad[static_cast<std::size_t>(i) * n + j] += g;
          rd->grad[j] += g;
        }
      }
    });
  }
  return out;
}

Tensor scale(Tape* tape, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = c * x.values()[i];
  check_finite(ov, "scale");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, c] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) xd->grad[i] += c * od->grad[i];
    });
  }
  return out;
}

Tensor add_const(Tape* tape, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = x.values()[i] + c;
  check_finite(ov, "add_const");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) xd->grad[i] += od->grad[i];
    });
  }
  return out;
}

Tensor reciprocal(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = 1.0 / x.values()[i];
  check_finite(ov, "reciprocal");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) {
        xd->grad[i] -= od->values[i] * od->values[i] * od->grad[i];
      }
    });
  }
  return out;
}

Tensor gelu(Tape* tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) {
    const double v = x.values()[i];
    ov[i] = 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2));
  }
  check_finite(ov, "gelu");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od] {
      constexpr double inv_sqrt_2pi = 0.3989422804014326779;
      for (std::size_t i = 0; i < od->grad.size(); ++i) {
        const double v = xd->values[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        xd->grad[i] += od->grad[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor transpose(Tape* tape, const Tensor& x) {
  require_2d(x, "transpose");
  const int m = x.dim(0), n = x.dim(1);
  Tensor out = Tensor::zeros({n, m});
  auto& ov = out.data()->values;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      ov[static_cast<std::size_t>(j) * m + i] = x.values()[static_cast<std::size_t>(i) * n + j];
    }
  }
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, m, n] {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
          xd->grad[static_cast<std::size_t>(i) * n + j] += od->grad[static_cast<std::size_t>(j) * m + i];
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(Tape* tape, const Tensor& x, int r0, int r1) {
  require_2d(x, "slice_rows");
  if (r0 < 0 || r1 > x.dim(0) || r0 >= r1) {
    throw_validation("slice_rows: invalid range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                     ") for shape " + x.shape_str());
  }
  const int n = x.dim(1), rows = r1 - r0;
  Tensor out = Tensor::zeros({rows, n});
  auto& ov = out.data()->values;
  std::copy_n(x.values().begin() + static_cast<std::size_t>(r0) * n, static_cast<std::size_t>(rows) * n, ov.begin());
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, r0, rows, n] {
      for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * n; ++i) {
        xd->grad[static_cast<std::size_t>(r0) * n + i] += od->grad[i];
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape* tape, const Tensor& x, int c0, int c1) {
  require_2d(x, "slice_cols");
  if (c0 < 0 || c1 > x.dim(1) || c0 >= c1) {
    throw_validation("slice_cols: invalid range [" + std::to_string(c0) + ", " + std::to_string(c1) +
                     ") for shape " + x.shape_str());
  }
  const int t = x.dim(0), n = x.dim(1), w = c1 - c0;
  Tensor out = Tensor::zeros({t, w});
  auto& ov = out.data()->values;
  for (int i = 0; i < t; ++i) {
    std::copy_n(x.values().begin() + static_cast<std::size_t>(i) * n + c0, w,
                ov.begin() + static_cast<std::size_t>(i) * w);
  }
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, t, n, c0, w] {
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < w; ++j) {
          xd->grad[static_cast<std::size_t>(i) * n + c0 + j] += od->grad[static_cast<std::size_t>(i) * w + j];
        }
      }
    });
  }
  return out;
}

Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw_validation("concat_cols: no parts");
  const int t = parts[0].dim(0);
  int total = 0;
  for (const Tensor& p : parts) {
    require_2d(p, "concat_cols");
    if (p.dim(0) != t) {
      throw_validation("concat_cols: row mismatch: " + parts[0].shape_str() + " vs " + p.shape_str());
    }
    total += p.dim(1);
  }
  Tensor out = Tensor::zeros({t, total});
  auto& ov = out.data()->values;
  int off = 0;
  for (const Tensor& p : parts) {
    const int w = p.dim(1);
    for (int i = 0; i < t; ++i) {
      std::copy_n(p.values().begin() + static_cast<std::size_t>(i) * w, w,
                  ov.begin() + static_cast<std::size_t>(i) * total + off);
    }
    off += w;
  }
  if (tape) {
    std::vector<DataPtr> ins;
    std::vector<int> widths;
    for (const Tensor& p : parts) {
      ins.push_back(p.data());
      widths.push_back(p.dim(1));
    }
    DataPtr od = out.data();
    tape->record({ins.begin(), ins.end()}, od, [ins, widths, od, t, total] {
      int off2 = 0;
      for (std::size_t pi = 0; pi < ins.size(); ++pi) {
        const int w = widths[pi];
        for (int i = 0; i < t; ++i) {
          for (int j = 0; j < w; ++j) {
            ins[pi]->grad[static_cast<std::size_t>(i) * w + j] +=
                od->grad[static_cast<std::size_t>(i) * total + off2 + j];
          }
        }
        off2 += w;
      }
    });
  }
  return out;
}

Tensor embedding(Tape* tape, const Tensor& table, std::span<const int> ids) {
  require_2d(table, "embedding");
  if (ids.empty()) throw_validation("embedding: empty id list");
  const int v = table.dim(0), d = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw_validation("embedding: index " + std::to_string(id) + " out of range for table " + table.shape_str());
    }
  }
  const int t = static_cast<int>(ids.size());
  Tensor out = Tensor::zeros({t, d});
  auto& ov = out.data()->values;
  for (int i = 0; i < t; ++i) {
    std::copy_n(table.values().begin() + static_cast<std::size_t>(ids[i]) * d, d,
                ov.begin() + static_cast<std::size_t>(i) * d);
  }
  if (tape) {
    DataPtr td = table.data(), od = out.data();
    std::vector<int> idv(ids.begin(), ids.end());
    tape->record({td}, od, [td, od, idv, d] {
      for (std::size_t i = 0; i < idv.size(); ++i) {
        for (int j = 0; j < d; ++j) {
          td->grad[static_cast<std::size_t>(idv[i]) * d + j] += od->grad[i * d + j];
        }
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_2d(x, "layer_norm");
  const int t = x.dim(0), n = x.dim(1);
  if (gamma.ndim() != 1 || gamma.dim(0) != n || beta.ndim() != 1 || beta.dim(0) != n) {
    throw_validation("layer_norm: parameter shape mismatch for input " + x.shape_str());
  }
  Tensor out = Tensor::zeros({t, n});
  auto& ov = out.data()->values;
  auto xhat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(t) * n);
  auto inv_s = std::make_shared<std::vector<double>>(t);
  for (int i = 0; i < t; ++i) {
    const double* row = x.values().data() + static_cast<std::size_t>(i) * n;
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= n;
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_s)[i] = is;
    for (int j = 0; j < n; ++j) {
      const double h = (row[j] - mean) * is;
      (*xhat)[static_cast<std::size_t>(i) * n + j] = h;
      ov[static_cast<std::size_t>(i) * n + j] = gamma.values()[j] * h + beta.values()[j];
    }
  }
  check_finite(ov, "layer_norm");
  if (tape) {
    DataPtr xd = x.data(), gd = gamma.data(), bd = beta.data(), od = out.data();
    tape->record({xd, gd, bd}, od, [xd, gd, bd, od, xhat, inv_s, t, n] {
      for (int i = 0; i < t; ++i) {
        const double* dy = od->grad.data() + static_cast<std::size_t>(i) * n;
        const double* h = xhat->data() + static_cast<std::size_t>(i) * n;
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (int j = 0; j < n; ++j) {
          const double dh = dy[j] * gd->values[j];
          sum_dh += dh;
          sum_dh_h += dh * h[j];
          gd->grad[j] += dy[j] * h[j];
          bd->grad[j] += dy[j];
        }
        const double is = (*inv_s)[i];
        for (int j = 0; j < n; ++j) {
          const double dh = dy[j] * gd->values[j];
          xd->grad[static_cast<std::size_t>(i) * n + j] += is * (dh - sum_dh / n - h[j] * sum_dh_h / n);
        }
      }
    });
  }
  return out;
}

Tensor causal_softmax(Tape* tape, const Tensor& scores) {
  require_2d(scores, "causal_softmax");
  if (scores.dim(0) != scores.dim(1)) {
    throw_validation("causal_softmax requires a square matrix, got " + scores.shape_str());
  }
  const int t = scores.dim(0);
  Tensor out = Tensor::zeros({t, t});
  auto& ov = out.data()->values;
  for (int i = 0; i < t; ++i) {
    const double* row = scores.values().data() + static_cast<std::size_t>(i) * t;
    double mx = row[0];
    for (int j = 1; j <= i; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j <= i; ++j) {
      const double e = std::exp(row[j] - mx);
      ov[static_cast<std::size_t>(i) * t + j] = e;
      z += e;
    }
    for (int j = 0; j <= i; ++j) ov[static_cast<std::size_t>(i) * t + j] /= z;
  }
  check_finite(ov, "causal_softmax");
  if (tape) {
    DataPtr sd = scores.data(), od = out.data();
    tape->record({sd}, od, [sd, od, t] {
      for (int i = 0; i < t; ++i) {
        const double* p = od->values.data() + static_cast<std::size_t>(i) * t;
        const double* dy = od->grad.data() + static_cast<std::size_t>(i) * t;
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) dot += dy[j] * p[j];
        for (int j = 0; j <= i; ++j) {
          sd->grad[static_cast<std::size_t>(i) * t + j] += p[j] * (dy[j] - dot);
        }
      }
    });
  }
  return out;
}

Tensor log_softmax(Tape* tape, const Tensor& x) {
  require_2d(x, "log_softmax");
  const int r = x.dim(0), v = x.dim(1);
  Tensor out = Tensor::zeros({r, v});
  auto& ov = out.data()->values;
  for (int i = 0; i < r; ++i) {
    const double* row = x.values().data() + static_cast<std::size_t>(i) * v;
    double mx = row[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    const double lz = mx + std::log(z);
    for (int j = 0; j < v; ++j) ov[static_cast<std::size_t>(i) * v + j] = row[j] - lz;
  }
  check_finite(ov, "log_softmax");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, r, v] {
      for (int i = 0; i < r; ++i) {
        const double* y = od->values.data() + static_cast<std::size_t>(i) * v;
        const double* dy = od->grad.data() + static_cast<std::size_t>(i) * v;
        double sum_dy = 0.0;
        for (int j = 0; j < v; ++j) sum_dy += dy[j];
        for (int j = 0; j < v; ++j) {
          xd->grad[static_cast<std::size_t>(i) * v + j] += dy[j] - std::exp(y[j]) * sum_dy;
        }
      }
    });
  }
  return out;
}

Tensor masked_nll_sum(Tape* tape, const Tensor& log_probs, std::span<const int> targets,
                      const std::vector<bool>& mask) {
  require_2d(log_probs, "masked_nll_sum");
  const int t = log_probs.dim(0), v = log_probs.dim(1);
  if (static_cast<int>(targets.size()) != t || static_cast<int>(mask.size()) != t) {
    throw_validation("masked_nll_sum: targets/mask length must equal row count " + std::to_string(t));
  }
  double acc = 0.0;
  for (int i = 0; i < t; ++i) {
    if (!mask[i]) continue;
    if (targets[i] < 0 || targets[i] >= v) {
      throw_validation("masked_nll_sum: target id " + std::to_string(targets[i]) +
                       " out of range for vocab " + std::to_string(v));
    }
    acc -= log_probs.at(i, targets[i]);
  }
  Tensor out = Tensor::scalar(acc);
  check_finite(out.data()->values, "masked_nll_sum");
  if (tape) {
    DataPtr ld = log_probs.data(), od = out.data();
    std::vector<int> tv(targets.begin(), targets.end());
    std::vector<bool> mv(mask.begin(), mask.end());
    tape->record({ld}, od, [ld, od, tv, mv, v] {
      const double g = od->grad[0];
      for (std::size_t i = 0; i < tv.size(); ++i) {
        if (mv[i]) ld->grad[i * v + tv[i]] -= g;
      }
    });
  }
  return out;
}

Tensor cross_entropy(Tape* tape, const Tensor& logits, std::span<const int> targets,
                     const std::vector<bool>& mask) {
  std::size_t m = 0;
  for (bool b : mask) m += b ? 1 : 0;
  if (m == 0) throw_validation("cross_entropy: degenerate batch, mask is all false");
  Tensor lp = log_softmax(tape, logits);
  Tensor total = masked_nll_sum(tape, lp, targets, mask);
  return scale(tape, total, 1.0 / static_cast<double>(m));
}

Tensor dropout(Tape* tape, const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw_validation("dropout: probability must lie in [0, 1)");
  }
  if (p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.size());
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.data()->values;
  for (std::size_t i = 0; i < ov.size(); ++i) {
    const double m = rng.next_double() >= p ? keep_scale : 0.0;
    (*mask)[i] = m;
    ov[i] = m * x.values()[i];
  }
  check_finite(ov, "dropout");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od, mask] {
      for (std::size_t i = 0; i < od->grad.size(); ++i) xd->grad[i] += (*mask)[i] * od->grad[i];
    });
  }
  return out;
}

Tensor sum_all(Tape* tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor out = Tensor::scalar(acc);
  check_finite(out.data()->values, "sum_all");
  if (tape) {
    DataPtr xd = x.data(), od = out.data();
    tape->record({xd}, od, [xd, od] {
      for (std::size_t i = 0; i < xd->grad.size(); ++i) xd->grad[i] += od->grad[0];
    });
  }
  return out;
}

}  // namespace ulab
