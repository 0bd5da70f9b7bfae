#include "azlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace azlab {

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::parameter(const std::string& name, const Tensor& value) {
  Node node;
  node.external = &value;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  params_.emplace_back(name, id);
  return Var{this, id};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& node = nodes_.at(id);
  return node.external ? *node.external : node.owned;
}

Var Tape::push(Tensor value, Rule rule) {
  Node node;
  node.owned = std::move(value);
  if (record_) node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::Sink::add(std::size_t id, const Tensor& delta) {
  Tensor& g = grad(id);
  if (g.shape() != delta.shape()) {
    throw std::logic_error("gradient shape " + shape_str(delta.shape()) + " does not match node shape " +
                           shape_str(g.shape()));
  }
  auto gd = g.data();
  auto dd = delta.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

Tensor& Tape::Sink::grad(std::size_t id) {
  Tensor& g = tape_.grads_[id];
  if (g.shape() != tape_.value(id).shape() || g.numel() != tape_.value(id).numel()) {
    g = Tensor(tape_.value(id).shape());
  }
  return g;
}

Gradients Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: loss belongs to a different tape");
  if (!record_) throw std::logic_error("backward on a tape that does not record gradients");
  if (value(loss.id).numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_str(value(loss.id).shape()));
  }
  grads_.assign(nodes_.size(), Tensor());
  Sink sink(*this);
  sink.grad(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (!nodes_[i].rule || grads_[i].numel() == 0) continue;
    // The rule may touch grads_ of earlier nodes only, so this reference stays valid.
    const Tensor upstream = std::move(grads_[i]);
    nodes_[i].rule(upstream, nodes_[i].owned, sink);
  }
  Gradients out;
  for (const auto& [name, id] : params_) {
    Tensor g = grads_[id].numel() == value(id).numel() && grads_[id].shape() == value(id).shape()
                   ? std::move(grads_[id])
                   : Tensor(value(id).shape());
    auto [it, inserted] = out.emplace(name, std::move(g));
    if (!inserted) throw std::invalid_argument("parameter '" + name + "' registered twice on one tape");
  }
  grads_.clear();
  return out;
}

namespace ad {
namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands live on different tapes");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Tensor out = kernels::matmul(a.value(), b.value());
  Tape* t = a.tape;
  return t->push(std::move(out), [t, a, b](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, kernels::matmul(g, t->value(b.id), false, true));
    sink.add(b.id, kernels::matmul(t->value(a.id), g, true, false));
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  Tensor out = kernels::matmul(a.value(), b.value(), false, true);
  Tape* t = a.tape;
  return t->push(std::move(out), [t, a, b](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, kernels::matmul(g, t->value(b.id)));
    sink.add(b.id, kernels::matmul(g, t->value(a.id), true, false));
  });
}

Var transpose(Var a) {
  Tensor out = kernels::transpose(a.value());
  return a.tape->push(std::move(out),
                      [a](const Tensor& g, const Tensor&, Tape::Sink& sink) { sink.add(a.id, kernels::transpose(g)); });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return a.tape->push(std::move(out), [a, b](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, g);
    sink.add(b.id, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return a.tape->push(std::move(out), [a, b](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, g);
    Tensor& gb = sink.grad(b.id);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] -= g[i];
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  Tape* t = a.tape;
  return t->push(std::move(out), [t, a, b](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    const Tensor& av = t->value(a.id);
    const Tensor& bv = t->value(b.id);
    Tensor& ga = sink.grad(a.id);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * bv[i];
    Tensor& gb = sink.grad(b.id);
    for (std::size_t i = 0; i < g.numel(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= factor;
  return a.tape->push(std::move(out), [a, factor](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    Tensor& ga = sink.grad(a.id);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * factor;
  });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rank() != 1 || av.rank() == 0 || rv.dim(0) != av.cols()) {
    throw std::invalid_argument("add_row: cannot add " + shape_str(rv.shape()) + " to rows of " +
                                shape_str(av.shape()));
  }
  Tensor out = av;
  const std::size_t d = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] += rv[j];
  return a.tape->push(std::move(out), [a, row, d](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, g);
    Tensor& gr = sink.grad(row.id);
    for (std::size_t r = 0; r < g.numel() / d; ++r)
      for (std::size_t j = 0; j < d; ++j) gr[j] += g[r * d + j];
  });
}

Var gelu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = kernels::gelu(v);
  Tape* t = a.tape;
  return t->push(std::move(out), [t, a](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    const Tensor& x = t->value(a.id);
    Tensor& ga = sink.grad(a.id);
    for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * kernels::gelu_grad(x[i]);
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->push(std::move(out), [t = a.tape, a](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    sink.add(a.id, g.reshaped(t->value(a.id).shape()));
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || begin > end || end > av.dim(1)) {
    throw std::invalid_argument("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                                ") invalid for " + shape_str(av.shape()));
  }
  const std::size_t r = av.dim(0), c = av.dim(1), w = end - begin;
  Tensor out(Shape{r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * c + begin + j];
  return a.tape->push(std::move(out), [a, begin, r, c, w](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    Tensor& ga = sink.grad(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * c + begin + j] += g[i * w + j];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].value().dim(0);
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Tensor& v = p.value();
    if (v.rank() != 2 || v.dim(0) != r) {
      throw std::invalid_argument("concat_cols: shape " + shape_str(v.shape()) + " incompatible with " +
                                  std::to_string(r) + " rows");
    }
    widths.push_back(v.dim(1));
    total += v.dim(1);
  }
  Tensor out(Shape{r, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = v[i * widths[k] + j];
    offset += widths[k];
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return parts[0].tape->push(std::move(out),
                             [ps, widths, r, total](const Tensor& g, const Tensor&, Tape::Sink& sink) {
                               std::size_t off = 0;
                               for (std::size_t k = 0; k < ps.size(); ++k) {
                                 Tensor& gp = sink.grad(ps[k].id);
                                 for (std::size_t i = 0; i < r; ++i)
                                   for (std::size_t j = 0; j < widths[k]; ++j)
                                     gp[i * widths[k] + j] += g[i * total + off + j];
                                 off += widths[k];
                               }
                             });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw std::invalid_argument("gather_rows: table must be a matrix, got " + shape_str(tv.shape()));
  const std::size_t rows = tv.dim(0), d = tv.dim(1);
  Tensor out(Shape{ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(rows) + " rows");
    }
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = tv[ids[i] * d + j];
  }
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  return table.tape->push(std::move(out), [table, idx, d](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    Tensor& gt = sink.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += g[i * d + j];
  });
}

Var masked_softmax(Var scores, const Tensor& additive_mask) {
  Tensor out = kernels::masked_softmax(scores.value(), additive_mask);
  // dL/ds_j = p_j (g_j − Σ_k p_k g_k) per row; dropped entries have p = 0.
  return scores.tape->push(std::move(out), [scores](const Tensor& g, const Tensor& p, Tape::Sink& sink) {
    const std::size_t n = p.cols();
    Tensor& gs = sink.grad(scores.id);
    for (std::size_t r = 0; n && r < p.numel() / n; ++r) {
      const double* pr = p.data().data() + r * n;
      const double* gr = g.data().data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += pr[j] * gr[j];
      for (std::size_t j = 0; j < n; ++j) gs[r * n + j] += pr[j] * (gr[j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  const Tensor& xv = x.value();
  const std::size_t d = xv.cols();
  if (xv.rank() == 0 || d == 0) throw std::invalid_argument("layer_norm: empty last axis in " + shape_str(xv.shape()));
  const Shape row{d};
  if (gamma.value().shape() != row || beta.value().shape() != row) {
    throw std::invalid_argument("layer_norm: gamma " + shape_str(gamma.value().shape()) + " / beta " +
                                shape_str(beta.value().shape()) + " do not match last axis " + shape_str(row));
  }
  const std::size_t rows = xv.rows();
  Tensor xhat(xv.shape());
  std::vector<double> inv_std(rows);
  Tensor out(xv.shape());
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mu) * inv_std[r];
      out[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
    }
  }
  Tape* t = x.tape;
  return t->push(std::move(out), [t, x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), d](
                                     const Tensor& g, const Tensor&, Tape::Sink& sink) {
    const Tensor& gv = t->value(gamma.id);
    const std::size_t rows = g.numel() / d;
    {
      Tensor& gg = sink.grad(gamma.id);
      Tensor& gb = sink.grad(beta.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < d; ++j) {
          gg[j] += g[r * d + j] * xhat[r * d + j];
          gb[j] += g[r * d + j];
        }
    }
    Tensor& gx = sink.grad(x.id);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dy = g[r * d + j] * gv[j];
        sum_dy += dy;
        sum_dy_xhat += dy * xhat[r * d + j];
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double dy = g[r * d + j] * gv[j];
        gx[r * d + j] += inv_std[r] * (dy - inv_d * sum_dy - xhat[r * d + j] * inv_d * sum_dy_xhat);
      }
    }
  });
}

Var cross_entropy(Var logits, std::size_t target) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 1) throw std::invalid_argument("cross_entropy expects 1-D logits, got " + shape_str(lv.shape()));
  const std::size_t n = lv.dim(0);
  if (target >= n) {
    throw std::out_of_range("cross_entropy: target " + std::to_string(target) + " outside " + std::to_string(n) +
                            " classes");
  }
  double peak = -std::numeric_limits<double>::infinity();
  for (double v : lv.data()) peak = std::max(peak, v);
  double total = 0.0;
  for (double v : lv.data()) total += std::exp(v - peak);
  const double log_z = peak + std::log(total);
  Tensor probs(lv.shape());
  for (std::size_t j = 0; j < n; ++j) probs[j] = std::exp(lv[j] - log_z);
  return logits.tape->push(Tensor::scalar(log_z - lv[target]),
                           [logits, target, probs = std::move(probs)](const Tensor& g, const Tensor&, Tape::Sink& sink) {
                             Tensor& gl = sink.grad(logits.id);
                             for (std::size_t j = 0; j < probs.numel(); ++j)
                               gl[j] += g[0] * (probs[j] - (j == target ? 1.0 : 0.0));
                           });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape->push(Tensor::scalar(total), [a](const Tensor& g, const Tensor&, Tape::Sink& sink) {
    Tensor& ga = sink.grad(a.id);
    for (double& v : ga.data()) v += g[0];
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().numel();
  if (n == 0) throw std::invalid_argument("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

}  // namespace ad
}  // namespace azlab
