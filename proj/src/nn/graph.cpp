#include "qgen/nn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "qgen/nn/kernels.hpp"

namespace qgen::nn {

Val Graph::push(Tensor val, bool needs_grad, std::function<void(Graph&, Node&)> back) {
  Node n;
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  if (needs_grad) n.grad = Tensor::zeros(n.val.shape);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Val{static_cast<int>(nodes_.size()) - 1};
}

void Graph::require_vec(Val v, const char* op) const {
  if (node(v).val.ndim() != 1) throw DataError(std::string(op) + ": expected 1-D tensor");
}

Val Graph::input(Tensor t) { return push(std::move(t), false, nullptr); }

Val Graph::param(const std::string& name, const Tensor& t) {
  Val v = push(t, true, nullptr);
  params_.push_back({name, v.i});
  return v;
}

Val Graph::add(Val a, Val b) {
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (!ta.same_shape(tb)) throw DataError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += tb.v[i];
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.i, bi = b.i;
  return push(std::move(out), ng, [ai, bi](Graph& g, Node& n) {
    for (int p : {ai, bi}) {
      Node& pn = g.nodes_[static_cast<size_t>(p)];
      if (!pn.needs_grad) continue;
      for (size_t i = 0; i < n.grad.v.size(); ++i) pn.grad.v[i] += n.grad.v[i];
    }
  });
}

Val Graph::sub(Val a, Val b) {
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (!ta.same_shape(tb)) throw DataError("sub: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] -= tb.v[i];
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.i, bi = b.i;
  return push(std::move(out), ng, [ai, bi](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    Node& pb = g.nodes_[static_cast<size_t>(bi)];
    if (pa.needs_grad)
      for (size_t i = 0; i < n.grad.v.size(); ++i) pa.grad.v[i] += n.grad.v[i];
    if (pb.needs_grad)
      for (size_t i = 0; i < n.grad.v.size(); ++i) pb.grad.v[i] -= n.grad.v[i];
  });
}

Val Graph::mul(Val a, Val b) {
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (!ta.same_shape(tb)) throw DataError("mul: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= tb.v[i];
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.i, bi = b.i;
  return push(std::move(out), ng, [ai, bi](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    Node& pb = g.nodes_[static_cast<size_t>(bi)];
    if (pa.needs_grad)
      for (size_t i = 0; i < n.grad.v.size(); ++i) pa.grad.v[i] += n.grad.v[i] * pb.val.v[i];
    if (pb.needs_grad)
      for (size_t i = 0; i < n.grad.v.size(); ++i) pb.grad.v[i] += n.grad.v[i] * pa.val.v[i];
  });
}

Val Graph::scale(Val a, double s) {
  Tensor out = node(a).val;
  for (double& x : out.v) x *= s;
  int ai = a.i;
  return push(std::move(out), node(a).needs_grad, [ai, s](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    if (!pa.needs_grad) return;
    for (size_t i = 0; i < n.grad.v.size(); ++i) pa.grad.v[i] += s * n.grad.v[i];
  });
}

Val Graph::tanh_(Val a) {
  Tensor out = node(a).val;
  for (double& x : out.v) x = std::tanh(x);
  int ai = a.i;
  return push(std::move(out), node(a).needs_grad, [ai](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    if (!pa.needs_grad) return;
    for (size_t i = 0; i < n.grad.v.size(); ++i) {
      double y = n.val.v[i];
      pa.grad.v[i] += n.grad.v[i] * (1.0 - y * y);
    }
  });
}

Val Graph::sigmoid_(Val a) {
  Tensor out = node(a).val;
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  int ai = a.i;
  return push(std::move(out), node(a).needs_grad, [ai](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    if (!pa.needs_grad) return;
    for (size_t i = 0; i < n.grad.v.size(); ++i) {
      double y = n.val.v[i];
      pa.grad.v[i] += n.grad.v[i] * y * (1.0 - y);
    }
  });
}

Val Graph::abs_(Val a) {
  Tensor out = node(a).val;
  for (double& x : out.v) x = std::fabs(x);
  int ai = a.i;
  return push(std::move(out), node(a).needs_grad, [ai](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    if (!pa.needs_grad) return;
    for (size_t i = 0; i < n.grad.v.size(); ++i) {
      double x = pa.val.v[i];
      double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      pa.grad.v[i] += n.grad.v[i] * s;
    }
  });
}

Val Graph::max_(Val a, Val b) {
  const Tensor& ta = node(a).val;
  const Tensor& tb = node(b).val;
  if (!ta.same_shape(tb)) throw DataError("max: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = std::max(ta.v[i], tb.v[i]);
  bool ng = node(a).needs_grad || node(b).needs_grad;
  int ai = a.i, bi = b.i;
  return push(std::move(out), ng, [ai, bi](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    Node& pb = g.nodes_[static_cast<size_t>(bi)];
    for (size_t i = 0; i < n.grad.v.size(); ++i) {
      // Ties route to the first argument.
      if (pa.val.v[i] >= pb.val.v[i]) {
        if (pa.needs_grad) pa.grad.v[i] += n.grad.v[i];
      } else if (pb.needs_grad) {
        pb.grad.v[i] += n.grad.v[i];
      }
    }
  });
}

Val Graph::matvec(Val W, Val x) {
  const Tensor& tw = node(W).val;
  const Tensor& tx = node(x).val;
  if (tw.ndim() != 2 || tx.ndim() != 1 || tw.cols() != tx.dim(0))
    throw DataError("matvec: shape mismatch " + tw.shape_str() + " · " + tx.shape_str());
  Tensor out = Tensor::zeros({tw.rows()});
  kernels::matvec(tw.v.data(), tx.v.data(), out.v.data(), tw.rows(), tw.cols());
  bool ng = node(W).needs_grad || node(x).needs_grad;
  int wi = W.i, xi = x.i;
  return push(std::move(out), ng, [wi, xi](Graph& g, Node& n) {
    Node& pw = g.nodes_[static_cast<size_t>(wi)];
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    const int m = pw.val.rows(), k = pw.val.cols();
    if (pw.needs_grad) kernels::outer_acc(pw.grad.v.data(), n.grad.v.data(), px.val.v.data(), m, k);
    if (px.needs_grad) {
      Tensor tmp = Tensor::zeros({k});
      kernels::matvec_t(pw.val.v.data(), n.grad.v.data(), tmp.v.data(), m, k);
      for (int j = 0; j < k; ++j) px.grad.v[static_cast<size_t>(j)] += tmp.v[static_cast<size_t>(j)];
    }
  });
}

Val Graph::matvec_t(Val W, Val x) {
  const Tensor& tw = node(W).val;
  const Tensor& tx = node(x).val;
  if (tw.ndim() != 2 || tx.ndim() != 1 || tw.rows() != tx.dim(0))
    throw DataError("matvec_t: shape mismatch " + tw.shape_str() + "^T · " + tx.shape_str());
  Tensor out = Tensor::zeros({tw.cols()});
  kernels::matvec_t(tw.v.data(), tx.v.data(), out.v.data(), tw.rows(), tw.cols());
  bool ng = node(W).needs_grad || node(x).needs_grad;
  int wi = W.i, xi = x.i;
  return push(std::move(out), ng, [wi, xi](Graph& g, Node& n) {
    Node& pw = g.nodes_[static_cast<size_t>(wi)];
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    const int m = pw.val.rows(), k = pw.val.cols();
    if (pw.needs_grad) kernels::outer_acc(pw.grad.v.data(), px.val.v.data(), n.grad.v.data(), m, k);
    if (px.needs_grad) {
      Tensor tmp = Tensor::zeros({m});
      kernels::matvec(pw.val.v.data(), n.grad.v.data(), tmp.v.data(), m, k);
      for (int j = 0; j < m; ++j) px.grad.v[static_cast<size_t>(j)] += tmp.v[static_cast<size_t>(j)];
    }
  });
}

Val Graph::concat(const std::vector<Val>& xs) {
  if (xs.empty()) throw DataError("concat: empty list");
  int total = 0;
  bool ng = false;
  for (Val x : xs) {
    require_vec(x, "concat");
    total += node(x).val.dim(0);
    ng = ng || node(x).needs_grad;
  }
  Tensor out = Tensor::zeros({total});
  int off = 0;
  for (Val x : xs) {
    const Tensor& t = node(x).val;
    std::copy(t.v.begin(), t.v.end(), out.v.begin() + off);
    off += t.dim(0);
  }
  std::vector<int> parents;
  parents.reserve(xs.size());
  for (Val x : xs) parents.push_back(x.i);
  return push(std::move(out), ng, [parents](Graph& g, Node& n) {
    int off2 = 0;
    for (int p : parents) {
      Node& pn = g.nodes_[static_cast<size_t>(p)];
      int len = pn.val.dim(0);
      if (pn.needs_grad)
        for (int i = 0; i < len; ++i) pn.grad.v[static_cast<size_t>(i)] += n.grad.v[static_cast<size_t>(off2 + i)];
      off2 += len;
    }
  });
}

Val Graph::slice(Val a, int from, int len) {
  require_vec(a, "slice");
  const Tensor& ta = node(a).val;
  if (from < 0 || len <= 0 || from + len > ta.dim(0)) throw DataError("slice: out of range");
  Tensor out = Tensor::zeros({len});
  std::copy(ta.v.begin() + from, ta.v.begin() + from + len, out.v.begin());
  int ai = a.i;
  return push(std::move(out), node(a).needs_grad, [ai, from, len](Graph& g, Node& n) {
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    if (!pa.needs_grad) return;
    for (int i = 0; i < len; ++i) pa.grad.v[static_cast<size_t>(from + i)] += n.grad.v[static_cast<size_t>(i)];
  });
}

Val Graph::stack_rows(const std::vector<Val>& xs) {
  if (xs.empty()) throw DataError("stack_rows: empty list");
  const int k = node(xs[0]).val.dim(0);
  bool ng = false;
  for (Val x : xs) {
    require_vec(x, "stack_rows");
    if (node(x).val.dim(0) != k) throw DataError("stack_rows: ragged rows");
    ng = ng || node(x).needs_grad;
  }
  const int m = static_cast<int>(xs.size());
  Tensor out = Tensor::zeros({m, k});
  for (int r = 0; r < m; ++r) {
    const Tensor& t = node(xs[static_cast<size_t>(r)]).val;
    std::copy(t.v.begin(), t.v.end(), out.v.begin() + static_cast<size_t>(r) * k);
  }
  std::vector<int> parents;
  parents.reserve(xs.size());
  for (Val x : xs) parents.push_back(x.i);
  return push(std::move(out), ng, [parents, k](Graph& g, Node& n) {
    for (size_t r = 0; r < parents.size(); ++r) {
      Node& pn = g.nodes_[static_cast<size_t>(parents[r])];
      if (!pn.needs_grad) continue;
      for (int j = 0; j < k; ++j) pn.grad.v[static_cast<size_t>(j)] += n.grad.v[r * static_cast<size_t>(k) + j];
    }
  });
}

Val Graph::row(Val m, int r) {
  const Tensor& tm = node(m).val;
  if (tm.ndim() != 2) throw DataError("row: expected matrix");
  if (r < 0 || r >= tm.rows()) throw DataError("row: index out of range");
  const int k = tm.cols();
  Tensor out = Tensor::zeros({k});
  std::copy(tm.v.begin() + static_cast<size_t>(r) * k, tm.v.begin() + static_cast<size_t>(r + 1) * k, out.v.begin());
  int mi = m.i;
  return push(std::move(out), node(m).needs_grad, [mi, r, k](Graph& g, Node& n) {
    Node& pm = g.nodes_[static_cast<size_t>(mi)];
    if (!pm.needs_grad) return;
    for (int j = 0; j < k; ++j) pm.grad.v[static_cast<size_t>(r) * k + j] += n.grad.v[static_cast<size_t>(j)];
  });
}

Val Graph::softmax(Val x) {
  require_vec(x, "softmax");
  const Tensor& tx = node(x).val;
  if (tx.dim(0) == 0) throw DataError("softmax: empty axis");
  Tensor out = tx;
  double mx = out.v[0];
  for (double v : out.v) mx = std::max(mx, v);
  double z = 0.0;
  for (double& v : out.v) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : out.v) v /= z;
  int xi = x.i;
  return push(std::move(out), node(x).needs_grad, [xi](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    double dot = 0.0;
    for (size_t i = 0; i < n.val.v.size(); ++i) dot += n.grad.v[i] * n.val.v[i];
    for (size_t i = 0; i < n.val.v.size(); ++i) px.grad.v[i] += n.val.v[i] * (n.grad.v[i] - dot);
  });
}

Val Graph::log_softmax(Val x) {
  require_vec(x, "log_softmax");
  const Tensor& tx = node(x).val;
  if (tx.dim(0) == 0) throw DataError("log_softmax: empty axis");
  Tensor out = tx;
  double mx = out.v[0];
  for (double v : out.v) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : out.v) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  for (double& v : out.v) v -= lse;
  int xi = x.i;
  return push(std::move(out), node(x).needs_grad, [xi](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    double gsum = 0.0;
    for (double gv : n.grad.v) gsum += gv;
    for (size_t i = 0; i < n.val.v.size(); ++i)
      px.grad.v[i] += n.grad.v[i] - std::exp(n.val.v[i]) * gsum;
  });
}

Val Graph::pick(Val x, int idx) {
  require_vec(x, "pick");
  const Tensor& tx = node(x).val;
  if (idx < 0 || idx >= tx.dim(0)) throw DataError("pick: index out of range");
  Tensor out = Tensor::scalar(tx.v[static_cast<size_t>(idx)]);
  int xi = x.i;
  return push(std::move(out), node(x).needs_grad, [xi, idx](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    px.grad.v[static_cast<size_t>(idx)] += n.grad.v[0];
  });
}

Val Graph::log_(Val x) {
  Tensor out = node(x).val;
  for (double& v : out.v) v = std::log(std::max(v, 1e-300));
  int xi = x.i;
  return push(std::move(out), node(x).needs_grad, [xi](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    for (size_t i = 0; i < n.val.v.size(); ++i)
      px.grad.v[i] += n.grad.v[i] / std::max(px.val.v[i], 1e-300);
  });
}

Val Graph::sum(Val x) {
  const Tensor& tx = node(x).val;
  double s = 0.0;
  for (double v : tx.v) s += v;
  int xi = x.i;
  return push(Tensor::scalar(s), node(x).needs_grad, [xi](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    for (double& gv : px.grad.v) gv += n.grad.v[0];
  });
}

Val Graph::mean(Val x) {
  const Tensor& tx = node(x).val;
  const double inv = 1.0 / static_cast<double>(tx.numel());
  double s = 0.0;
  for (double v : tx.v) s += v;
  int xi = x.i;
  return push(Tensor::scalar(s * inv), node(x).needs_grad, [xi, inv](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    for (double& gv : px.grad.v) gv += n.grad.v[0] * inv;
  });
}

Val Graph::maxout_pairs(Val x) {
  require_vec(x, "maxout_pairs");
  const Tensor& tx = node(x).val;
  if (tx.dim(0) % 2 != 0) throw DataError("maxout_pairs: odd input size");
  const int k = tx.dim(0) / 2;
  Tensor out = Tensor::zeros({k});
  for (int j = 0; j < k; ++j)
    out.v[static_cast<size_t>(j)] = std::max(tx.v[static_cast<size_t>(2 * j)], tx.v[static_cast<size_t>(2 * j + 1)]);
  int xi = x.i;
  return push(std::move(out), node(x).needs_grad, [xi, k](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    if (!px.needs_grad) return;
    for (int j = 0; j < k; ++j) {
      size_t a = static_cast<size_t>(2 * j), b = a + 1;
      size_t win = px.val.v[a] >= px.val.v[b] ? a : b;
      px.grad.v[win] += n.grad.v[static_cast<size_t>(j)];
    }
  });
}

Val Graph::max_over_time(const std::vector<Val>& xs) {
  if (xs.empty()) throw DataError("max_over_time: empty sequence");
  const int k = node(xs[0]).val.dim(0);
  bool ng = false;
  for (Val x : xs) {
    require_vec(x, "max_over_time");
    if (node(x).val.dim(0) != k) throw DataError("max_over_time: ragged rows");
    ng = ng || node(x).needs_grad;
  }
  Tensor out = node(xs[0]).val;
  std::vector<int> argmax(static_cast<size_t>(k), 0);
  for (size_t t = 1; t < xs.size(); ++t) {
    const Tensor& tv = node(xs[t]).val;
    for (int j = 0; j < k; ++j) {
      if (tv.v[static_cast<size_t>(j)] > out.v[static_cast<size_t>(j)]) {
        out.v[static_cast<size_t>(j)] = tv.v[static_cast<size_t>(j)];
        argmax[static_cast<size_t>(j)] = static_cast<int>(t);
      }
    }
  }
  std::vector<int> parents;
  parents.reserve(xs.size());
  for (Val x : xs) parents.push_back(x.i);
  return push(std::move(out), ng, [parents, argmax, k](Graph& g, Node& n) {
    for (int j = 0; j < k; ++j) {
      Node& pn = g.nodes_[static_cast<size_t>(parents[static_cast<size_t>(argmax[static_cast<size_t>(j)])])];
      if (pn.needs_grad) pn.grad.v[static_cast<size_t>(j)] += n.grad.v[static_cast<size_t>(j)];
    }
  });
}

Val Graph::mix_copy(Val pv, Val alpha, Val gate, const std::vector<int>& slot, int ext_size) {
  require_vec(pv, "mix_copy");
  require_vec(alpha, "mix_copy");
  const Tensor& tp = node(pv).val;
  const Tensor& ta = node(alpha).val;
  const Tensor& tg = node(gate).val;
  if (tg.numel() != 1) throw DataError("mix_copy: gate must be scalar");
  if (static_cast<int>(slot.size()) != ta.dim(0)) throw DataError("mix_copy: slot/alpha size mismatch");
  if (ext_size < tp.dim(0)) throw DataError("mix_copy: extended size smaller than vocabulary");
  for (int s : slot)
    if (s < 0 || s >= ext_size) throw DataError("mix_copy: slot id out of range");
  const double g0 = tg.v[0];
  Tensor out = Tensor::zeros({ext_size});
  for (int j = 0; j < tp.dim(0); ++j) out.v[static_cast<size_t>(j)] = g0 * tp.v[static_cast<size_t>(j)];
  for (size_t i = 0; i < slot.size(); ++i)
    out.v[static_cast<size_t>(slot[i])] += (1.0 - g0) * ta.v[i];
  bool ng = node(pv).needs_grad || node(alpha).needs_grad || node(gate).needs_grad;
  int pi = pv.i, ai = alpha.i, gi = gate.i;
  return push(std::move(out), ng, [pi, ai, gi, slot](Graph& g, Node& n) {
    Node& pp = g.nodes_[static_cast<size_t>(pi)];
    Node& pa = g.nodes_[static_cast<size_t>(ai)];
    Node& pg = g.nodes_[static_cast<size_t>(gi)];
    const double g0 = pg.val.v[0];
    if (pp.needs_grad)
      for (size_t j = 0; j < pp.val.v.size(); ++j) pp.grad.v[j] += g0 * n.grad.v[j];
    if (pa.needs_grad)
      for (size_t i = 0; i < slot.size(); ++i)
        pa.grad.v[i] += (1.0 - g0) * n.grad.v[static_cast<size_t>(slot[i])];
    if (pg.needs_grad) {
      double acc = 0.0;
      for (size_t j = 0; j < pp.val.v.size(); ++j) acc += pp.val.v[j] * n.grad.v[j];
      for (size_t i = 0; i < slot.size(); ++i)
        acc -= pa.val.v[i] * n.grad.v[static_cast<size_t>(slot[i])];
      pg.grad.v[0] += acc;
    }
  });
}

Val Graph::lstm_cell(Val x, Val h_prev, Val c_prev, Val Wx, Val Wh, Val b) {
  const Tensor& tb = node(b).val;
  if (tb.ndim() != 1 || tb.dim(0) % 4 != 0) throw DataError("lstm_cell: bad bias shape");
  const int hidden = tb.dim(0) / 4;
  const Tensor& twx = node(Wx).val;
  const Tensor& twh = node(Wh).val;
  const Tensor& tx = node(x).val;
  const Tensor& th = node(h_prev).val;
  const Tensor& tc = node(c_prev).val;
  if (twx.ndim() != 2 || twx.rows() != 4 * hidden || twx.cols() != tx.dim(0) ||
      twh.ndim() != 2 || twh.rows() != 4 * hidden || twh.cols() != hidden ||
      th.dim(0) != hidden || tc.dim(0) != hidden)
    throw DataError("lstm_cell: state size does not match parameters");

  // gates = Wx x + Wh h + b
  std::vector<double> pre(static_cast<size_t>(4 * hidden));
  kernels::matvec(twx.v.data(), tx.v.data(), pre.data(), 4 * hidden, twx.cols());
  {
    std::vector<double> hh(static_cast<size_t>(4 * hidden));
    kernels::matvec(twh.v.data(), th.v.data(), hh.data(), 4 * hidden, hidden);
    for (int j = 0; j < 4 * hidden; ++j)
      pre[static_cast<size_t>(j)] += hh[static_cast<size_t>(j)] + tb.v[static_cast<size_t>(j)];
  }
  // aux rows: i, f, o, cand, tanh(c)
  Tensor aux = Tensor::zeros({5 * hidden});
  Tensor out = Tensor::zeros({2 * hidden});
  for (int j = 0; j < hidden; ++j) {
    const double ig = 1.0 / (1.0 + std::exp(-pre[static_cast<size_t>(j)]));
    const double fg = 1.0 / (1.0 + std::exp(-pre[static_cast<size_t>(hidden + j)]));
    const double og = 1.0 / (1.0 + std::exp(-pre[static_cast<size_t>(2 * hidden + j)]));
    const double cand = std::tanh(pre[static_cast<size_t>(3 * hidden + j)]);
    const double c_new = fg * tc.v[static_cast<size_t>(j)] + ig * cand;
    const double tc_new = std::tanh(c_new);
    aux.v[static_cast<size_t>(j)] = ig;
    aux.v[static_cast<size_t>(hidden + j)] = fg;
    aux.v[static_cast<size_t>(2 * hidden + j)] = og;
    aux.v[static_cast<size_t>(3 * hidden + j)] = cand;
    aux.v[static_cast<size_t>(4 * hidden + j)] = tc_new;
    out.v[static_cast<size_t>(j)] = og * tc_new;
    out.v[static_cast<size_t>(hidden + j)] = c_new;
  }
  bool ng = node(x).needs_grad || node(h_prev).needs_grad || node(c_prev).needs_grad ||
            node(Wx).needs_grad || node(Wh).needs_grad || node(b).needs_grad;
  int xi = x.i, hi = h_prev.i, ci = c_prev.i, wxi = Wx.i, whi = Wh.i, bi = b.i;
  return push(std::move(out), ng,
              [xi, hi, ci, wxi, whi, bi, hidden, aux = std::move(aux)](Graph& g, Node& n) {
    Node& px = g.nodes_[static_cast<size_t>(xi)];
    Node& ph = g.nodes_[static_cast<size_t>(hi)];
    Node& pc = g.nodes_[static_cast<size_t>(ci)];
    Node& pwx = g.nodes_[static_cast<size_t>(wxi)];
    Node& pwh = g.nodes_[static_cast<size_t>(whi)];
    Node& pb = g.nodes_[static_cast<size_t>(bi)];
    std::vector<double> dpre(static_cast<size_t>(4 * hidden));
    for (int j = 0; j < hidden; ++j) {
      const double ig = aux.v[static_cast<size_t>(j)];
      const double fg = aux.v[static_cast<size_t>(hidden + j)];
      const double og = aux.v[static_cast<size_t>(2 * hidden + j)];
      const double cand = aux.v[static_cast<size_t>(3 * hidden + j)];
      const double tc_new = aux.v[static_cast<size_t>(4 * hidden + j)];
      const double dh = n.grad.v[static_cast<size_t>(j)];
      const double dc_out = n.grad.v[static_cast<size_t>(hidden + j)];
      const double dct = dc_out + dh * og * (1.0 - tc_new * tc_new);
      const double dog = dh * tc_new;
      const double dig = dct * cand;
      const double dfg = dct * pc.val.v[static_cast<size_t>(j)];
      const double dcand = dct * ig;
      dpre[static_cast<size_t>(j)] = dig * ig * (1.0 - ig);
      dpre[static_cast<size_t>(hidden + j)] = dfg * fg * (1.0 - fg);
      dpre[static_cast<size_t>(2 * hidden + j)] = dog * og * (1.0 - og);
      dpre[static_cast<size_t>(3 * hidden + j)] = dcand * (1.0 - cand * cand);
      if (pc.needs_grad) pc.grad.v[static_cast<size_t>(j)] += dct * fg;
    }
    const int in = pwx.val.cols();
    if (pwx.needs_grad) kernels::outer_acc(pwx.grad.v.data(), dpre.data(), px.val.v.data(), 4 * hidden, in);
    if (pwh.needs_grad) kernels::outer_acc(pwh.grad.v.data(), dpre.data(), ph.val.v.data(), 4 * hidden, hidden);
    if (pb.needs_grad)
      for (int j = 0; j < 4 * hidden; ++j) pb.grad.v[static_cast<size_t>(j)] += dpre[static_cast<size_t>(j)];
    if (px.needs_grad) {
      std::vector<double> tmp(static_cast<size_t>(in));
      kernels::matvec_t(pwx.val.v.data(), dpre.data(), tmp.data(), 4 * hidden, in);
      for (int j = 0; j < in; ++j) px.grad.v[static_cast<size_t>(j)] += tmp[static_cast<size_t>(j)];
    }
    if (ph.needs_grad) {
      std::vector<double> tmp(static_cast<size_t>(hidden));
      kernels::matvec_t(pwh.val.v.data(), dpre.data(), tmp.data(), 4 * hidden, hidden);
      for (int j = 0; j < hidden; ++j) ph.grad.v[static_cast<size_t>(j)] += tmp[static_cast<size_t>(j)];
    }
  });
}

void Graph::backward(Val loss, GradMap& out) {
  Node& ln = node(loss);
  if (ln.val.numel() != 1) throw NumericError("backward: loss must be scalar");
  if (!std::isfinite(ln.val.v[0])) throw NumericError("backward: non-finite loss");
  if (!ln.needs_grad) return;  // nothing depends on parameters
  ln.grad.v[0] = 1.0;
  for (int i = loss.i; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.needs_grad && n.back) n.back(*this, n);
  }
  for (const ParamRef& p : params_) {
    const Node& n = nodes_[static_cast<size_t>(p.node)];
    auto it = out.find(p.name);
    if (it == out.end()) {
      out.emplace(p.name, n.grad);
    } else {
      if (!it->second.same_shape(n.grad)) throw DataError("backward: gradient shape mismatch for " + p.name);
      for (size_t i = 0; i < n.grad.v.size(); ++i) it->second.v[i] += n.grad.v[i];
    }
  }
}

}  // namespace qgen::nn
