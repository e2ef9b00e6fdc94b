#include "medsel/bilstm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "medsel/kernels.hpp"

namespace medsel {
namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void run_direction(const SelectorParams& params, const SelectorParams::Direction& dir, const Mat64& projected,
                   bool reverse, DirectionTape& out) {
  const kernels::Table& k = kernels::active();
  const std::size_t n = projected.rows();
  const std::size_t h = params.hidden();
  const double* wx = params.block(dir.wx);
  const double* wh = params.block(dir.wh);
  const double* bias = params.block(dir.b);

  Mat64 z(n, 4 * h);
  for (std::size_t t = 0; t < n; ++t) std::copy(bias, bias + 4 * h, z.row(t).begin());
  k.gemm_nt_acc(projected.data(), wx, z.data(), n, 4 * h, h);

  out.gates = Mat64(n, 4 * h);
  out.cell = Mat64(n, h);
  out.cell_tanh = Mat64(n, h);
  out.hidden = Mat64(n, h);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    auto zt = z.row(t);
    const double* c_prev = nullptr;
    if (step > 0) {
      const std::size_t prev = reverse ? t + 1 : t - 1;
      k.gemv_acc(wh, 4 * h, h, out.hidden.row(prev).data(), zt.data());
      c_prev = out.cell.row(prev).data();
    }
    auto gates = out.gates.row(t);
    auto c = out.cell.row(t);
    auto tc = out.cell_tanh.row(t);
    auto hid = out.hidden.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const double ig = sigmoid(zt[j]);
      const double fg = sigmoid(zt[h + j]);
      const double gg = std::tanh(zt[2 * h + j]);
      const double og = sigmoid(zt[3 * h + j]);
      gates[j] = ig;
      gates[h + j] = fg;
      gates[2 * h + j] = gg;
      gates[3 * h + j] = og;
      c[j] = (c_prev ? fg * c_prev[j] : 0.0) + ig * gg;
      tc[j] = std::tanh(c[j]);
      hid[j] = og * tc[j];
    }
  }
}

void backprop_direction(const SelectorParams& params, const SelectorParams::Direction& dir, const double* head_w,
                        const Mat64& projected, const DirectionTape& tape, bool reverse,
                        std::span<const double> dlogits, std::span<double> grad, Mat64& d_projected) {
  const kernels::Table& k = kernels::active();
  const std::size_t n = projected.rows();
  const std::size_t h = params.hidden();
  const double* wx = params.block(dir.wx);
  const double* wh = params.block(dir.wh);

  Mat64 dz(n, 4 * h);
  Mat64 h_prev(n, h);  // row t: hidden state feeding position t (zero at the sequence start)
  Vec64 dh_rec(h, 0.0), dc_carry(h, 0.0), dh(h);
  for (std::size_t step = n; step-- > 0;) {
    const std::size_t t = reverse ? n - 1 - step : step;
    const bool has_prev = step > 0;
    const std::size_t prev = reverse ? t + 1 : t - 1;
    const auto gates = tape.gates.row(t);
    const auto tc = tape.cell_tanh.row(t);
    auto dzt = dz.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      dh[j] = dlogits[t] * head_w[j] + dh_rec[j];
      const double ig = gates[j], fg = gates[h + j], gg = gates[2 * h + j], og = gates[3 * h + j];
      const double d_out = dh[j] * tc[j];
      const double dc = dh[j] * og * (1.0 - tc[j] * tc[j]) + dc_carry[j];
      const double c_prev = has_prev ? tape.cell(prev, j) : 0.0;
      dzt[j] = dc * gg * ig * (1.0 - ig);
      dzt[h + j] = dc * c_prev * fg * (1.0 - fg);
      dzt[2 * h + j] = dc * ig * (1.0 - gg * gg);
      dzt[3 * h + j] = d_out * og * (1.0 - og);
      dc_carry[j] = dc * fg;
    }
    std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
    if (has_prev) {
      k.gemv_t_acc(wh, 4 * h, h, dzt.data(), dh_rec.data());
      const auto hp = tape.hidden.row(prev);
      std::copy(hp.begin(), hp.end(), h_prev.row(t).begin());
    }
  }

  k.gemm_tn_acc(dz.data(), h_prev.data(), grad.data() + dir.wh, 4 * h, h, n);
  k.gemm_tn_acc(dz.data(), projected.data(), grad.data() + dir.wx, 4 * h, h, n);
  double* gb = grad.data() + dir.b;
  for (std::size_t t = 0; t < n; ++t) {
    const auto dzt = dz.row(t);
    for (std::size_t r = 0; r < 4 * h; ++r) gb[r] += dzt[r];
  }
  k.gemm_nn_acc(dz.data(), wx, d_projected.data(), n, h, 4 * h);
}

}  // namespace

Vec64 bilstm_forward(const SelectorParams& params, const Mat64& inputs, ForwardTape* tape) {
  if (inputs.cols() != params.input_dim())
    throw std::invalid_argument("bilstm_forward: input dimension " + std::to_string(inputs.cols()) +
                                " does not match selector input dimension " + std::to_string(params.input_dim()));
  if (inputs.rows() == 0) throw std::invalid_argument("bilstm_forward: empty pool");
  const kernels::Table& k = kernels::active();
  const auto& l = params.layout();
  const std::size_t n = inputs.rows(), h = params.hidden(), d = params.input_dim();

  ForwardTape local;
  ForwardTape& tp = tape ? *tape : local;
  tp.params_version = params.version();
  tp.projected = Mat64(n, h);
  const double* pb = params.block(l.proj_b);
  for (std::size_t t = 0; t < n; ++t) std::copy(pb, pb + h, tp.projected.row(t).begin());
  k.gemm_nt_acc(inputs.data(), params.block(l.proj_w), tp.projected.data(), n, h, d);

  run_direction(params, l.fwd, tp.projected, false, tp.fwd);
  run_direction(params, l.bwd, tp.projected, true, tp.bwd);

  const double* hw = params.block(l.head_w);
  const double hb = *params.block(l.head_b);
  tp.logits.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    tp.logits[t] = k.dot(hw, tp.fwd.hidden.row(t).data(), h) + k.dot(hw + h, tp.bwd.hidden.row(t).data(), h) + hb;
  return tp.logits;
}

void bilstm_backward(const SelectorParams& params, const Mat64& inputs, const ForwardTape& tape,
                     std::span<const double> dlogits, std::span<double> grad) {
  if (tape.params_version != params.version())
    throw std::logic_error("bilstm_backward: tape was recorded under different selector weights");
  if (grad.size() != params.size()) throw std::invalid_argument("bilstm_backward: gradient buffer has wrong size");
  const std::size_t n = inputs.rows(), h = params.hidden(), d = params.input_dim();
  if (dlogits.size() != n || tape.projected.rows() != n)
    throw std::invalid_argument("bilstm_backward: sequence length mismatch");
  const kernels::Table& k = kernels::active();
  const auto& l = params.layout();
  const double* hw = params.block(l.head_w);

  double* g_head = grad.data() + l.head_w;
  for (std::size_t t = 0; t < n; ++t) {
    if (dlogits[t] == 0.0) continue;
    k.axpy(dlogits[t], tape.fwd.hidden.row(t).data(), g_head, h);
    k.axpy(dlogits[t], tape.bwd.hidden.row(t).data(), g_head + h, h);
    grad[l.head_b] += dlogits[t];
  }

  Mat64 d_projected(n, h);
  backprop_direction(params, l.fwd, hw, tape.projected, tape.fwd, false, dlogits, grad, d_projected);
  backprop_direction(params, l.bwd, hw + h, tape.projected, tape.bwd, true, dlogits, grad, d_projected);

  k.gemm_tn_acc(d_projected.data(), inputs.data(), grad.data() + l.proj_w, h, d, n);
  double* gpb = grad.data() + l.proj_b;
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = d_projected.row(t);
    for (std::size_t j = 0; j < h; ++j) gpb[j] += row[j];
  }
}

}  // namespace medsel
