#include "lipcert/lmi.hpp"

#include <cmath>

#include "lipcert/error.hpp"

namespace lipcert {

namespace {

using Eigen::MatrixXd;

void add_incoming(BlockBuilder& builder, int off, const IncomingSupply& in) {
  if (in.is_gamma) {
    builder.add_scaled_identity(off, in.copies, in.var, 1.0);
  } else {
    builder.add_block_diagonal(off, in.var, in.copies, -1.0);
  }
}

}  // namespace

PoolingPlan pooling_plan(const ValidatedNetwork& net) {
  PoolingPlan plan;
  plan.diagonal_q.assign(static_cast<std::size_t>(net.num_layers()), false);
  for (int i : net.pool_layers()) {
    const auto& pool = std::get<PoolLayerSpec>(net.layer(i));
    plan.ties.push_back({i, i - 1});
    if (pool.kind == PoolKind::kAverage) {
      plan.mu_product /= std::sqrt(static_cast<double>(pool.window));
    } else {
      plan.diagonal_q[static_cast<std::size_t>(i - 1)] = true;
    }
  }
  return plan;
}

IncomingSupply gamma_supply(const VariableRef& gamma_sq, int size) {
  return {gamma_sq, size, true};
}

IncomingSupply layer_supply(const VariableRef& q, int copies) {
  return {q, copies, false};
}

std::string gamma_tilde_name() { return "gamma_tilde_sq"; }
std::string dense_gamma_name() { return "gamma_sq"; }
std::string q_name(int layer) { return "Q_" + std::to_string(layer); }
std::string lambda_name(int layer) { return "Lambda_" + std::to_string(layer); }
std::string p_name(int layer) { return "P_" + std::to_string(layer); }

PsdBlock conv_layer_block(const std::string& label, const StateSpaceRealization& ss,
                          const IncomingSupply& incoming, const std::optional<LayerMultipliers>& mult,
                          const std::optional<VariableRef>& p) {
  const int nx = ss.state_dim();
  const int cin = ss.input_dim();
  const int cout = ss.output_dim();
  if (incoming.size() != cin) {
    throw Error(ErrorCode::kDimensionMismatch, label + ": incoming supply has size " +
                                                   std::to_string(incoming.size()) + ", expected " +
                                                   std::to_string(cin));
  }
  if (mult && (mult->q.dim != cout || mult->lambda.dim != cout)) {
    throw Error(ErrorCode::kDimensionMismatch, label + ": multiplier size != output channels");
  }
  if (nx > 0 && (!p || p->dim != nx)) {
    throw Error(ErrorCode::kDimensionMismatch, label + ": state multiplier size != state dimension");
  }

  BlockBuilder b(label, nx + cin + cout);
  const int u = nx;
  const int y = nx + cin;
  if (nx > 0) {
    const MatrixXd I = MatrixXd::Identity(nx, nx);
    b.add_term(0, 0, *p, I, I, 1.0);
    b.add_term(0, 0, *p, ss.A, ss.A, -1.0);
    b.add_term(0, u, *p, ss.A, ss.B, -1.0);
    b.add_term(u, u, *p, ss.B, ss.B, -1.0);
  }
  add_incoming(b, u, incoming);
  const MatrixXd Iy = MatrixXd::Identity(cout, cout);
  if (mult) {
    if (nx > 0) b.add_term(0, y, mult->lambda, ss.C, Iy, -1.0);
    b.add_term(u, y, mult->lambda, ss.D, Iy, -1.0);
    b.add_term(y, y, mult->lambda, Iy, Iy, 2.0);
    b.add_term(y, y, mult->q, Iy, Iy, 1.0);
  } else {
    if (nx > 0) b.add_constant(0, y, -ss.C.transpose());
    b.add_constant(u, y, -ss.D.transpose());
    b.add_constant(y, y, Iy);
  }
  return b.build();
}

PsdBlock fc_layer_block(const std::string& label, const MatrixXd& w, const IncomingSupply& incoming,
                        const LayerMultipliers& mult) {
  const int nin = static_cast<int>(w.cols());
  const int nout = static_cast<int>(w.rows());
  if (incoming.size() != nin || mult.q.dim != nout || mult.lambda.dim != nout) {
    throw Error(ErrorCode::kDimensionMismatch, label + ": multiplier sizes do not match the weight");
  }
  BlockBuilder b(label, nin + nout);
  const MatrixXd Iy = MatrixXd::Identity(nout, nout);
  add_incoming(b, 0, incoming);
  b.add_term(0, nin, mult.lambda, w, Iy, -1.0);
  b.add_term(nin, nin, mult.lambda, Iy, Iy, 2.0);
  b.add_term(nin, nin, mult.q, Iy, Iy, 1.0);
  return b.build();
}

PsdBlock final_layer_block(const std::string& label, const MatrixXd& w, const IncomingSupply& incoming) {
  const int nin = static_cast<int>(w.cols());
  const int nout = static_cast<int>(w.rows());
  if (incoming.size() != nin) {
    throw Error(ErrorCode::kDimensionMismatch, label + ": incoming supply size != weight columns");
  }
  BlockBuilder b(label, nin + nout);
  add_incoming(b, 0, incoming);
  b.add_constant(0, nin, -w.transpose());
  b.add_constant(nin, nin, MatrixXd::Identity(nout, nout));
  return b.build();
}

CertificationProblem assemble_ss_sdp(const ValidatedNetwork& net, double psd_floor) {
  CertificationProblem out;
  out.kind = ProblemKind::kStateSpace;
  out.plan = pooling_plan(net);
  SdpProblem& sdp = out.sdp;

  const VariableRef gamma = sdp.add_variable(gamma_tilde_name(), VariableKind::kScalar, 1);
  out.gamma_variable = gamma.id;
  sdp.objective.emplace_back(gamma.offset, 1.0);

  std::optional<IncomingSupply> incoming;
  const int terminal = net.terminal_layer();

  for (int i : net.conv_layers()) {
    const auto& conv = std::get<ConvLayerSpec>(net.layer(i));
    const StateSpaceRealization ss = realize_fir(conv);
    const IncomingSupply in = incoming ? *incoming : gamma_supply(gamma, conv.in_channels());

    std::optional<LayerMultipliers> mult;
    if (i != terminal) {
      const bool diag = out.plan.diagonal_q[static_cast<std::size_t>(i)];
      const VariableRef q =
          sdp.add_variable(q_name(i), diag ? VariableKind::kDiagonal : VariableKind::kSymmetric, conv.out_channels());
      const VariableRef lambda =
          sdp.add_variable(lambda_name(i), VariableKind::kDiagonal, conv.out_channels(), psd_floor);
      mult = LayerMultipliers{q, lambda};
    }
    std::optional<VariableRef> p;
    if (ss.state_dim() > 0) p = sdp.add_variable(p_name(i), VariableKind::kSymmetric, ss.state_dim(), psd_floor);
    sdp.blocks.push_back(conv_layer_block("conv_" + std::to_string(i), ss, in, mult, p));
    if (mult) incoming = layer_supply(mult->q);
  }

  const auto& dense = net.dense_layers();
  for (std::size_t k = 0; k < dense.size(); ++k) {
    const int i = dense[k];
    const auto& layer = std::get<DenseLayerSpec>(net.layer(i));
    const int nin = static_cast<int>(layer.weight.cols());
    IncomingSupply in;
    if (k == 0 && !net.has_conv_part()) {
      in = gamma_supply(gamma, nin);
    } else if (k == 0) {
      in = *incoming;
      in.copies = nin / in.var.dim;
    } else {
      in = *incoming;
    }
    if (i == terminal) {
      sdp.blocks.push_back(final_layer_block("final_" + std::to_string(i), layer.weight, in));
      break;
    }
    const int nout = static_cast<int>(layer.weight.rows());
    const VariableRef q = sdp.add_variable(q_name(i), VariableKind::kSymmetric, nout);
    const VariableRef lambda = sdp.add_variable(lambda_name(i), VariableKind::kDiagonal, nout, psd_floor);
    sdp.blocks.push_back(fc_layer_block("dense_" + std::to_string(i), layer.weight, in, {q, lambda}));
    incoming = layer_supply(q);
  }
  return out;
}

std::vector<UnrolledLayer> unroll_network(const ValidatedNetwork& net, int n0) {
  if (net.has_max_pool()) {
    throw Error(ErrorCode::kMaxPoolUnsupported, "max pooling has no linear unrolling");
  }
  const DimTrace dims = infer_dims(net, n0);
  std::vector<UnrolledLayer> layers;
  std::optional<MatrixXd> pending;
  SignalShape shape = dims.input;

  for (int i = 0; i < net.num_layers(); ++i) {
    const LayerSpec& layer = net.layer(i);
    if (const auto* conv = std::get_if<ConvLayerSpec>(&layer)) {
      MatrixXd w = toeplitz_matrix(*conv, shape.length);
      if (pending) w = w * *pending;
      pending.reset();
      layers.push_back({i, std::move(w), conv->activation != Activation::kLinear});
    } else if (const auto* pool = std::get_if<PoolLayerSpec>(&layer)) {
      MatrixXd m = average_pool_matrix(shape.channels, shape.length, pool->window);
      pending = pending ? MatrixXd(m * *pending) : m;
    } else if (const auto* d = std::get_if<DenseLayerSpec>(&layer)) {
      MatrixXd w = d->weight;
      if (pending) w = w * *pending;
      pending.reset();
      layers.push_back({i, std::move(w), d->activation != Activation::kLinear});
    }
    shape = dims.layers[static_cast<std::size_t>(i)];
  }
  if (pending) layers.back().weight = *pending * layers.back().weight;
  return layers;
}

CertificationProblem assemble_dense_oracle_sdp(const ValidatedNetwork& net, int n0, double psd_floor) {
  const std::vector<UnrolledLayer> layers = unroll_network(net, n0);
  CertificationProblem out;
  out.kind = ProblemKind::kDenseOracle;
  out.n0 = n0;
  out.plan.diagonal_q.assign(static_cast<std::size_t>(net.num_layers()), false);
  SdpProblem& sdp = out.sdp;

  const VariableRef gamma = sdp.add_variable(dense_gamma_name(), VariableKind::kScalar, 1);
  out.gamma_variable = gamma.id;
  sdp.objective.emplace_back(gamma.offset, 1.0);

  // Block i holds the signal entering unrolled layer i.
  std::vector<int> offsets;
  int size = 0;
  for (const auto& l : layers) {
    offsets.push_back(size);
    size += static_cast<int>(l.weight.cols());
  }

  BlockBuilder b("unrolled", size);
  b.add_scaled_identity(0, static_cast<int>(layers.front().weight.cols()), gamma, 1.0);
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
    const auto& l = layers[k];
    const int nout = static_cast<int>(l.weight.rows());
    const VariableRef lambda =
        sdp.add_variable(lambda_name(l.source_layer), VariableKind::kDiagonal, nout, psd_floor);
    const MatrixXd I = MatrixXd::Identity(nout, nout);
    b.add_term(offsets[k + 1], offsets[k + 1], lambda, I, I, 2.0);
    b.add_term(offsets[k], offsets[k + 1], lambda, l.weight, I, -1.0);
  }
  const MatrixXd& last = layers.back().weight;
  b.add_constant(offsets.back(), offsets.back(), -(last.transpose() * last));
  sdp.blocks.push_back(b.build());
  return out;
}

}  // namespace lipcert
