#include "step/encoder.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "step/errors.hpp"
#include "step/nn.hpp"

namespace step {
namespace {

constexpr double kMeanEps = 1e-8;  // weighted-mean denominator floor

std::string layer_prefix(int k) { return "encoder.layer" + std::to_string(k); }

std::vector<SubgraphEdgeRef> flatten_layers(const TemporalSubgraph& sub) {
  std::vector<SubgraphEdgeRef> entries;
  std::size_t total = 0;
  for (const auto& layer : sub.layers) total += layer.size();
  entries.reserve(total);
  for (const auto& layer : sub.layers) {
    entries.insert(entries.end(), layer.begin(), layer.end());
  }
  return entries;
}

}  // namespace

EncoderParams register_encoder(ParameterSet& ps, const EncoderDims& dims, Rng& rng) {
  const std::size_t D = dims.embed;
  const std::size_t Dt = dims.time;
  const std::size_t d = dims.feat;

  EncoderParams enc;
  enc.dims = dims;

  Tensor tw({Dt});
  glorot_init(tw, 1, Dt, rng);
  enc.time_w = ps.add("encoder.time.w", std::move(tw));
  enc.time_b = ps.add("encoder.time.b", Tensor::zeros({Dt}));

  for (int k = 0; k < dims.depth; ++k) {
    EncoderParams::Layer layer;
    const std::size_t msg_in = D + d + Dt;
    Tensor mw({D, msg_in});
    glorot_init(mw, msg_in, D, rng);
    layer.msg_w = ps.add(layer_prefix(k) + ".msg_w", std::move(mw));
    layer.msg_b = ps.add(layer_prefix(k) + ".msg_b", Tensor::zeros({D}));
    Tensor cw({D, 2 * D});
    glorot_init(cw, 2 * D, D, rng);
    layer.comb_w = ps.add(layer_prefix(k) + ".comb_w", std::move(cw));
    layer.comb_b = ps.add(layer_prefix(k) + ".comb_b", Tensor::zeros({D}));
    enc.layers.push_back(layer);
  }

  const std::size_t edge_in = 2 * D + d + Dt;
  Tensor ew({D, edge_in});
  glorot_init(ew, edge_in, D, rng);
  enc.edge_w = ps.add("encoder.edge.w", std::move(ew));
  enc.edge_b = ps.add("encoder.edge.b", Tensor::zeros({D}));
  return enc;
}

Tensor rte(const ParameterSet& ps, const EncoderParams& enc, double dt) {
  const Tensor& w = ps.entry(enc.time_w).value;
  const Tensor& b = ps.entry(enc.time_b).value;
  const double u = dt * enc.dims.time_scale;
  Tensor phi({enc.dims.time});
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::cos(w[i] * u + b[i]);
  return phi;
}

void rte_backward(const ParameterSet& ps, const EncoderParams& enc, double dt,
                  const double* grad_phi, double* grad_w, double* grad_b) {
  const Tensor& w = ps.entry(enc.time_w).value;
  const Tensor& b = ps.entry(enc.time_b).value;
  const double u = dt * enc.dims.time_scale;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = -std::sin(w[i] * u + b[i]) * grad_phi[i];
    grad_w[i] += g * u;
    grad_b[i] += g;
  }
}

Tensor node_embed(const ParameterSet& ps, const EncoderParams& enc,
                  const TemporalSubgraph& sub, const Tensor* edge_mask,
                  EncodeCache* cache) {
  const std::size_t D = enc.dims.embed;
  const std::size_t Dt = enc.dims.time;
  const std::size_t d = enc.dims.feat;
  const int K = enc.dims.depth;
  const std::size_t n = sub.num_nodes();
  if (edge_mask != nullptr && edge_mask->size() != sub.num_edges()) {
    throw DataError("edge mask has " + std::to_string(edge_mask->size()) +
                    " weights for " + std::to_string(sub.num_edges()) + " edges");
  }

  EncodeCache local;
  EncodeCache& c = cache != nullptr ? *cache : local;
  c.entries = flatten_layers(sub);
  const std::size_t n_entries = c.entries.size();

  const Tensor& tw = ps.entry(enc.time_w).value;
  const Tensor& tb = ps.entry(enc.time_b).value;
  c.entry_phi = Tensor({n_entries, Dt});
  for (std::size_t e = 0; e < n_entries; ++e) {
    const double u = c.entries[e].dt * enc.dims.time_scale;
    double* phi = c.entry_phi.row(e);
    for (std::size_t i = 0; i < Dt; ++i) phi[i] = std::cos(tw[i] * u + tb[i]);
  }

  c.denom = Tensor::full({n}, kMeanEps);
  for (const SubgraphEdgeRef& ref : c.entries) {
    c.denom[ref.parent] += edge_mask != nullptr ? (*edge_mask)[ref.edge] : 1.0;
  }

  c.h.assign(1, Tensor::zeros({n, D}));
  c.msg_in.clear();
  c.msg_out.clear();
  c.agg.clear();
  c.comb_in.clear();
  c.comb_pre.clear();

  const std::size_t msg_width = D + d + Dt;
  for (int k = 0; k < K; ++k) {
    const Tensor& h_prev = c.h.back();

    Tensor msg_in({n_entries, msg_width});
    for (std::size_t e = 0; e < n_entries; ++e) {
      const SubgraphEdgeRef& ref = c.entries[e];
      double* row = msg_in.row(e);
      std::memcpy(row, h_prev.row(ref.neighbor), D * sizeof(double));
      const SampledEdge& edge = sub.edges[ref.edge];
      if (d > 0) std::memcpy(row + D, edge.features.data(), d * sizeof(double));
      std::memcpy(row + D + d, c.entry_phi.row(e), Dt * sizeof(double));
    }
    Tensor msg_out = affine(msg_in, ps.entry(enc.layers[k].msg_w).value,
                            &ps.entry(enc.layers[k].msg_b).value);

    Tensor agg = Tensor::zeros({n, D});
    for (std::size_t e = 0; e < n_entries; ++e) {
      const SubgraphEdgeRef& ref = c.entries[e];
      const double w = edge_mask != nullptr ? (*edge_mask)[ref.edge] : 1.0;
      double* out = agg.row(ref.parent);
      const double* msg = msg_out.row(e);
      for (std::size_t i = 0; i < D; ++i) out[i] += w * msg[i];
    }
    for (std::size_t v = 0; v < n; ++v) {
      double* out = agg.row(v);
      const double inv = 1.0 / c.denom[v];
      for (std::size_t i = 0; i < D; ++i) out[i] *= inv;
    }

    Tensor comb_in({n, 2 * D});
    for (std::size_t v = 0; v < n; ++v) {
      std::memcpy(comb_in.row(v), h_prev.row(v), D * sizeof(double));
      std::memcpy(comb_in.row(v) + D, agg.row(v), D * sizeof(double));
    }
    Tensor comb_pre = affine(comb_in, ps.entry(enc.layers[k].comb_w).value,
                             &ps.entry(enc.layers[k].comb_b).value);
    // ReLU between layers; the final layer stays linear so embeddings can
    // use the full space.
    Tensor h_next = k + 1 < K ? elementwise(Elementwise::kRelu, comb_pre) : comb_pre;

    c.msg_in.push_back(std::move(msg_in));
    c.msg_out.push_back(std::move(msg_out));
    c.agg.push_back(std::move(agg));
    c.comb_in.push_back(std::move(comb_in));
    c.comb_pre.push_back(std::move(comb_pre));
    c.h.push_back(std::move(h_next));
  }
  return c.h.back();
}

void node_embed_backward(const ParameterSet& ps, const EncoderParams& enc,
                         const TemporalSubgraph& sub, const Tensor* edge_mask,
                         const EncodeCache& cache, const Tensor& grad_h_out,
                         GradBuffer& sink, Tensor* grad_mask) {
  const std::size_t D = enc.dims.embed;
  const std::size_t Dt = enc.dims.time;
  const std::size_t d = enc.dims.feat;
  const int K = enc.dims.depth;
  const std::size_t n = sub.num_nodes();
  const std::size_t n_entries = cache.entries.size();

  Tensor gh = grad_h_out;
  Tensor g_phi = Tensor::zeros({n_entries, Dt});

  for (int k = K - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    Tensor gpre;
    if (k + 1 < K) {
      gpre = Tensor::zeros({n, D});
      elementwise_backward(Elementwise::kRelu, cache.comb_pre[ku], cache.h[ku + 1], gh,
                           &gpre);
    } else {
      gpre = gh;
    }

    Tensor g_comb_in = Tensor::zeros({n, 2 * D});
    affine_backward(cache.comb_in[ku], ps.entry(enc.layers[ku].comb_w).value, gpre,
                    &g_comb_in, &sink.grad(enc.layers[ku].comb_w),
                    &sink.grad(enc.layers[ku].comb_b));

    Tensor gh_prev = Tensor::zeros({n, D});
    Tensor g_agg({n, D});
    for (std::size_t v = 0; v < n; ++v) {
      std::memcpy(gh_prev.row(v), g_comb_in.row(v), D * sizeof(double));
      std::memcpy(g_agg.row(v), g_comb_in.row(v) + D, D * sizeof(double));
    }

    // Weighted-mean backward: d(agg_p)/d(msg_e) = w_e / denom_p and
    // d(agg_p)/d(w_e) = (msg_e - agg_p) / denom_p.
    Tensor g_msg = Tensor::zeros({n_entries, D});
    for (std::size_t e = 0; e < n_entries; ++e) {
      const SubgraphEdgeRef& ref = cache.entries[e];
      const double w = edge_mask != nullptr ? (*edge_mask)[ref.edge] : 1.0;
      const double inv = 1.0 / cache.denom[ref.parent];
      const double* ga = g_agg.row(ref.parent);
      double* gm = g_msg.row(e);
      for (std::size_t i = 0; i < D; ++i) gm[i] = ga[i] * w * inv;
      if (grad_mask != nullptr) {
        const double* msg = cache.msg_out[ku].row(e);
        const double* agg = cache.agg[ku].row(ref.parent);
        double acc = 0.0;
        for (std::size_t i = 0; i < D; ++i) acc += ga[i] * (msg[i] - agg[i]);
        (*grad_mask)[ref.edge] += acc * inv;
      }
    }

    Tensor g_msg_in = Tensor::zeros({n_entries, D + d + Dt});
    affine_backward(cache.msg_in[ku], ps.entry(enc.layers[ku].msg_w).value, g_msg,
                    &g_msg_in, &sink.grad(enc.layers[ku].msg_w),
                    &sink.grad(enc.layers[ku].msg_b));

    for (std::size_t e = 0; e < n_entries; ++e) {
      const SubgraphEdgeRef& ref = cache.entries[e];
      const double* gin = g_msg_in.row(e);
      double* ghn = gh_prev.row(ref.neighbor);
      for (std::size_t i = 0; i < D; ++i) ghn[i] += gin[i];
      double* gp = g_phi.row(e);
      for (std::size_t i = 0; i < Dt; ++i) gp[i] += gin[D + d + i];
    }
    gh = std::move(gh_prev);
  }

  double* gtw = sink.grad(enc.time_w).data();
  double* gtb = sink.grad(enc.time_b).data();
  for (std::size_t e = 0; e < n_entries; ++e) {
    rte_backward(ps, enc, cache.entries[e].dt, g_phi.row(e), gtw, gtb);
  }
}

namespace {

void fill_edge_input(const EncoderParams& enc, const double* z_i, const double* z_j,
                     const double* x, const double* phi, double* row) {
  const std::size_t D = enc.dims.embed;
  const std::size_t d = enc.dims.feat;
  const std::size_t Dt = enc.dims.time;
  std::memcpy(row, z_i, D * sizeof(double));
  std::memcpy(row + D, z_j, D * sizeof(double));
  if (d > 0) std::memcpy(row + 2 * D, x, d * sizeof(double));
  std::memcpy(row + 2 * D + d, phi, Dt * sizeof(double));
}

}  // namespace

Tensor edge_embed(const ParameterSet& ps, const EncoderParams& enc, const double* z_i,
                  const double* z_j, const double* x, double dt) {
  const std::size_t width = 2 * enc.dims.embed + enc.dims.feat + enc.dims.time;
  Tensor phi = rte(ps, enc, dt);
  Tensor input({1, width});
  fill_edge_input(enc, z_i, z_j, x, phi.data(), input.row(0));
  Tensor m = affine(input, ps.entry(enc.edge_w).value, &ps.entry(enc.edge_b).value);
  return Tensor({enc.dims.embed}, std::vector<double>(m.data(), m.data() + m.size()));
}

Tensor edge_embed_all(const ParameterSet& ps, const EncoderParams& enc,
                      const TemporalSubgraph& sub, const Tensor& z,
                      EdgeEmbedCache* cache) {
  const std::size_t D = enc.dims.embed;
  const std::size_t Dt = enc.dims.time;
  const std::size_t d = enc.dims.feat;
  const std::size_t E = sub.num_edges();
  if (z.rank() != 2 || z.dim(0) != sub.num_nodes() || z.dim(1) != D) {
    throw DataError("edge_embed_all: embeddings shaped " + z.shape_str() +
                    " do not match the subgraph");
  }

  EdgeEmbedCache local;
  EdgeEmbedCache& c = cache != nullptr ? *cache : local;
  c.phi = Tensor({E, Dt});
  c.inputs = Tensor({E, 2 * D + d + Dt});
  const Tensor& tw = ps.entry(enc.time_w).value;
  const Tensor& tb = ps.entry(enc.time_b).value;
  for (std::size_t e = 0; e < E; ++e) {
    const SampledEdge& edge = sub.edges[e];
    double* phi = c.phi.row(e);
    const double u = edge.dt * enc.dims.time_scale;
    for (std::size_t i = 0; i < Dt; ++i) phi[i] = std::cos(tw[i] * u + tb[i]);
    fill_edge_input(enc, z.row(edge.src), z.row(edge.dst), edge.features.data(), phi,
                    c.inputs.row(e));
  }
  c.m = affine(c.inputs, ps.entry(enc.edge_w).value, &ps.entry(enc.edge_b).value);
  return c.m;
}

void edge_embed_all_backward(const ParameterSet& ps, const EncoderParams& enc,
                             const TemporalSubgraph& sub, const EdgeEmbedCache& cache,
                             const Tensor& grad_m, GradBuffer& sink, Tensor* grad_z) {
  const std::size_t D = enc.dims.embed;
  const std::size_t Dt = enc.dims.time;
  const std::size_t d = enc.dims.feat;
  const std::size_t E = sub.num_edges();

  Tensor g_inputs = Tensor::zeros({E, 2 * D + d + Dt});
  affine_backward(cache.inputs, ps.entry(enc.edge_w).value, grad_m, &g_inputs,
                  &sink.grad(enc.edge_w), &sink.grad(enc.edge_b));

  double* gtw = sink.grad(enc.time_w).data();
  double* gtb = sink.grad(enc.time_b).data();
  for (std::size_t e = 0; e < E; ++e) {
    const SampledEdge& edge = sub.edges[e];
    const double* gin = g_inputs.row(e);
    if (grad_z != nullptr) {
      double* gzi = grad_z->row(edge.src);
      double* gzj = grad_z->row(edge.dst);
      for (std::size_t i = 0; i < D; ++i) gzi[i] += gin[i];
      for (std::size_t i = 0; i < D; ++i) gzj[i] += gin[D + i];
    }
    rte_backward(ps, enc, edge.dt, gin + 2 * D + d, gtw, gtb);
  }
}

Tensor graph_repr(const Tensor& z, PoolMode mode) {
  const std::size_t n = z.dim(0);
  const std::size_t D = z.dim(1);
  if (n == 0) throw DataError("graph_repr: no node embeddings");
  Tensor g = Tensor::zeros({D});
  if (mode == PoolMode::kCentral) {
    std::memcpy(g.data(), z.row(0), D * sizeof(double));
    return g;
  }
  for (std::size_t v = 0; v < n; ++v) {
    const double* row = z.row(v);
    for (std::size_t i = 0; i < D; ++i) g[i] += row[i];
  }
  if (mode == PoolMode::kMean) g.scale(1.0 / static_cast<double>(n));
  return g;
}

void graph_repr_backward(const Tensor& z, PoolMode mode, const Tensor& grad_g,
                         Tensor* grad_z) {
  const std::size_t n = z.dim(0);
  const std::size_t D = z.dim(1);
  if (mode == PoolMode::kCentral) {
    double* g0 = grad_z->row(0);
    for (std::size_t i = 0; i < D; ++i) g0[i] += grad_g[i];
    return;
  }
  const double scale = mode == PoolMode::kMean ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::size_t v = 0; v < n; ++v) {
    double* row = grad_z->row(v);
    for (std::size_t i = 0; i < D; ++i) row[i] += scale * grad_g[i];
  }
}

}  // namespace step
