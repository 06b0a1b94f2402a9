#pragma once

#include <cstddef>
#include <vector>

#include "step/params.hpp"
#include "step/rng.hpp"
#include "step/subgraph.hpp"
#include "step/tensor.hpp"

namespace step {

// Width configuration of the embedding network. `time_scale` multiplies every
// time delta before it enters the time encoder; 1.0 means raw timestamps, the
// trainer can set 1/(t_max - t_min) to tame wide time ranges.
struct EncoderDims {
  std::size_t embed = 128;  // D: node and edge embedding width
  std::size_t time = 32;    // D_t: time encoding width
  std::size_t feat = 0;     // d: raw edge feature dimension
  int depth = 2;            // K: message-passing layers
  double time_scale = 1.0;
};

// Parameter indices of the embedding network inside its ParameterSet.
// Entry order is the canonical serialization order.
struct EncoderParams {
  EncoderDims dims;
  std::size_t time_w = 0;  // (D_t)
  std::size_t time_b = 0;  // (D_t)
  struct Layer {
    std::size_t msg_w = 0;   // (D, D + d + D_t)
    std::size_t msg_b = 0;   // (D)
    std::size_t comb_w = 0;  // (D, 2D)
    std::size_t comb_b = 0;  // (D)
  };
  std::vector<Layer> layers;  // K of them
  std::size_t edge_w = 0;  // (D, 2D + d + D_t)
  std::size_t edge_b = 0;  // (D)
};

// Registers all encoder tensors under "encoder.*" with Glorot-initialized
// weights and zero biases.
EncoderParams register_encoder(ParameterSet& ps, const EncoderDims& dims, Rng& rng);

// Relative time encoding: cos(w * (dt * time_scale) + b), elementwise over D_t.
Tensor rte(const ParameterSet& ps, const EncoderParams& enc, double dt);

// Accumulates d(loss)/dw and d(loss)/db for one rte application into raw
// buffers of length D_t (callers point these into a GradBuffer tensor).
void rte_backward(const ParameterSet& ps, const EncoderParams& enc, double dt,
                  const double* grad_phi, double* grad_w, double* grad_b);

// Everything the backward pass needs from a node_embed forward.
struct EncodeCache {
  std::vector<SubgraphEdgeRef> entries;  // flattened traversals, layer order
  Tensor entry_phi;                      // (n_entries, D_t)
  Tensor denom;                          // (n) per-parent mask sum + eps
  std::vector<Tensor> h;                 // K+1 tensors of (n, D); h[K] is the output
  std::vector<Tensor> msg_in;            // K of (n_entries, D + d + D_t)
  std::vector<Tensor> msg_out;           // K of (n_entries, D)
  std::vector<Tensor> agg;               // K of (n, D)
  std::vector<Tensor> comb_in;           // K of (n, 2D)
  std::vector<Tensor> comb_pre;          // K of (n, D)
};

// K layers of mean-aggregate message passing over the subgraph; h^(0) is the
// zero vector (no node features). Messages concatenate the neighbor state,
// the event features, and the time encoding of the traversal delta.
// `edge_mask` (length num_edges, weights in [0,1]) turns hard edges into soft
// ones: aggregation becomes a weighted mean with denominator sum(mask) + 1e-8.
// Passing no mask is identical to an all-ones mask, exactly: the unweighted
// path uses the same epsilon denominator. Returns (n, D).
Tensor node_embed(const ParameterSet& ps, const EncoderParams& enc,
                  const TemporalSubgraph& sub, const Tensor* edge_mask,
                  EncodeCache* cache);

// Reverse pass of node_embed. Parameter gradients accumulate into `sink`;
// `grad_mask` (length num_edges; may be null) receives d(loss)/d(mask).
void node_embed_backward(const ParameterSet& ps, const EncoderParams& enc,
                         const TemporalSubgraph& sub, const Tensor* edge_mask,
                         const EncodeCache& cache, const Tensor& grad_h_out,
                         GradBuffer& sink, Tensor* grad_mask);

// Temporal edge embedding for one event: W_e (z_i || z_j || x || phi(dt)) + b_e.
Tensor edge_embed(const ParameterSet& ps, const EncoderParams& enc, const double* z_i,
                  const double* z_j, const double* x, double dt);

struct EdgeEmbedCache {
  Tensor phi;     // (E, D_t)
  Tensor inputs;  // (E, 2D + d + D_t)
  Tensor m;       // (E, D)
};

// Edge embeddings for every sampled edge of `sub`, rows aligned with
// sub.edges. `z` is a node_embed output for the same subgraph.
Tensor edge_embed_all(const ParameterSet& ps, const EncoderParams& enc,
                      const TemporalSubgraph& sub, const Tensor& z,
                      EdgeEmbedCache* cache);

void edge_embed_all_backward(const ParameterSet& ps, const EncoderParams& enc,
                             const TemporalSubgraph& sub, const EdgeEmbedCache& cache,
                             const Tensor& grad_m, GradBuffer& sink, Tensor* grad_z);

enum class PoolMode { kCentral, kMean, kSum };

// Graph-level representation from node embeddings: the root row (central) or
// arithmetic pooling over all rows. Returns (D).
Tensor graph_repr(const Tensor& z, PoolMode mode);
void graph_repr_backward(const Tensor& z, PoolMode mode, const Tensor& grad_g,
                         Tensor* grad_z);

}  // namespace step
