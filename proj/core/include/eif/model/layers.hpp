#pragma once

#include <cstddef>

#include "eif/compute/tensor.hpp"
#include "eif/model/config.hpp"

namespace eif {

struct LinearWeights {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

struct LayerNormWeights {
  Tensor gamma;
  Tensor beta;
};

// Query projection W [D, D] plus M latent keys and values, each [M, D].
struct LatentAttentionWeights {
  Tensor w;
  Tensor k;
  Tensor v;
};

struct VariateAttentionWeights {
  Tensor wq;
  Tensor wk;
  Tensor wv;
};

struct TemporalMlpWeights {
  LinearWeights up;    // D -> hidden
  LinearWeights down;  // hidden -> D
};

// Entity-axis mixing of a fixed width N: weight [N, N], bias [N].
struct FeatureMixWeights {
  Tensor weight;
  Tensor bias;
};

// One stacked block. Which members are populated depends on `arch`:
//   eiformer: norm1/random_projection, norm2/latent, norm3/mlp
//   ivariate: norm1/variate, norm2/mlp
//   featmlp:  norm1/mix, norm2/mlp
struct Block {
  Arch arch = Arch::kEiFormer;
  LayerNormWeights norm1;
  LayerNormWeights norm2;
  LayerNormWeights norm3;
  LatentAttentionWeights random_projection;  // k is frozen
  LatentAttentionWeights latent;
  VariateAttentionWeights variate;
  FeatureMixWeights mix;
  TemporalMlpWeights mlp;
};

inline constexpr double kLayerNormEps = 1e-5;

// x[..., in] -> x W + b
Tensor linear(const Tensor& x, const LinearWeights& w);

// [B, T, N, C] -> [B, N, D]: every entity's T x C history flattened and mapped
// by the same linear layer.
Tensor embed_entities(const Tensor& x, const LinearWeights& embedding);

// softmax((h W) K^T / sqrt(D)) V with an [B, N, M] attention map.
Tensor latent_attention(const Tensor& h, const Tensor& w, const Tensor& k, const Tensor& v);

// Same formula as latent_attention; `k_frozen` must not require gradients.
Tensor random_projection_attention(const Tensor& h, const Tensor& w, const Tensor& k_frozen,
                                   const Tensor& v);

// GELU(h W1 + b1) W2 + b2, applied per entity.
Tensor temporal_mlp(const Tensor& h, const TemporalMlpWeights& weights);

// softmax((h Wq)(h Wk)^T / sqrt(D)) (h Wv) with an [B, N, N] attention map.
Tensor full_variate_attention(const Tensor& h, const Tensor& wq, const Tensor& wk,
                              const Tensor& wv);

// GELU(Wmix h + b) across the entity axis. Throws InductivenessError when the
// input entity count differs from the mixing width.
Tensor feature_mlp_mix(const Tensor& h, const FeatureMixWeights& weights);

// Pre-norm residual block.
Tensor block_forward(const Tensor& h, const Block& block);

}  // namespace eif
