#include "eif/model/layers.hpp"

#include <cmath>
#include <string>

#include "eif/compute/memory_probe.hpp"
#include "eif/compute/ops.hpp"
#include "eif/errors.hpp"

namespace eif {
namespace {

void require_rank3(const Tensor& h, const char* op) {
  if (h.rank() != 3) {
    throw ShapeError(std::string(op) + ": expected [B, N, D], got " + shape_string(h.shape()));
  }
}

void require_matrix(const Tensor& t, std::size_t rows, std::size_t cols, const char* op,
                    const char* what) {
  if (t.shape() != Shape{rows, cols}) {
    throw ShapeError(std::string(op) + ": " + what + " has shape " + shape_string(t.shape()) +
                     ", expected " + shape_string({rows, cols}));
  }
}

Tensor attend(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t d) {
  Tensor logits = ops::scale(ops::matmul_transposed(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
  Tensor attn = ops::softmax_rows(logits);
  MemoryProbe::note_attention_map(attn.size());
  return ops::matmul(attn, v);
}

}  // namespace

Tensor linear(const Tensor& x, const LinearWeights& w) {
  return ops::add(ops::matmul(x, w.weight), w.bias);
}

Tensor embed_entities(const Tensor& x, const LinearWeights& embedding) {
  if (x.rank() != 4) {
    throw ShapeError("embed_entities: expected [B, T, N, C], got " + shape_string(x.shape()));
  }
  const std::size_t b = x.dim(0), t = x.dim(1), n = x.dim(2), c = x.dim(3);
  if (embedding.weight.rank() != 2 || embedding.weight.dim(0) != t * c) {
    throw ShapeError("embed_entities: history " + shape_string(x.shape()) +
                     " does not match embedding weight " + shape_string(embedding.weight.shape()));
  }
  Tensor per_entity = ops::reshape(ops::permute(x, {0, 2, 1, 3}), {b, n, t * c});
  return linear(per_entity, embedding);
}

Tensor latent_attention(const Tensor& h, const Tensor& w, const Tensor& k, const Tensor& v) {
  require_rank3(h, "latent_attention");
  const std::size_t d = h.dim(2);
  require_matrix(w, d, d, "latent_attention", "W");
  if (k.rank() != 2 || k.dim(1) != d) {
    throw ShapeError("latent_attention: K has shape " + shape_string(k.shape()) +
                     " but input width is D=" + std::to_string(d));
  }
  require_matrix(v, k.dim(0), d, "latent_attention", "V");
  return attend(ops::matmul(h, w), k, v, d);
}

Tensor random_projection_attention(const Tensor& h, const Tensor& w, const Tensor& k_frozen,
                                   const Tensor& v) {
  if (k_frozen.requires_grad()) {
    throw ContractError("random_projection_attention: key matrix must be frozen");
  }
  return latent_attention(h, w, k_frozen, v);
}

Tensor temporal_mlp(const Tensor& h, const TemporalMlpWeights& weights) {
  require_rank3(h, "temporal_mlp");
  const std::size_t d = h.dim(2);
  if (weights.up.weight.rank() != 2 || weights.up.weight.dim(0) != d ||
      weights.down.weight.rank() != 2 || weights.down.weight.dim(1) != d) {
    throw ShapeError("temporal_mlp: weights " + shape_string(weights.up.weight.shape()) + " / " +
                     shape_string(weights.down.weight.shape()) + " do not fit D=" +
                     std::to_string(d));
  }
  return linear(ops::gelu(linear(h, weights.up)), weights.down);
}

Tensor full_variate_attention(const Tensor& h, const Tensor& wq, const Tensor& wk,
                              const Tensor& wv) {
  require_rank3(h, "full_variate_attention");
  const std::size_t d = h.dim(2);
  require_matrix(wq, d, d, "full_variate_attention", "Wq");
  require_matrix(wk, d, d, "full_variate_attention", "Wk");
  require_matrix(wv, d, d, "full_variate_attention", "Wv");
  return attend(ops::matmul(h, wq), ops::matmul(h, wk), ops::matmul(h, wv), d);
}

Tensor feature_mlp_mix(const Tensor& h, const FeatureMixWeights& weights) {
  require_rank3(h, "feature_mlp_mix");
  const std::size_t n = h.dim(1);
  const std::size_t width = weights.weight.dim(0);
  if (n != width) {
    throw InductivenessError("featmlp mixes exactly " + std::to_string(width) +
                             " entities but the input has " + std::to_string(n));
  }
  require_matrix(weights.weight, width, width, "feature_mlp_mix", "Wmix");
  Tensor mixed = ops::matmul(weights.weight, h);
  return ops::gelu(ops::add(mixed, ops::reshape(weights.bias, {width, 1})));
}

Tensor block_forward(const Tensor& h, const Block& block) {
  auto norm = [](const Tensor& x, const LayerNormWeights& ln) {
    return ops::layer_norm(x, ln.gamma, ln.beta, kLayerNormEps);
  };
  switch (block.arch) {
    case Arch::kEiFormer: {
      const auto& rp = block.random_projection;
      const auto& la = block.latent;
      Tensor h1 = ops::add(h, random_projection_attention(norm(h, block.norm1), rp.w, rp.k, rp.v));
      Tensor h2 = ops::add(h1, latent_attention(norm(h1, block.norm2), la.w, la.k, la.v));
      return ops::add(h2, temporal_mlp(norm(h2, block.norm3), block.mlp));
    }
    case Arch::kIVariate: {
      const auto& va = block.variate;
      Tensor h2 = ops::add(h, full_variate_attention(norm(h, block.norm1), va.wq, va.wk, va.wv));
      return ops::add(h2, temporal_mlp(norm(h2, block.norm2), block.mlp));
    }
    case Arch::kFeatMlp: {
      Tensor h2 = ops::add(h, feature_mlp_mix(norm(h, block.norm1), block.mix));
      return ops::add(h2, temporal_mlp(norm(h2, block.norm2), block.mlp));
    }
    case Arch::kLinear:
      break;
  }
  throw ContractError("block_forward: the linear architecture has no blocks");
}

}  // namespace eif
