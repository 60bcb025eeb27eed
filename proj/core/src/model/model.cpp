#include "eif/model/model.hpp"

#include <cmath>

#include "eif/compute/ops.hpp"
#include "eif/compute/rng.hpp"
#include "eif/errors.hpp"

namespace eif {
namespace {

enum class Init { kXavier, kZeros, kOnes, kFrozenKey };

void fill(Tensor& t, Init init, Rng& rng, std::size_t embed_dim) {
  auto data = t.mutable_data();
  switch (init) {
    case Init::kXavier: {
      const double fan = static_cast<double>(t.dim(0) + t.dim(1));
      const double bound = std::sqrt(6.0 / fan);
      for (double& v : data) v = rng.uniform(-bound, bound);
      break;
    }
    case Init::kZeros:
      std::fill(data.begin(), data.end(), 0.0);
      break;
    case Init::kOnes:
      std::fill(data.begin(), data.end(), 1.0);
      break;
    case Init::kFrozenKey: {
      const double stddev = std::pow(static_cast<double>(embed_dim), -0.25);
      for (double& v : data) v = rng.normal(0.0, stddev);
      break;
    }
  }
}

}  // namespace

Tensor ForecastModel::add_param(const std::string& name, Shape shape, bool trainable) {
  params_.emplace_back(name, Tensor(std::move(shape)), trainable);
  return params_.back().tensor();
}

ForecastModel::ForecastModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t t = config_.history_len, f = config_.forecast_len, c = config_.channels;
  const std::size_t d = config_.embed_dim, m = config_.latent_count;
  const std::size_t hidden = config_.hidden_mult * d;

  auto make = [&](const std::string& name, Shape shape, Init init, bool trainable = true) {
    Tensor p = add_param(name, std::move(shape), trainable);
    fill(p, init, rng, d);
    return p;
  };
  auto make_linear = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    LinearWeights w;
    w.weight = make(prefix + ".weight", {in, out}, Init::kXavier);
    w.bias = make(prefix + ".bias", {out}, Init::kZeros);
    return w;
  };
  auto make_norm = [&](const std::string& prefix) {
    LayerNormWeights ln;
    ln.gamma = make(prefix + ".gamma", {d}, Init::kOnes);
    ln.beta = make(prefix + ".beta", {d}, Init::kZeros);
    return ln;
  };

  if (config_.arch == Arch::kLinear) {
    head_ = make_linear("linear", t * c, f * c);
    return;
  }

  embedding_ = make_linear("embed", t * c, d);
  for (std::size_t l = 0; l < config_.num_blocks; ++l) {
    const std::string p = "blocks." + std::to_string(l);
    Block block;
    block.arch = config_.arch;
    block.norm1 = make_norm(p + ".norm1");
    switch (config_.arch) {
      case Arch::kEiFormer:
        block.random_projection.w = make(p + ".rp.w", {d, d}, Init::kXavier);
        block.random_projection.k = make(p + ".rp.k_frozen", {m, d}, Init::kFrozenKey, false);
        block.random_projection.v = make(p + ".rp.v", {m, d}, Init::kXavier);
        block.norm2 = make_norm(p + ".norm2");
        block.latent.w = make(p + ".latent.w", {d, d}, Init::kXavier);
        block.latent.k = make(p + ".latent.k", {m, d}, Init::kXavier);
        block.latent.v = make(p + ".latent.v", {m, d}, Init::kXavier);
        block.norm3 = make_norm(p + ".norm3");
        break;
      case Arch::kIVariate:
        block.variate.wq = make(p + ".variate.wq", {d, d}, Init::kXavier);
        block.variate.wk = make(p + ".variate.wk", {d, d}, Init::kXavier);
        block.variate.wv = make(p + ".variate.wv", {d, d}, Init::kXavier);
        block.norm2 = make_norm(p + ".norm2");
        break;
      case Arch::kFeatMlp: {
        const std::size_t n = config_.featmlp_entities;
        block.mix.weight = make(p + ".mix.weight", {n, n}, Init::kXavier);
        block.mix.bias = make(p + ".mix.bias", {n}, Init::kZeros);
        block.norm2 = make_norm(p + ".norm2");
        break;
      }
      case Arch::kLinear:
        break;
    }
    block.mlp.up = make_linear(p + ".mlp.up", d, hidden);
    block.mlp.down = make_linear(p + ".mlp.down", hidden, d);
    blocks_.push_back(std::move(block));
  }
  head_ = make_linear("head", d, f * c);
}

const Parameter* ForecastModel::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name() == name) return &p;
  }
  return nullptr;
}

Parameter* ForecastModel::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name() == name) return &p;
  }
  return nullptr;
}

Tensor ForecastModel::forward(const Tensor& x, std::vector<Tensor>* captures) const {
  if (x.rank() != 4) {
    throw ShapeError("model_forward: expected [B, T, N, C], got " + shape_string(x.shape()));
  }
  const std::size_t b = x.dim(0), t = x.dim(1), n = x.dim(2), c = x.dim(3);
  if (t != config_.history_len || c != config_.channels) {
    throw ShapeError("model_forward: input " + shape_string(x.shape()) +
                     " does not match history_len=" + std::to_string(config_.history_len) +
                     ", channels=" + std::to_string(config_.channels));
  }
  if (b == 0 || n == 0) throw ShapeError("model_forward: empty batch or entity axis");
  if (config_.arch == Arch::kFeatMlp && n != config_.featmlp_entities) {
    throw InductivenessError("featmlp was built for " + std::to_string(config_.featmlp_entities) +
                             " entities but received " + std::to_string(n));
  }
  require_finite(x, "model_forward");
  const std::size_t f = config_.forecast_len;

  // Window statistics, [B, 1, N, C] each, taken along the history axis.
  Tensor loc, spread;
  Tensor input = x;
  if (config_.instance_norm) {
    const Tensor xp = ops::permute(x, {0, 2, 3, 1});  // [B, N, C, T]
    const Tensor avg(Shape{t, 1}, 1.0 / static_cast<double>(t));
    const Tensor mean = ops::matmul(xp, avg);
    const Tensor centered = ops::sub(xp, mean);
    const Tensor log_var =
        ops::log(ops::add(ops::matmul(ops::square(centered), avg), Tensor::scalar(kInstanceNormEps)));
    input = ops::permute(ops::mul(centered, ops::exp(ops::scale(log_var, -0.5))), {0, 3, 1, 2});
    loc = ops::permute(mean, {0, 3, 1, 2});
    spread = ops::permute(ops::exp(ops::scale(log_var, 0.5)), {0, 3, 1, 2});
  }

  Tensor out;
  if (config_.arch == Arch::kLinear) {
    out = embed_entities(input, head_);  // [B, N, F*C]
    if (captures) captures->push_back(out);
  } else {
    Tensor h = embed_entities(input, embedding_);
    if (captures) captures->push_back(h);
    for (const Block& block : blocks_) {
      h = block_forward(h, block);
      if (captures) captures->push_back(h);
    }
    out = linear(h, head_);
  }
  out = ops::permute(ops::reshape(out, {b, n, f, c}), {0, 2, 1, 3});
  if (config_.instance_norm) out = ops::add(ops::mul(out, spread), loc);
  return out;
}

std::vector<std::string> ForecastModel::capture_names() const {
  if (config_.arch == Arch::kLinear) return {"output"};
  std::vector<std::string> names{"embedding"};
  for (std::size_t l = 0; l < blocks_.size(); ++l) names.push_back("block" + std::to_string(l));
  return names;
}

std::vector<std::vector<double>> ForecastModel::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) {
    auto d = p.tensor().data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

void ForecastModel::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw ContractError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor().mutable_data();
    if (values[i].size() != dst.size()) throw ContractError("restore: parameter size mismatch");
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

std::size_t attention_map_elements(const ModelConfig& config, std::size_t batch,
                                   std::size_t entities) {
  switch (config.arch) {
    case Arch::kEiFormer:
      return batch * entities * config.latent_count;
    case Arch::kIVariate:
      return batch * entities * entities;
    case Arch::kLinear:
    case Arch::kFeatMlp:
      return 0;
  }
  return 0;
}

}  // namespace eif
