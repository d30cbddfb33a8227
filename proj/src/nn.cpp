#include "segtr/nn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "segtr/errors.hpp"

namespace segtr {

std::string arch_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::CnnRand:
      return "cnn-rand";
    case ArchKind::CnnRandSimplified:
      return "cnn-rand-simplified";
    case ArchKind::Lstm:
      return "lstm";
    case ArchKind::MeanPool:
      return "mean-pool";
  }
  return "?";
}

std::optional<ArchKind> parse_arch(std::string_view name) {
  for (ArchKind k : {ArchKind::CnnRand, ArchKind::CnnRandSimplified,
                     ArchKind::Lstm, ArchKind::MeanPool}) {
    if (arch_name(k) == name) return k;
  }
  return std::nullopt;
}

ArchitectureDescriptor ArchitectureDescriptor::defaults(ArchKind kind) {
  ArchitectureDescriptor a;
  a.kind = kind;
  switch (kind) {
    case ArchKind::CnnRand:
      a.embedding_dim = 50;
      a.filter_sizes = {3, 4, 5};
      a.filters_per_size = 100;
      a.dropout_embed = 0.5;
      a.dropout_penultimate = 0.0;
      a.dense_dim = 50;
      break;
    case ArchKind::CnnRandSimplified:
      a.embedding_dim = 20;
      a.filter_sizes = {3, 8};
      a.filters_per_size = 10;
      a.dropout_embed = 0.5;
      a.dropout_penultimate = 0.8;
      a.dense_dim = 50;
      break;
    case ArchKind::Lstm:
      a.embedding_dim = 32;
      a.dropout_embed = 0.2;
      a.dropout_penultimate = 0.2;
      a.lstm_units = 100;
      break;
    case ArchKind::MeanPool:
      a.embedding_dim = 20;
      break;
  }
  return a;
}

int ArchitectureDescriptor::max_filter_size() const {
  int m = 0;
  for (int f : filter_sizes) m = std::max(m, f);
  return m;
}

namespace {

bool is_cnn(ArchKind kind) {
  return kind == ArchKind::CnnRand || kind == ArchKind::CnnRandSimplified;
}

void check_cnn_length(const ArchitectureDescriptor& arch, std::size_t L) {
  if (is_cnn(arch.kind) &&
      L < static_cast<std::size_t>(arch.max_filter_size())) {
    throw InputError("input length " + std::to_string(L) +
                     " is shorter than the largest filter size " +
                     std::to_string(arch.max_filter_size()));
  }
}

std::size_t cnn_concat_dim(const ArchitectureDescriptor& arch, std::size_t L) {
  std::size_t total = 0;
  for (int f : arch.filter_sizes) {
    total += ((L - f + 1) / 2) * arch.filters_per_size;
  }
  return total;
}

}  // namespace

std::vector<LayerShape> infer_shapes(const ArchitectureDescriptor& arch,
                                     std::size_t max_length,
                                     std::size_t vocab_size) {
  (void)vocab_size;  // shapes depend on it only through the embedding table
  const std::size_t L = max_length;
  const std::size_t E = static_cast<std::size_t>(arch.embedding_dim);
  std::vector<LayerShape> shapes;
  shapes.push_back({"input", {L}});
  shapes.push_back({"embedding", {L, E}});
  switch (arch.kind) {
    case ArchKind::MeanPool:
      shapes.push_back({"mean", {E}});
      shapes.push_back({"output", {1}});
      break;
    case ArchKind::Lstm:
      shapes.push_back(
          {"lstm", {static_cast<std::size_t>(arch.lstm_units)}});
      shapes.push_back({"output", {1}});
      break;
    case ArchKind::CnnRand:
    case ArchKind::CnnRandSimplified: {
      check_cnn_length(arch, L);
      const std::size_t F = static_cast<std::size_t>(arch.filters_per_size);
      std::size_t concat = 0;
      for (int f : arch.filter_sizes) {
        const std::size_t nconv = L - f + 1;
        const std::size_t npool = nconv / 2;
        const std::string tag = "_f" + std::to_string(f);
        shapes.push_back({"conv" + tag, {nconv, F}});
        shapes.push_back({"maxpool" + tag, {npool, F}});
        shapes.push_back({"flatten" + tag, {npool * F}});
        concat += npool * F;
      }
      shapes.push_back({"concat", {concat}});
      shapes.push_back({"dense", {static_cast<std::size_t>(arch.dense_dim)}});
      shapes.push_back({"output", {1}});
      break;
    }
  }
  return shapes;
}

std::int64_t count_parameters(const ArchitectureDescriptor& arch,
                              std::size_t max_length, std::size_t vocab_size) {
  const std::int64_t E = arch.embedding_dim;
  const std::int64_t v = static_cast<std::int64_t>(vocab_size);
  std::int64_t total = v * E;
  switch (arch.kind) {
    case ArchKind::MeanPool:
      total += (E + 1) * 1;
      break;
    case ArchKind::Lstm: {
      const std::int64_t u = arch.lstm_units;
      total += 4 * u * (E + u + 1);
      total += (u + 1) * 1;
      break;
    }
    case ArchKind::CnnRand:
    case ArchKind::CnnRandSimplified: {
      check_cnn_length(arch, max_length);
      const std::int64_t F = arch.filters_per_size;
      for (int f : arch.filter_sizes) total += f * E * F + F;
      const std::int64_t concat =
          static_cast<std::int64_t>(cnn_concat_dim(arch, max_length));
      total += (concat + 1) * arch.dense_dim;
      total += (arch.dense_dim + 1) * 1;
      break;
    }
  }
  return total;
}

const Tensor& Model::param(std::string_view name) const {
  for (const auto& t : params) {
    if (t.name == name) return t;
  }
  throw StateError("model has no tensor named " + std::string(name));
}

Tensor& Model::param(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).param(name));
}

namespace {

void fill_uniform(Tensor& t, double lo, double hi, Rng& rng) {
  for (auto& x : t.v) x = rng.next_uniform(lo, hi);
}

void fill_fan_in(Tensor& t, Rng& rng) {
  const double bound =
      t.rows > 0 ? 1.0 / std::sqrt(static_cast<double>(t.rows)) : 0.0;
  fill_uniform(t, -bound, bound, rng);
}

}  // namespace

Model init_model(const ArchitectureDescriptor& arch, std::size_t vocab_size,
                 std::size_t max_length, std::uint64_t seed) {
  if (arch.kind == ArchKind::Lstm) {
    throw ConfigError(
        "lstm is a shape/memory descriptor only; training it is out of scope");
  }
  check_cnn_length(arch, max_length);

  Model model;
  model.arch = arch;
  model.vocab_size = vocab_size;
  model.max_length = max_length;
  Rng rng(seed);

  const std::size_t E = static_cast<std::size_t>(arch.embedding_dim);
  Tensor emb("embedding", vocab_size, E);
  fill_uniform(emb, -0.05, 0.05, rng);
  if (vocab_size > 0) {
    for (std::size_t e = 0; e < E; ++e) emb.at(Vocabulary::kPadId, e) = 0.0;
  }
  model.params.push_back(std::move(emb));

  if (arch.kind == ArchKind::MeanPool) {
    Tensor w("dense_w", E, 1);
    fill_fan_in(w, rng);
    model.params.push_back(std::move(w));
    model.params.emplace_back("dense_b", 1, 1);
    return model;
  }

  const std::size_t F = static_cast<std::size_t>(arch.filters_per_size);
  for (int f : arch.filter_sizes) {
    Tensor w("conv_f" + std::to_string(f) + "_w",
             static_cast<std::size_t>(f) * E, F);
    fill_fan_in(w, rng);
    model.params.push_back(std::move(w));
    model.params.emplace_back("conv_f" + std::to_string(f) + "_b", 1, F);
  }
  const std::size_t concat = cnn_concat_dim(arch, max_length);
  Tensor w1("dense1_w", concat, static_cast<std::size_t>(arch.dense_dim));
  fill_fan_in(w1, rng);
  model.params.push_back(std::move(w1));
  model.params.emplace_back("dense1_b", 1,
                            static_cast<std::size_t>(arch.dense_dim));
  Tensor w2("dense2_w", static_cast<std::size_t>(arch.dense_dim), 1);
  fill_fan_in(w2, rng);
  model.params.push_back(std::move(w2));
  model.params.emplace_back("dense2_b", 1, 1);
  return model;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable binary cross-entropy straight from the logit.
double bce_from_logit(double z, int y) {
  return std::max(z, 0.0) - z * static_cast<double>(y) +
         std::log1p(std::exp(-std::fabs(z)));
}

// Inverted dropout scales kept units by 1/(1-rate); empty mask means "keep
// everything". Eval mode never reaches this.
std::vector<double> draw_mask(std::size_t n, double rate, Rng* rng) {
  if (rate <= 0.0) return {};
  if (rng == nullptr) {
    throw StateError("train-mode dropout requires an RNG");
  }
  const double keep = 1.0 - rate;
  std::vector<double> mask(n);
  for (auto& m : mask) {
    m = rng->next_double() < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

struct CnnCache {
  std::vector<double> xd;                    // L*E embeddings after dropout
  std::vector<std::vector<double>> act;      // per filter size, nconv*F
  std::vector<std::vector<std::size_t>> arg; // per filter size, npool*F
  std::vector<double> h;                     // concat after dropout
  std::vector<double> dense1;                // sigmoid activations
  std::vector<double> mask_x;
  std::vector<double> mask_h;
};

struct MeanCache {
  std::vector<double> mean;  // E
  std::vector<double> mask_x;
};

void check_example(const Model& model, const EncodedSequence& ex) {
  if (ex.ids.size() != model.max_length) {
    throw InputError("sequence length " + std::to_string(ex.ids.size()) +
                     " does not match the model input length " +
                     std::to_string(model.max_length));
  }
  for (int id : ex.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.vocab_size) {
      throw InputError("token id " + std::to_string(id) +
                       " outside the embedding table of size " +
                       std::to_string(model.vocab_size));
    }
  }
}

double mean_pool_logit(const Model& model, const EncodedSequence& ex,
                       RunMode mode, Rng* rng, MeanCache* cache) {
  const auto& arch = model.arch;
  const std::size_t E = static_cast<std::size_t>(arch.embedding_dim);
  const Tensor& emb = model.params[0];
  const Tensor& w = model.params[1];
  const Tensor& b = model.params[2];

  std::vector<double> mask_x;
  if (mode == RunMode::Train) {
    mask_x = draw_mask(model.max_length * E, arch.dropout_embed, rng);
  }
  std::vector<double> mean(E, 0.0);
  const std::size_t tl = ex.true_length;
  if (tl > 0) {
    for (std::size_t t = 0; t < tl; ++t) {
      const auto row = static_cast<std::size_t>(ex.ids[t]);
      for (std::size_t e = 0; e < E; ++e) {
        double x = emb.at(row, e);
        if (!mask_x.empty()) x *= mask_x[t * E + e];
        mean[e] += x;
      }
    }
    for (auto& m : mean) m /= static_cast<double>(tl);
  }
  double z = b.v[0];
  for (std::size_t e = 0; e < E; ++e) z += mean[e] * w.v[e];
  if (cache != nullptr) {
    cache->mean = std::move(mean);
    cache->mask_x = std::move(mask_x);
  }
  return z;
}

void mean_pool_backward(const Model& model, const EncodedSequence& ex,
                        const MeanCache& cache, double dz, Gradients& grads) {
  const std::size_t E = static_cast<std::size_t>(model.arch.embedding_dim);
  const Tensor& w = model.params[1];
  Tensor& demb = grads.tensors[0];
  Tensor& dw = grads.tensors[1];
  Tensor& db = grads.tensors[2];

  db.v[0] += dz;
  for (std::size_t e = 0; e < E; ++e) dw.v[e] += dz * cache.mean[e];
  const std::size_t tl = ex.true_length;
  if (tl == 0) return;
  const double inv = 1.0 / static_cast<double>(tl);
  for (std::size_t t = 0; t < tl; ++t) {
    const auto row = static_cast<std::size_t>(ex.ids[t]);
    for (std::size_t e = 0; e < E; ++e) {
      double g = dz * w.v[e] * inv;
      if (!cache.mask_x.empty()) g *= cache.mask_x[t * E + e];
      demb.at(row, e) += g;
    }
  }
}

struct CnnIndex {
  std::size_t emb = 0;
  std::vector<std::size_t> conv_w;
  std::vector<std::size_t> conv_b;
  std::size_t d1w = 0, d1b = 0, d2w = 0, d2b = 0;
};

CnnIndex cnn_index(const Model& model) {
  CnnIndex idx;
  std::size_t at = 1;
  for (std::size_t i = 0; i < model.arch.filter_sizes.size(); ++i) {
    idx.conv_w.push_back(at++);
    idx.conv_b.push_back(at++);
  }
  idx.d1w = at++;
  idx.d1b = at++;
  idx.d2w = at++;
  idx.d2b = at++;
  return idx;
}

double cnn_logit(const Model& model, const CnnIndex& idx,
                 const EncodedSequence& ex, RunMode mode, Rng* rng,
                 CnnCache* cache) {
  const auto& arch = model.arch;
  const std::size_t L = model.max_length;
  const std::size_t E = static_cast<std::size_t>(arch.embedding_dim);
  const std::size_t F = static_cast<std::size_t>(arch.filters_per_size);
  const Tensor& emb = model.params[idx.emb];

  std::vector<double> mask_x;
  std::vector<double> mask_h;
  if (mode == RunMode::Train) {
    mask_x = draw_mask(L * E, arch.dropout_embed, rng);
  }

  std::vector<double> xd(L * E);
  for (std::size_t t = 0; t < L; ++t) {
    const auto row = static_cast<std::size_t>(ex.ids[t]);
    for (std::size_t e = 0; e < E; ++e) {
      double x = emb.at(row, e);
      if (!mask_x.empty()) x *= mask_x[t * E + e];
      xd[t * E + e] = x;
    }
  }

  const std::size_t concat = cnn_concat_dim(arch, L);
  std::vector<double> h(concat, 0.0);
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<std::size_t>> args;
  std::size_t offset = 0;
  for (std::size_t fi = 0; fi < arch.filter_sizes.size(); ++fi) {
    const std::size_t f = static_cast<std::size_t>(arch.filter_sizes[fi]);
    const Tensor& cw = model.params[idx.conv_w[fi]];
    const Tensor& cb = model.params[idx.conv_b[fi]];
    const std::size_t nconv = L - f + 1;
    const std::size_t npool = nconv / 2;
    std::vector<double> act(nconv * F, 0.0);
    for (std::size_t i = 0; i < nconv; ++i) {
      // Windows that would read PAD positions are masked to zero so padding
      // never contributes to the pooled features.
      if (i + f > ex.true_length) continue;
      for (std::size_t k = 0; k < F; ++k) {
        double pre = cb.v[k];
        for (std::size_t j = 0; j < f; ++j) {
          const double* xrow = &xd[(i + j) * E];
          const double* wrow = &cw.v[(j * E) * F + k];
          for (std::size_t e = 0; e < E; ++e) {
            pre += xrow[e] * wrow[e * F];
          }
        }
        act[i * F + k] = pre > 0.0 ? pre : 0.0;
      }
    }
    std::vector<std::size_t> arg(npool * F, 0);
    for (std::size_t p = 0; p < npool; ++p) {
      for (std::size_t k = 0; k < F; ++k) {
        const std::size_t a0 = (2 * p) * F + k;
        const std::size_t a1 = (2 * p + 1) * F + k;
        const std::size_t best = act[a1] > act[a0] ? a1 : a0;
        arg[p * F + k] = best;
        h[offset + p * F + k] = act[best];
      }
    }
    acts.push_back(std::move(act));
    args.push_back(std::move(arg));
    offset += npool * F;
  }

  if (mode == RunMode::Train) {
    mask_h = draw_mask(concat, arch.dropout_penultimate, rng);
    if (!mask_h.empty()) {
      for (std::size_t c = 0; c < concat; ++c) h[c] *= mask_h[c];
    }
  }

  const Tensor& w1 = model.params[idx.d1w];
  const Tensor& b1 = model.params[idx.d1b];
  const Tensor& w2 = model.params[idx.d2w];
  const Tensor& b2 = model.params[idx.d2b];
  const std::size_t D = static_cast<std::size_t>(arch.dense_dim);
  std::vector<double> dense1(D);
  for (std::size_t u = 0; u < D; ++u) {
    double a = b1.v[u];
    for (std::size_t c = 0; c < concat; ++c) a += h[c] * w1.at(c, u);
    dense1[u] = sigmoid(a);
  }
  double z = b2.v[0];
  for (std::size_t u = 0; u < D; ++u) z += dense1[u] * w2.v[u];

  if (cache != nullptr) {
    cache->xd = std::move(xd);
    cache->act = std::move(acts);
    cache->arg = std::move(args);
    cache->h = std::move(h);
    cache->dense1 = std::move(dense1);
    cache->mask_x = std::move(mask_x);
    cache->mask_h = std::move(mask_h);
  }
  return z;
}

void cnn_backward(const Model& model, const CnnIndex& idx,
                  const EncodedSequence& ex, const CnnCache& cache, double dz,
                  Gradients& grads) {
  const auto& arch = model.arch;
  const std::size_t L = model.max_length;
  const std::size_t E = static_cast<std::size_t>(arch.embedding_dim);
  const std::size_t F = static_cast<std::size_t>(arch.filters_per_size);
  const std::size_t D = static_cast<std::size_t>(arch.dense_dim);
  const std::size_t concat = cache.h.size();

  const Tensor& w1 = model.params[idx.d1w];
  const Tensor& w2 = model.params[idx.d2w];
  Tensor& dw1 = grads.tensors[idx.d1w];
  Tensor& db1 = grads.tensors[idx.d1b];
  Tensor& dw2 = grads.tensors[idx.d2w];
  Tensor& db2 = grads.tensors[idx.d2b];

  db2.v[0] += dz;
  std::vector<double> dpre1(D);
  for (std::size_t u = 0; u < D; ++u) {
    dw2.v[u] += dz * cache.dense1[u];
    const double dd1 = dz * w2.v[u];
    dpre1[u] = dd1 * cache.dense1[u] * (1.0 - cache.dense1[u]);
    db1.v[u] += dpre1[u];
  }
  std::vector<double> dh(concat, 0.0);
  for (std::size_t c = 0; c < concat; ++c) {
    double acc = 0.0;
    for (std::size_t u = 0; u < D; ++u) {
      dw1.at(c, u) += dpre1[u] * cache.h[c];
      acc += w1.at(c, u) * dpre1[u];
    }
    dh[c] = acc;
    if (!cache.mask_h.empty()) dh[c] *= cache.mask_h[c];
  }

  std::vector<double> dxd(L * E, 0.0);
  std::size_t offset = 0;
  for (std::size_t fi = 0; fi < arch.filter_sizes.size(); ++fi) {
    const std::size_t f = static_cast<std::size_t>(arch.filter_sizes[fi]);
    const Tensor& cw = model.params[idx.conv_w[fi]];
    Tensor& dcw = grads.tensors[idx.conv_w[fi]];
    Tensor& dcb = grads.tensors[idx.conv_b[fi]];
    const std::size_t nconv = L - f + 1;
    const std::size_t npool = nconv / 2;
    const auto& act = cache.act[fi];
    const auto& arg = cache.arg[fi];
    for (std::size_t p = 0; p < npool; ++p) {
      for (std::size_t k = 0; k < F; ++k) {
        const double g = dh[offset + p * F + k];
        if (g == 0.0) continue;
        const std::size_t best = arg[p * F + k];
        // ReLU gate; masked windows sit at exactly zero and stay dark.
        if (act[best] <= 0.0) continue;
        const std::size_t i = best / F;
        const std::size_t k2 = best % F;
        dcb.v[k2] += g;
        for (std::size_t j = 0; j < f; ++j) {
          const double* xrow = &cache.xd[(i + j) * E];
          for (std::size_t e = 0; e < E; ++e) {
            dcw.at(j * E + e, k2) += g * xrow[e];
            dxd[(i + j) * E + e] += g * cw.at(j * E + e, k2);
          }
        }
      }
    }
    offset += npool * F;
  }

  Tensor& demb = grads.tensors[idx.emb];
  for (std::size_t t = 0; t < L; ++t) {
    const auto row = static_cast<std::size_t>(ex.ids[t]);
    for (std::size_t e = 0; e < E; ++e) {
      double g = dxd[t * E + e];
      if (g == 0.0) continue;
      if (!cache.mask_x.empty()) g *= cache.mask_x[t * E + e];
      demb.at(row, e) += g;
    }
  }
}

Gradients make_gradients(const Model& model) {
  Gradients g;
  g.tensors.reserve(model.params.size());
  for (const auto& p : model.params) {
    g.tensors.emplace_back(p.name, p.rows, p.cols);
  }
  return g;
}

double model_logit(const Model& model, const EncodedSequence& ex, RunMode mode,
                   Rng* rng, MeanCache* mcache, CnnCache* ccache,
                   const CnnIndex* idx) {
  check_example(model, ex);
  if (model.arch.kind == ArchKind::MeanPool) {
    return mean_pool_logit(model, ex, mode, rng, mcache);
  }
  if (is_cnn(model.arch.kind)) {
    return cnn_logit(model, *idx, ex, mode, rng, ccache);
  }
  throw ConfigError("architecture " + arch_name(model.arch.kind) +
                    " has no forward pass");
}

}  // namespace

std::vector<double> forward(const Model& model,
                            std::span<const EncodedSequence> batch,
                            RunMode mode, Rng* rng) {
  const CnnIndex idx = is_cnn(model.arch.kind) ? cnn_index(model) : CnnIndex{};
  std::vector<double> probs;
  probs.reserve(batch.size());
  for (const auto& ex : batch) {
    const double z =
        model_logit(model, ex, mode, rng, nullptr, nullptr, &idx);
    probs.push_back(sigmoid(z));
  }
  return probs;
}

double loss_and_gradients(const Model& model,
                          std::span<const EncodedSequence> batch,
                          std::span<const int> labels, double l2,
                          Gradients& grads, RunMode mode, Rng* rng) {
  if (batch.empty()) throw InputError("loss_and_gradients: empty batch");
  if (batch.size() != labels.size()) {
    throw InputError("batch and label sizes differ");
  }
  if (grads.tensors.size() != model.params.size()) grads = make_gradients(model);
  for (auto& t : grads.tensors) std::fill(t.v.begin(), t.v.end(), 0.0);

  const CnnIndex idx = is_cnn(model.arch.kind) ? cnn_index(model) : CnnIndex{};
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    MeanCache mcache;
    CnnCache ccache;
    const double z =
        model_logit(model, batch[i], mode, rng, &mcache, &ccache, &idx);
    loss += bce_from_logit(z, labels[i]) * inv_b;
    const double dz = (sigmoid(z) - static_cast<double>(labels[i])) * inv_b;
    if (model.arch.kind == ArchKind::MeanPool) {
      mean_pool_backward(model, batch[i], mcache, dz, grads);
    } else {
      cnn_backward(model, idx, batch[i], ccache, dz, grads);
    }
  }

  if (l2 > 0.0) {
    for (std::size_t pi = 0; pi < model.params.size(); ++pi) {
      const Tensor& p = model.params[pi];
      if (p.name.rfind("dense", 0) != 0 || p.name.back() != 'w') continue;
      double sq = 0.0;
      for (std::size_t k = 0; k < p.v.size(); ++k) {
        sq += p.v[k] * p.v[k];
        grads.tensors[pi].v[k] += 2.0 * l2 * p.v[k];
      }
      loss += l2 * sq;
    }
  }
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss over a batch of " +
                       std::to_string(batch.size()));
  }
  return loss;
}

TrainConfig TrainConfig::defaults(ArchKind kind) {
  TrainConfig cfg;
  if (is_cnn(kind)) {
    cfg.max_epochs = 200;
    cfg.patience = 20;
    cfg.learning_rate = 0.05;
  } else {
    cfg.max_epochs = 5;
    cfg.patience = 2;
    cfg.learning_rate = 0.1;
  }
  return cfg;
}

TrainingMonitor::Decision TrainingMonitor::observe(double val_loss,
                                                   double val_accuracy) {
  Decision d;
  if (first_ || val_accuracy > best_accuracy_) {
    best_accuracy_ = val_accuracy;
    d.save_best = true;
  }
  if (first_ || val_loss < best_loss_ - min_delta_) {
    best_loss_ = val_loss;
    remaining_ = patience_;
  } else {
    --remaining_;
  }
  first_ = false;
  d.stop = remaining_ <= 0;
  return d;
}

double binary_accuracy(std::span<const double> probs,
                       std::span<const int> labels, double threshold) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw InputError("accuracy needs matching non-empty predictions/labels");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if ((probs[i] > threshold) == (labels[i] == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

namespace {

double mean_bce(std::span<const double> probs, std::span<const int> labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-12, 1.0 - 1e-12);
    loss -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return loss / static_cast<double>(probs.size());
}

}  // namespace

TrainResult train(const Model& initial, const TrainData& train_data,
                  const TrainData& val_data, const TrainConfig& cfg) {
  if (train_data.inputs.empty() || val_data.inputs.empty()) {
    throw InputError("train and validation partitions must be non-empty");
  }
  if (train_data.inputs.size() != train_data.labels.size() ||
      val_data.inputs.size() != val_data.labels.size()) {
    throw InputError("inputs and labels must align");
  }

  TrainResult result;
  Model model = initial;
  result.best = initial;
  TrainingMonitor monitor(cfg.min_delta, cfg.patience);
  Rng order_rng(derive_seed(cfg.seed, SeedStream::BatchOrder));
  Rng dropout_rng(derive_seed(cfg.seed, SeedStream::Dropout));
  Gradients grads = make_gradients(model);

  std::vector<std::size_t> order(train_data.inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += bs) {
        const std::size_t n = std::min(bs, order.size() - start);
        std::vector<EncodedSequence> bx;
        std::vector<int> by;
        bx.reserve(n);
        by.reserve(n);
        for (std::size_t k = 0; k < n; ++k) {
          bx.push_back(train_data.inputs[order[start + k]]);
          by.push_back(train_data.labels[order[start + k]]);
        }
        const double batch_loss = loss_and_gradients(
            model, bx, by, cfg.l2, grads, RunMode::Train, &dropout_rng);
        loss_sum += batch_loss * static_cast<double>(n);
        for (std::size_t pi = 0; pi < model.params.size(); ++pi) {
          auto& pv = model.params[pi].v;
          const auto& gv = grads.tensors[pi].v;
          for (std::size_t k = 0; k < pv.size(); ++k) {
            pv[k] -= cfg.learning_rate * gv[k];
          }
        }
      }
    } catch (const NumericError&) {
      result.diverged = true;
      break;
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    const auto val_probs = forward(model, val_data.inputs, RunMode::Eval);
    stats.val_loss = mean_bce(val_probs, val_data.labels);
    stats.val_accuracy = binary_accuracy(val_probs, val_data.labels);
    if (!std::isfinite(stats.val_loss)) {
      result.diverged = true;
      break;
    }

    const auto decision = monitor.observe(stats.val_loss, stats.val_accuracy);
    result.history.epochs.push_back(stats);
    if (decision.save_best) {
      result.best = model;
      result.history.save_epoch = epoch;
    }
    if (decision.stop) break;
  }
  result.history.epoch_count = static_cast<int>(result.history.epochs.size());
  return result;
}

SweepGrid SweepGrid::paper_default() {
  SweepGrid grid;
  grid.filter_size_sets = {{3, 4, 5}, {10, 16, 22}, {16, 22, 27}, {22, 27, 33}};
  grid.dropouts = {0.4, 0.5, 0.6};
  grid.l2s = {0.0, 0.001, 0.01, 0.1};
  return grid;
}

namespace {

std::string render_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string filters_to_string(const std::vector<int>& fs) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(fs[i]);
  }
  return out;
}

}  // namespace

SweepResult hyperparameter_sweep(const ArchitectureDescriptor& base,
                                 const TrainData& train_data,
                                 const TrainData& val_data,
                                 const TrainConfig& base_cfg,
                                 std::size_t vocab_size,
                                 const SweepGrid& grid) {
  if (!is_cnn(base.kind)) {
    throw ConfigError("hyper-parameter sweep expects a CNN architecture");
  }
  if (grid.filter_size_sets.empty() || grid.dropouts.empty() ||
      grid.l2s.empty()) {
    throw ConfigError("sweep grid must be non-empty on every axis");
  }
  if (train_data.inputs.empty()) throw InputError("sweep: empty training data");
  const std::size_t L = train_data.inputs.front().ids.size();

  SweepResult result;
  std::vector<std::string> seen;
  for (const auto& fs : grid.filter_size_sets) {
    for (double dropout : grid.dropouts) {
      for (double l2 : grid.l2s) {
        std::string key = filters_to_string(fs) + "|" +
                          render_double(dropout) + "|" + render_double(l2);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
          result.notices.push_back("duplicate grid point (" + key +
                                   ") deduplicated");
          continue;
        }
        seen.push_back(std::move(key));

        ArchitectureDescriptor arch = base;
        arch.filter_sizes = fs;
        arch.dropout_embed = dropout;
        if (static_cast<std::size_t>(arch.max_filter_size()) > L) {
          result.notices.push_back(
              "skipping filters (" + filters_to_string(fs) +
              "): largest filter exceeds input length " + std::to_string(L));
          continue;
        }
        TrainConfig cfg = base_cfg;
        cfg.l2 = l2;
        const Model model = init_model(arch, vocab_size, L,
                                       derive_seed(cfg.seed, SeedStream::Init));
        const TrainResult tr = train(model, train_data, val_data, cfg);

        SweepRow row;
        row.filter_sizes = fs;
        row.dropout = dropout;
        row.l2 = l2;
        row.epochs = tr.history.epoch_count;
        if (tr.history.save_epoch > 0) {
          row.val_accuracy =
              tr.history.epochs[tr.history.save_epoch - 1].val_accuracy;
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "filter_sizes,dropout,l2,val_accuracy,epochs\n";
  for (const auto& row : result.rows) {
    out += '"' + filters_to_string(row.filter_sizes) + "\"," +
           render_double(row.dropout) + ',' + render_double(row.l2) + ',' +
           render_double(row.val_accuracy) + ',' + std::to_string(row.epochs) +
           '\n';
  }
  return out;
}

// --- model file --------------------------------------------------------------

namespace {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_model(const Model& model, const std::string& path,
                const std::map<std::string, std::string>& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file: " + path);

  const auto& a = model.arch;
  out << "#segtr-model v1 kind=" << arch_name(a.kind) << " E=" << a.embedding_dim
      << " L=" << model.max_length << " v=" << model.vocab_size;
  if (!a.filter_sizes.empty()) {
    out << " filters=" << filters_to_string(a.filter_sizes)
        << " fps=" << a.filters_per_size;
  }
  if (a.dense_dim > 0) out << " dense=" << a.dense_dim;
  if (a.lstm_units > 0) out << " units=" << a.lstm_units;
  out << " drop=" << render_double(a.dropout_embed)
      << " pdrop=" << render_double(a.dropout_penultimate);
  for (const auto& [k, v] : extra) out << ' ' << k << '=' << v;
  out << '\n';

  for (const auto& t : model.params) {
    out << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    for (std::size_t r = 0; r < t.rows; ++r) {
      for (std::size_t c = 0; c < t.cols; ++c) {
        if (c) out << ' ';
        out << format_g17(t.at(r, c));
      }
      out << '\n';
    }
  }
  if (!out) throw ConfigError("failed writing model file: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty model file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream header(line);
  std::string magic, version;
  header >> magic >> version;
  if (magic != "#segtr-model" || version != "v1") {
    throw ParseError(path, 1, "expected header '#segtr-model v1 ...'");
  }

  LoadedModel loaded;
  Model& model = loaded.model;
  std::map<std::string, std::string> fields;
  std::string kv;
  while (header >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path, 1, "malformed header field: " + kv);
    }
    fields[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  const auto take = [&](const char* key) -> std::optional<std::string> {
    const auto it = fields.find(key);
    if (it == fields.end()) return std::nullopt;
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  const auto kind_str = take("kind");
  if (!kind_str) throw ParseError(path, 1, "header missing kind=");
  const auto kind = parse_arch(*kind_str);
  if (!kind) throw ParseError(path, 1, "unknown architecture: " + *kind_str);
  model.arch = ArchitectureDescriptor::defaults(*kind);

  const auto to_int = [&](const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ParseError(path, 1, "bad integer in header: " + s);
    }
    return v;
  };
  const auto to_double = [&](const std::string& s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ParseError(path, 1, "bad number in header: " + s);
    }
    return v;
  };
  if (const auto v = take("E")) model.arch.embedding_dim = to_int(*v);
  if (const auto v = take("L")) model.max_length = static_cast<std::size_t>(to_int(*v));
  if (const auto v = take("v")) model.vocab_size = static_cast<std::size_t>(to_int(*v));
  if (const auto v = take("filters")) {
    model.arch.filter_sizes.clear();
    std::istringstream fs(*v);
    std::string part;
    while (std::getline(fs, part, ',')) {
      model.arch.filter_sizes.push_back(to_int(part));
    }
  }
  if (const auto v = take("fps")) model.arch.filters_per_size = to_int(*v);
  if (const auto v = take("dense")) model.arch.dense_dim = to_int(*v);
  if (const auto v = take("units")) model.arch.lstm_units = to_int(*v);
  if (const auto v = take("drop")) model.arch.dropout_embed = to_double(*v);
  if (const auto v = take("pdrop")) model.arch.dropout_penultimate = to_double(*v);
  loaded.extra = std::move(fields);

  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream dim(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(dim >> name >> rows >> cols)) {
      throw ParseError(path, line_no, "expected 'name rows cols'");
    }
    Tensor t(name, rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) {
        throw ParseError(path, line_no, "truncated tensor " + name);
      }
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const char* p = line.data();
      const char* end = line.data() + line.size();
      for (std::size_t c = 0; c < cols; ++c) {
        while (p < end && *p == ' ') ++p;
        double value = 0;
        const auto res = std::from_chars(p, end, value);
        if (res.ec != std::errc()) {
          throw ParseError(path, line_no, "bad value in tensor " + name);
        }
        t.at(r, c) = value;
        p = res.ptr;
      }
    }
    model.params.push_back(std::move(t));
  }
  return loaded;
}

}  // namespace segtr
