#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "segtr/errors.hpp"
#include "segtr/nn.hpp"
#include "segtr/rng.hpp"

using namespace segtr;

namespace {

std::vector<std::size_t> layer_dims(const std::vector<LayerShape>& shapes,
                                    const std::string& name) {
  for (const auto& s : shapes) {
    if (s.name == name) return s.dims;
  }
  FAIL("no layer named ", name);
  return {};
}

EncodedSequence make_seq(std::vector<int> ids, std::size_t true_length) {
  EncodedSequence seq;
  seq.ids = std::move(ids);
  seq.true_length = true_length;
  return seq;
}

// A random batch over a tiny vocabulary; ids below `vocab`, PAD tail.
std::vector<EncodedSequence> random_batch(Rng& rng, std::size_t n,
                                          std::size_t L, std::size_t vocab,
                                          std::size_t min_len) {
  std::vector<EncodedSequence> batch;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t tl = min_len + rng.next_index(L - min_len + 1);
    std::vector<int> ids(L, 0);
    for (std::size_t t = 0; t < tl; ++t) {
      ids[t] = 1 + static_cast<int>(rng.next_index(vocab - 1));
    }
    batch.push_back(make_seq(std::move(ids), tl));
  }
  return batch;
}

// Central finite differences over every parameter against the analytic
// gradients; dropout off. Returns the worst relative error.
double gradient_check(Model& model, const std::vector<EncodedSequence>& batch,
                      const std::vector<int>& labels, double l2) {
  Gradients grads;
  loss_and_gradients(model, batch, labels, l2, grads);
  const double eps = 1e-4;
  double worst = 0.0;
  Gradients scratch;
  for (std::size_t pi = 0; pi < model.params.size(); ++pi) {
    for (std::size_t k = 0; k < model.params[pi].v.size(); ++k) {
      double& p = model.params[pi].v[k];
      const double saved = p;
      p = saved + eps;
      const double up = loss_and_gradients(model, batch, labels, l2, scratch);
      p = saved - eps;
      const double down =
          loss_and_gradients(model, batch, labels, l2, scratch);
      p = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads.tensors[pi].v[k];
      const double rel = std::fabs(numeric - analytic) /
                         std::max({std::fabs(numeric), std::fabs(analytic),
                                   1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// ReLU kinks and max-pool ties make finite differences unreliable; draws
// are filtered to instances that sit safely away from both.
bool well_conditioned(const Model& model,
                      const std::vector<EncodedSequence>& batch) {
  if (model.arch.kind == ArchKind::MeanPool) return true;
  const std::size_t L = model.max_length;
  const std::size_t E = static_cast<std::size_t>(model.arch.embedding_dim);
  const std::size_t F = static_cast<std::size_t>(model.arch.filters_per_size);
  for (const auto& ex : batch) {
    for (std::size_t fi = 0; fi < model.arch.filter_sizes.size(); ++fi) {
      const auto f =
          static_cast<std::size_t>(model.arch.filter_sizes[fi]);
      const Tensor& cw = model.param("conv_f" + std::to_string(f) + "_w");
      const Tensor& cb = model.param("conv_f" + std::to_string(f) + "_b");
      const std::size_t nconv = L - f + 1;
      std::vector<double> act(nconv * F, 0.0);
      for (std::size_t i = 0; i < nconv; ++i) {
        if (i + f > ex.true_length) continue;
        for (std::size_t k = 0; k < F; ++k) {
          double pre = cb.v[k];
          for (std::size_t j = 0; j < f; ++j) {
            const auto row =
                static_cast<std::size_t>(ex.ids[i + j]);
            for (std::size_t e = 0; e < E; ++e) {
              pre += model.params[0].at(row, e) * cw.at(j * E + e, k);
            }
          }
          if (std::fabs(pre) < 1e-3) return false;  // ReLU kink
          act[i * F + k] = pre > 0 ? pre : 0.0;
        }
      }
      for (std::size_t p = 0; p + 1 < nconv; p += 2) {
        for (std::size_t k = 0; k < F; ++k) {
          const double a = act[p * F + k], b = act[(p + 1) * F + k];
          if (a != b && std::fabs(a - b) < 1e-3) return false;  // pool tie
        }
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("architecture defaults") {
  const auto cnn = ArchitectureDescriptor::defaults(ArchKind::CnnRand);
  CHECK(cnn.embedding_dim == 50);
  CHECK(cnn.filter_sizes == std::vector<int>{3, 4, 5});
  CHECK(cnn.filters_per_size == 100);
  CHECK(cnn.dropout_embed == 0.5);
  CHECK(cnn.dense_dim == 50);

  const auto simple =
      ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
  CHECK(simple.embedding_dim == 20);
  CHECK(simple.filter_sizes == std::vector<int>{3, 8});
  CHECK(simple.filters_per_size == 10);
  CHECK(simple.dropout_penultimate == 0.8);

  const auto lstm = ArchitectureDescriptor::defaults(ArchKind::Lstm);
  CHECK(lstm.embedding_dim == 32);
  CHECK(lstm.lstm_units == 100);

  const auto mp = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  CHECK(mp.embedding_dim == 20);
  CHECK(mp.dropout_embed == 0.0);

  const auto cnn_cfg = TrainConfig::defaults(ArchKind::CnnRand);
  CHECK(cnn_cfg.max_epochs == 200);
  CHECK(cnn_cfg.patience == 20);
  CHECK(cnn_cfg.min_delta == 0.001);
  const auto mp_cfg = TrainConfig::defaults(ArchKind::MeanPool);
  CHECK(mp_cfg.max_epochs == 5);
  CHECK(mp_cfg.patience == 2);
}

TEST_CASE("shape walkthrough at L=38") {
  const auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRand);
  const auto shapes = infer_shapes(arch, 38, 10000);
  CHECK(layer_dims(shapes, "embedding") ==
        std::vector<std::size_t>{38, 50});
  CHECK(layer_dims(shapes, "conv_f3") == std::vector<std::size_t>{36, 100});
  CHECK(layer_dims(shapes, "conv_f4") == std::vector<std::size_t>{35, 100});
  CHECK(layer_dims(shapes, "conv_f5") == std::vector<std::size_t>{34, 100});
  CHECK(layer_dims(shapes, "maxpool_f3") ==
        std::vector<std::size_t>{18, 100});
  CHECK(layer_dims(shapes, "maxpool_f4") ==
        std::vector<std::size_t>{17, 100});
  CHECK(layer_dims(shapes, "maxpool_f5") ==
        std::vector<std::size_t>{17, 100});
  CHECK(layer_dims(shapes, "flatten_f3") == std::vector<std::size_t>{1800});
  CHECK(layer_dims(shapes, "flatten_f4") == std::vector<std::size_t>{1700});
  CHECK(layer_dims(shapes, "flatten_f5") == std::vector<std::size_t>{1700});
  CHECK(layer_dims(shapes, "concat") == std::vector<std::size_t>{5200});
  CHECK(layer_dims(shapes, "dense") == std::vector<std::size_t>{50});
  CHECK(layer_dims(shapes, "output") == std::vector<std::size_t>{1});

  SUBCASE("mean pool collapses the length axis") {
    const auto mp = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
    const auto s = infer_shapes(mp, 10, 100);
    REQUIRE(s.size() == 4);
    CHECK(s[0].dims == std::vector<std::size_t>{10});
    CHECK(s[1].dims == std::vector<std::size_t>{10, 20});
    CHECK(s[2].dims == std::vector<std::size_t>{20});
    CHECK(s[3].dims == std::vector<std::size_t>{1});
  }
  SUBCASE("lstm descriptor") {
    const auto lstm = ArchitectureDescriptor::defaults(ArchKind::Lstm);
    const auto s = infer_shapes(lstm, 38, 100);
    CHECK(layer_dims(s, "embedding") == std::vector<std::size_t>{38, 32});
    CHECK(layer_dims(s, "lstm") == std::vector<std::size_t>{100});
  }
  SUBCASE("input shorter than the largest filter") {
    CHECK_THROWS_AS(infer_shapes(arch, 4, 100), InputError);
  }
}

TEST_CASE("parameter counts") {
  auto mp = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  mp.embedding_dim = 4;
  CHECK(count_parameters(mp, 10, 100) == 405);  // 100*4 + (4+1)*1
  CHECK(count_parameters(mp, 10, 0) == 5);      // empty vocabulary

  SUBCASE("simplified CNN against an independent tally") {
    auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
    const std::size_t L = 12, v = 10;
    // Spreadsheet-style tally, term by term.
    const long long emb = 10 * 20;
    const long long conv3 = 3 * 20 * 10 + 10;
    const long long conv8 = 8 * 20 * 10 + 10;
    const long long pool3 = (12 - 3 + 1) / 2;  // 5
    const long long pool8 = (12 - 8 + 1) / 2;  // 2
    const long long concat = (pool3 + pool8) * 10;
    const long long dense1 = (concat + 1) * 50;
    const long long dense2 = (50 + 1) * 1;
    CHECK(count_parameters(arch, L, v) ==
          emb + conv3 + conv8 + dense1 + dense2);

    // The LSTM descriptor's formula reproduces the paper's constant.
    const auto lstm = ArchitectureDescriptor::defaults(ArchKind::Lstm);
    CHECK(count_parameters(lstm, 38, 0) == 53301);
  }
}

TEST_CASE("forward basics") {
  auto arch = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  arch.embedding_dim = 4;
  Model model = init_model(arch, 6, 5, 99);

  SUBCASE("zero weights give probability one half") {
    for (auto& t : model.params) std::fill(t.v.begin(), t.v.end(), 0.0);
    const std::vector<EncodedSequence> batch = {make_seq({1, 2, 3, 0, 0}, 3)};
    const auto probs = forward(model, batch);
    REQUIRE(probs.size() == 1);
    CHECK(probs[0] == doctest::Approx(0.5));
  }
  SUBCASE("eval is deterministic") {
    const auto batch = std::vector<EncodedSequence>{
        make_seq({1, 2, 3, 0, 0}, 3), make_seq({4, 5, 0, 0, 0}, 2)};
    CHECK(forward(model, batch) == forward(model, batch));
  }
  SUBCASE("mean invariance for repeated tokens") {
    const std::vector<EncodedSequence> single = {make_seq({3, 0, 0, 0, 0}, 1)};
    const std::vector<EncodedSequence> repeated = {
        make_seq({3, 3, 3, 3, 3}, 5)};
    const auto one = forward(model, single);
    const auto rep = forward(model, repeated);
    CHECK(one[0] == doctest::Approx(rep[0]).epsilon(1e-12));
  }
  SUBCASE("appending PAD never changes the output") {
    const std::vector<EncodedSequence> batch = {make_seq({2, 4, 0, 0, 0}, 2)};
    const auto shorter = forward(model, batch);
    // PAD rows are genuinely ignored: scribble on the PAD embedding.
    Model scribbled = model;
    for (std::size_t e = 0; e < 4; ++e) scribbled.params[0].at(0, e) = 1e6;
    CHECK(forward(scribbled, batch)[0] == doctest::Approx(shorter[0]));
  }
  SUBCASE("ids outside the embedding table are rejected") {
    const std::vector<EncodedSequence> batch = {make_seq({6, 0, 0, 0, 0}, 1)};
    CHECK_THROWS_AS(forward(model, batch), InputError);
  }
}

TEST_CASE("loss values") {
  auto arch = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  arch.embedding_dim = 4;
  Model model = init_model(arch, 6, 5, 99);
  for (auto& t : model.params) std::fill(t.v.begin(), t.v.end(), 0.0);

  Gradients grads;
  const std::vector<EncodedSequence> batch = {make_seq({1, 2, 0, 0, 0}, 2)};
  const std::vector<int> labels = {1};
  const double loss = loss_and_gradients(model, batch, labels, 0.0, grads);
  CHECK(loss == doctest::Approx(std::log(2.0)));  // p = 0.5, label 1

  SUBCASE("l2 adds exactly its penalty") {
    Model m2 = init_model(arch, 6, 5, 7);
    double sq = 0.0;
    for (double w : m2.param("dense_w").v) sq += w * w;
    const double base = loss_and_gradients(m2, batch, labels, 0.0, grads);
    const double with = loss_and_gradients(m2, batch, labels, 0.1, grads);
    CHECK(with - base == doctest::Approx(0.1 * sq).epsilon(1e-10));
  }
}

TEST_CASE("gradient check on a six-token toy model") {
  Rng rng(314159);
  auto arch = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  arch.embedding_dim = 3;
  Model model = init_model(arch, 6, 6, 2718);
  const auto batch = random_batch(rng, 4, 6, 6, 1);
  const std::vector<int> labels = {1, 0, 1, 0};
  CHECK(gradient_check(model, batch, labels, 0.0) < 1e-4);
  CHECK(gradient_check(model, batch, labels, 0.05) < 1e-4);
}

TEST_CASE("gradient check on the simplified CNN") {
  Rng rng(271828);
  auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
  arch.embedding_dim = 4;
  arch.filter_sizes = {2, 3};
  arch.filters_per_size = 3;
  arch.dense_dim = 5;
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 3 && seed < 60; ++seed) {
    Model model = init_model(arch, 7, 6, seed * 17);
    const auto batch = random_batch(rng, 3, 6, 7, 2);
    if (!well_conditioned(model, batch)) continue;
    const std::vector<int> labels = {1, 0, 1};
    CHECK(gradient_check(model, batch, labels, 0.0) < 1e-4);
    ++checked;
  }
  CHECK(checked == 3);
}

TEST_CASE("dropout") {
  auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
  arch.embedding_dim = 4;
  arch.filter_sizes = {2};
  arch.filters_per_size = 2;
  arch.dense_dim = 3;
  const auto batch = std::vector<EncodedSequence>{
      make_seq({1, 2, 3, 4, 0}, 4)};

  SUBCASE("rate zero is the identity") {
    auto quiet = arch;
    quiet.dropout_embed = 0.0;
    quiet.dropout_penultimate = 0.0;
    Model model = init_model(quiet, 6, 5, 5);
    Rng rng(1);
    const auto train_out = forward(model, batch, RunMode::Train, &rng);
    const auto eval_out = forward(model, batch, RunMode::Eval);
    CHECK(train_out == eval_out);
  }
  SUBCASE("eval never consults the RNG") {
    Model model = init_model(arch, 6, 5, 5);
    CHECK_NOTHROW(forward(model, batch, RunMode::Eval, nullptr));
  }
  SUBCASE("train mode without an RNG is an error when dropout is active") {
    Model model = init_model(arch, 6, 5, 5);
    CHECK_THROWS_AS(forward(model, batch, RunMode::Train, nullptr),
                    StateError);
  }
}

TEST_CASE("training monitor traces") {
  SUBCASE("patience countdown stops at epoch four") {
    TrainingMonitor monitor(0.001, 2);
    const std::vector<double> losses = {1.0, 0.9, 0.91, 0.92};
    std::vector<bool> stops;
    for (double loss : losses) {
      stops.push_back(monitor.observe(loss, 0.5).stop);
    }
    CHECK(stops == std::vector<bool>{false, false, false, true});
  }
  SUBCASE("best accuracy picks the save epoch") {
    TrainingMonitor monitor(0.001, 10);
    const std::vector<double> accs = {0.6, 0.8, 0.7};
    int save_epoch = 0;
    for (std::size_t e = 0; e < accs.size(); ++e) {
      if (monitor.observe(1.0 / (e + 1.0), accs[e]).save_best) {
        save_epoch = static_cast<int>(e + 1);
      }
    }
    CHECK(save_epoch == 2);
  }
  SUBCASE("improvement within min_delta does not reset patience") {
    TrainingMonitor monitor(0.01, 2);
    CHECK_FALSE(monitor.observe(1.0, 0.5).stop);
    CHECK_FALSE(monitor.observe(0.995, 0.5).stop);  // too small to count
    CHECK(monitor.observe(0.992, 0.5).stop);
  }
}

TEST_CASE("training end to end on a separable toy problem") {
  // Token 2 marks positives, token 3 negatives.
  TrainData train_data, val_data;
  Rng rng(4242);
  for (int i = 0; i < 60; ++i) {
    const int label = i % 2;
    std::vector<int> ids(4, 0);
    const std::size_t tl = 2 + rng.next_index(3);
    for (std::size_t t = 0; t < tl; ++t) {
      ids[t] = label == 1 ? 2 : 3;
    }
    auto& dst = i < 48 ? train_data : val_data;
    dst.inputs.push_back(make_seq(std::move(ids), tl));
    dst.labels.push_back(label);
  }

  auto arch = ArchitectureDescriptor::defaults(ArchKind::MeanPool);
  arch.embedding_dim = 8;
  const Model model = init_model(arch, 4, 4, 777);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.patience = 10;
  cfg.learning_rate = 0.5;
  cfg.batch_size = 8;
  cfg.seed = 99;

  const auto result = train(model, train_data, val_data, cfg);
  REQUIRE_FALSE(result.diverged);
  REQUIRE(result.history.epoch_count >= 1);
  CHECK(result.history.save_epoch >= 1);
  CHECK(result.history.save_epoch <= result.history.epoch_count);

  const auto& best_epoch =
      result.history.epochs[result.history.save_epoch - 1];
  CHECK(best_epoch.val_accuracy >= 0.9);
  for (const auto& e : result.history.epochs) {
    CHECK(best_epoch.val_accuracy >= e.val_accuracy);
  }

  SUBCASE("same seed, same history") {
    const auto again = train(model, train_data, val_data, cfg);
    REQUIRE(again.history.epochs.size() == result.history.epochs.size());
    for (std::size_t e = 0; e < again.history.epochs.size(); ++e) {
      CHECK(again.history.epochs[e].train_loss ==
            result.history.epochs[e].train_loss);
      CHECK(again.history.epochs[e].val_loss ==
            result.history.epochs[e].val_loss);
      CHECK(again.history.epochs[e].val_accuracy ==
            result.history.epochs[e].val_accuracy);
    }
    CHECK(again.history.save_epoch == result.history.save_epoch);
  }
  SUBCASE("best model beats the initial one on validation") {
    const auto before = forward(model, val_data.inputs);
    const auto after = forward(result.best, val_data.inputs);
    CHECK(binary_accuracy(after, val_data.labels) >=
          binary_accuracy(before, val_data.labels));
  }
}

TEST_CASE("sweep mechanics") {
  TrainData train_data, val_data;
  Rng rng(31337);
  for (int i = 0; i < 30; ++i) {
    const int label = i % 2;
    std::vector<int> ids(6, 0);
    for (std::size_t t = 0; t < 4; ++t) ids[t] = label == 1 ? 2 : 3;
    auto& dst = i < 24 ? train_data : val_data;
    dst.inputs.push_back(make_seq(std::move(ids), 4));
    dst.labels.push_back(label);
  }
  auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
  arch.embedding_dim = 4;
  arch.filters_per_size = 2;
  arch.dense_dim = 3;
  TrainConfig cfg;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  cfg.batch_size = 8;
  cfg.seed = 5;

  SUBCASE("one-point grid gives one row") {
    SweepGrid grid;
    grid.filter_size_sets = {{2, 3}};
    grid.dropouts = {0.5};
    grid.l2s = {0.0};
    const auto result =
        hyperparameter_sweep(arch, train_data, val_data, cfg, 4, grid);
    CHECK(result.rows.size() == 1);
    CHECK(result.rows[0].epochs >= 1);
  }
  SUBCASE("oversized filters are skipped with a notice") {
    SweepGrid grid;
    grid.filter_size_sets = {{2, 3}, {10, 16, 22}};
    grid.dropouts = {0.5};
    grid.l2s = {0.0};
    const auto result =
        hyperparameter_sweep(arch, train_data, val_data, cfg, 4, grid);
    CHECK(result.rows.size() == 1);
    REQUIRE(result.notices.size() == 1);
    CHECK(result.notices[0].find("exceeds input length") !=
          std::string::npos);
  }
  SUBCASE("duplicate grid points collapse") {
    SweepGrid grid;
    grid.filter_size_sets = {{2}, {2}};
    grid.dropouts = {0.5};
    grid.l2s = {0.0};
    const auto result =
        hyperparameter_sweep(arch, train_data, val_data, cfg, 4, grid);
    CHECK(result.rows.size() == 1);
    REQUIRE(result.notices.size() == 1);
    CHECK(result.notices[0].find("duplicate") != std::string::npos);
  }
  SUBCASE("the paper-default grid is the 4x3x4 product") {
    const auto grid = SweepGrid::paper_default();
    CHECK(grid.filter_size_sets.size() * grid.dropouts.size() *
              grid.l2s.size() ==
          48);
  }
  SUBCASE("csv rendering quotes the filter set") {
    SweepResult result;
    result.rows.push_back({{3, 4, 5}, 0.5, 0.0, 0.75, 7});
    const auto csv = sweep_csv(result);
    CHECK(csv == "filter_sizes,dropout,l2,val_accuracy,epochs\n"
                 "\"3,4,5\",0.5,0,0.75,7\n");
  }
}

TEST_CASE("model file round trip is bit-exact") {
  auto arch = ArchitectureDescriptor::defaults(ArchKind::CnnRandSimplified);
  arch.embedding_dim = 3;
  arch.filter_sizes = {2, 3};
  arch.filters_per_size = 2;
  arch.dense_dim = 4;
  const Model model = init_model(arch, 5, 6, 13);

  const std::string path = "test_model_tmp.txt";
  save_model(model, path, {{"method", "word-token"}});
  const auto loaded = load_model(path);
  CHECK(loaded.extra.at("method") == "word-token");
  CHECK(loaded.model.arch.kind == ArchKind::CnnRandSimplified);
  CHECK(loaded.model.arch.filter_sizes == arch.filter_sizes);
  CHECK(loaded.model.vocab_size == 5);
  CHECK(loaded.model.max_length == 6);
  REQUIRE(loaded.model.params.size() == model.params.size());
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    CHECK(loaded.model.params[i].name == model.params[i].name);
    CHECK(loaded.model.params[i].v == model.params[i].v);  // bit-exact
  }

  save_model(loaded.model, path + "2", {{"method", "word-token"}});
  std::ifstream a(path, std::ios::binary), b(path + "2", std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  std::remove(path.c_str());
  std::remove((path + "2").c_str());
}

TEST_CASE("lstm cannot be instantiated") {
  const auto lstm = ArchitectureDescriptor::defaults(ArchKind::Lstm);
  CHECK_THROWS_AS(init_model(lstm, 10, 5, 1), ConfigError);
}
