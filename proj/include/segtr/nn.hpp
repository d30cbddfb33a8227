#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segtr/rng.hpp"
#include "segtr/vocab.hpp"

namespace segtr {

enum class ArchKind { CnnRand, CnnRandSimplified, Lstm, MeanPool };

std::string arch_name(ArchKind kind);
std::optional<ArchKind> parse_arch(std::string_view name);

struct ArchitectureDescriptor {
  ArchKind kind = ArchKind::MeanPool;
  int embedding_dim = 20;
  std::vector<int> filter_sizes;
  int filters_per_size = 0;
  double dropout_embed = 0.0;
  double dropout_penultimate = 0.0;
  int dense_dim = 0;
  int lstm_units = 0;

  static ArchitectureDescriptor defaults(ArchKind kind);
  int max_filter_size() const;
};

struct LayerShape {
  std::string name;
  std::vector<std::size_t> dims;  // batch dimension omitted
};

// Layer-by-layer output shapes: Input -> Embedding -> per-filter
// Conv/MaxPool(2)/Flatten -> Concat -> Dense -> Dense(1) for the CNNs,
// Input -> Embedding -> Mean -> Dense(1) for MeanPool, and
// Input -> Embedding -> Lstm -> Dense(1) for the LSTM descriptor.
std::vector<LayerShape> infer_shapes(const ArchitectureDescriptor& arch,
                                     std::size_t max_length,
                                     std::size_t vocab_size);

// Trainable parameter count: v*E embedding, f*E*F+F per conv, (in+1)*out
// per dense layer; the LSTM cell counts 4*units*(E+units+1).
std::int64_t count_parameters(const ArchitectureDescriptor& arch,
                              std::size_t max_length, std::size_t vocab_size);

struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), v(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

struct Model {
  ArchitectureDescriptor arch;
  std::size_t vocab_size = 0;
  std::size_t max_length = 0;
  std::vector<Tensor> params;

  const Tensor& param(std::string_view name) const;
  Tensor& param(std::string_view name);
};

// Seeded initialization: embeddings uniform in [-0.05, 0.05] with the PAD
// row zeroed, weight matrices scaled-uniform by fan-in, biases zero. The
// LSTM kind is a shape/memory descriptor only and cannot be initialized.
Model init_model(const ArchitectureDescriptor& arch, std::size_t vocab_size,
                 std::size_t max_length, std::uint64_t seed);

enum class RunMode { Train, Eval };

// Sigmoid probabilities for a batch. Eval is deterministic and never
// consults the RNG; Train applies inverted dropout at the descriptor's
// rates. PAD positions are masked out of pooling and means.
std::vector<double> forward(const Model& model,
                            std::span<const EncodedSequence> batch,
                            RunMode mode = RunMode::Eval, Rng* rng = nullptr);

struct Gradients {
  std::vector<Tensor> tensors;  // parallel to Model::params
};

// Mean binary cross-entropy plus l2 * ||dense weights||^2, with gradients
// for every parameter tensor. Throws NumericError on non-finite loss.
double loss_and_gradients(const Model& model,
                          std::span<const EncodedSequence> batch,
                          std::span<const int> labels, double l2,
                          Gradients& grads, RunMode mode = RunMode::Eval,
                          Rng* rng = nullptr);

struct TrainConfig {
  int max_epochs = 5;
  int batch_size = 64;
  double learning_rate = 0.1;
  std::uint64_t seed = 1;
  double min_delta = 0.001;   // early-stopping threshold on validation loss
  int patience = 2;
  double l2 = 0.0;

  static TrainConfig defaults(ArchKind kind);
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int epoch_count = 0;  // EC
  int save_epoch = 0;   // SE, 1-based epoch of the best validation accuracy
};

// The two callbacks: saves on strict validation-accuracy improvement and
// stops when validation loss fails to improve by more than min_delta for
// `patience` consecutive epochs.
class TrainingMonitor {
 public:
  TrainingMonitor(double min_delta, int patience)
      : min_delta_(min_delta), patience_(patience), remaining_(patience) {}

  struct Decision {
    bool save_best = false;
    bool stop = false;
  };
  Decision observe(double val_loss, double val_accuracy);

 private:
  double min_delta_;
  int patience_;
  int remaining_;
  double best_loss_ = 0.0;
  double best_accuracy_ = 0.0;
  bool first_ = true;
};

struct TrainData {
  std::vector<EncodedSequence> inputs;
  std::vector<int> labels;  // 0 = negative, 1 = positive
};

struct TrainResult {
  Model best;
  TrainHistory history;
  bool diverged = false;  // non-finite loss; history covers the run so far
};

// Seeded mini-batch gradient descent with a fixed learning rate.
TrainResult train(const Model& initial, const TrainData& train_data,
                  const TrainData& val_data, const TrainConfig& cfg);

double binary_accuracy(std::span<const double> probs,
                       std::span<const int> labels, double threshold = 0.5);

// --- hyper-parameter sweep --------------------------------------------------

struct SweepGrid {
  std::vector<std::vector<int>> filter_size_sets;
  std::vector<double> dropouts;
  std::vector<double> l2s;

  static SweepGrid paper_default();
};

struct SweepRow {
  std::vector<int> filter_sizes;
  double dropout = 0.0;
  double l2 = 0.0;
  double val_accuracy = 0.0;
  int epochs = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> notices;  // skipped combinations, duplicates
};

// Trains every grid combination under identical seeds and reports the best
// validation accuracy per combination. Combinations whose largest filter
// exceeds the input length are skipped with a notice; duplicate grid points
// collapse to one row.
SweepResult hyperparameter_sweep(const ArchitectureDescriptor& base,
                                 const TrainData& train_data,
                                 const TrainData& val_data,
                                 const TrainConfig& base_cfg,
                                 std::size_t vocab_size,
                                 const SweepGrid& grid);

std::string sweep_csv(const SweepResult& result);

// --- model file -------------------------------------------------------------
// Header "#segtr-model v1 kind=<tag> E=<n> L=<n> v=<n> ..." carrying the
// remaining descriptor fields, then one "name rows cols" line per tensor
// followed by its rows, 17 significant digits per value.

void save_model(const Model& model, const std::string& path,
                const std::map<std::string, std::string>& extra = {});

struct LoadedModel {
  Model model;
  std::map<std::string, std::string> extra;
};

LoadedModel load_model(const std::string& path);

}  // namespace segtr
