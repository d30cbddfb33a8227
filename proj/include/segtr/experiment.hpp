#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "segtr/corpus.hpp"
#include "segtr/metrics.hpp"
#include "segtr/nn.hpp"
#include "segtr/perf.hpp"
#include "segtr/segment.hpp"

namespace segtr {

struct ExperimentConfig {
  std::string corpus_path;
  std::optional<RatingScheme> scheme;
  SegmentationMethod method = SegmentationMethod::WordToken;
  std::string dict_path;
  std::string bpe_path;                   // load a trained model ...
  std::optional<std::size_t> bpe_limit;   // ... or train one at this limit
  BpeResidue on_residue = BpeResidue::Discard;
  int min_frequency = 3;
  double percentile = 0.995;
  SplitSpec split;  // ratios only; the seed is derived from `seed`
  ArchKind arch = ArchKind::MeanPool;
  std::optional<int> max_epochs;
  std::optional<int> batch_size;
  std::optional<int> patience;
  std::optional<double> learning_rate;
  std::optional<double> min_delta;
  std::optional<double> l2;
  bool global_vocab = false;  // count vocabulary/BPE over all partitions
  bool lenient = false;
  std::uint64_t seed = 1;
  std::string dataset_name;  // defaults to the corpus file stem
  std::string out_dir;
  bool force = false;

  void validate() const;
};

struct ExperimentOutput {
  ExperimentRecord record;
  TrainHistory history;
  std::vector<Prediction> predictions;
  std::size_t truncated_sequences = 0;
  std::filesystem::path out_dir;
};

// The full pipeline: load -> preprocess -> segment -> vocabulary -> encode
// -> train -> predict -> evaluate -> report, all seeded from cfg.seed.
// Artifacts (report.csv, predictions.tsv, model.txt, history.csv, vocab.txt,
// bpe.merges when trained here, meta.txt) land under cfg.out_dir; on a stage
// failure the ones already written are renamed *.incomplete and the error is
// rethrown with the stage name attached.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

// Everything the pipeline derives from the corpus before a model exists.
// Kept self-contained (dictionary and BPE model live inside) so the encoded
// partitions stay valid on their own.
struct PreparedDataset {
  std::vector<SentenceRecord> train_sentences;
  std::vector<SentenceRecord> val_sentences;
  std::vector<SentenceRecord> test_sentences;
  Vocabulary vocab;
  std::size_t max_length = 0;
  TrainData train;
  TrainData val;
  std::vector<EncodedSequence> test_inputs;
  std::size_t truncated_sequences = 0;
  std::size_t reviews = 0;
  std::size_t excluded_neutral = 0;
  std::size_t skipped_lines = 0;
  MorphDictionary dict;
  BpeModel bpe;
  bool trained_bpe = false;
};

// Stages load through encode of run_experiment, reusable by the train,
// sweep and predict subcommands.
PreparedDataset prepare_dataset(const ExperimentConfig& cfg);

// Sentence-level preprocessing shared by the subcommands: sentence split
// plus the percentile length filter.
std::vector<SentenceRecord> preprocess_sentences(
    const std::vector<Review>& reviews, double percentile);

// segment(), except a sentence whose segmentation comes back empty (a fully
// discarded BPE sentence, say) turns into a single UNK token so the encoder
// never sees an empty sequence.
std::vector<std::string> segment_or_unk(SegmentationMethod method,
                                        const std::string& text,
                                        const SegmenterDeps& deps);

}  // namespace segtr
