#include "segtr/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "segtr/errors.hpp"
#include "segtr/rng.hpp"
#include "segtr/text.hpp"

namespace fs = std::filesystem;

namespace segtr {

void ExperimentConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("experiment needs a corpus file");
  if (method_needs_dictionary(method) && dict_path.empty()) {
    throw ConfigError("method " + method_name(method) +
                      " requires a morph dictionary (--dict)");
  }
  if (arch == ArchKind::Lstm) {
    throw ConfigError(
        "lstm is a shape/memory descriptor only and cannot be trained");
  }
  if (min_frequency < 1) throw ConfigError("--min-frequency must be >= 1");
  if (percentile <= 0.0 || percentile > 1.0) {
    throw ConfigError("--percentile must lie in (0, 1]");
  }
  SplitSpec ratios = split;
  ratios.validate();
}

std::vector<SentenceRecord> preprocess_sentences(
    const std::vector<Review>& reviews, double percentile) {
  std::vector<SentenceRecord> sentences;
  for (const auto& review : reviews) {
    auto recs = split_sentences(review);
    sentences.insert(sentences.end(), std::make_move_iterator(recs.begin()),
                     std::make_move_iterator(recs.end()));
  }
  return break_long_sentences(sentences, percentile);
}

std::vector<std::string> segment_or_unk(SegmentationMethod method,
                                        const std::string& text,
                                        const SegmenterDeps& deps) {
  auto tokens = segment(method, text, deps);
  if (tokens.empty()) tokens.push_back(kUnkToken);
  return tokens;
}

namespace {

// Renames everything written so far to *.incomplete unless the run commits.
class ArtifactGuard {
 public:
  ~ArtifactGuard() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::rename(p, fs::path(p.string() + ".incomplete"), ec);
    }
  }
  void add(const fs::path& p) { written_.push_back(p); }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> written_;
  bool committed_ = false;
};

// Stage failures surface with the stage name while keeping the error class
// (the CLI maps ConfigError to a different exit code).
template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + stage + ": " + e.what());
  } catch (const ParseError& e) {
    throw InputError("stage " + stage + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError("stage " + stage + ": " + e.what());
  } catch (const StateError& e) {
    throw StateError("stage " + stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + stage + ": " + e.what());
  }
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) {
    throw ConfigError("refusing to overwrite " + p.string() +
                      " (pass --force)");
  }
}

std::ofstream open_artifact(const fs::path& p, ArtifactGuard& guard) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw StateError("cannot write artifact: " + p.string());
  guard.add(p);
  return out;
}

}  // namespace

PreparedDataset prepare_dataset(const ExperimentConfig& cfg) {
  PreparedDataset data;

  CorpusLoadResult corpus = run_stage("load", [&] {
    return load_corpus(cfg.corpus_path, cfg.scheme, cfg.lenient);
  });
  data.reviews = corpus.reviews.size();
  data.excluded_neutral = corpus.excluded_neutral;
  data.skipped_lines = corpus.skipped.size();

  run_stage("preprocess", [&] {
    auto sentences = preprocess_sentences(corpus.reviews, cfg.percentile);
    SplitSpec spec = cfg.split;
    spec.seed = derive_seed(cfg.seed, SeedStream::Split);
    const SplitResult parts = split_dataset(corpus.reviews, spec);
    // Review ids are dense (assigned at load), so a direct table routes each
    // sentence to its review's partition.
    std::vector<std::vector<SentenceRecord>*> lookup(corpus.reviews.size(),
                                                     &data.test_sentences);
    for (const auto& r : parts.train) lookup[r.id] = &data.train_sentences;
    for (const auto& r : parts.val) lookup[r.id] = &data.val_sentences;
    for (auto& s : sentences) {
      lookup[static_cast<std::size_t>(s.review_id)]->push_back(std::move(s));
    }
    return 0;
  });

  SegmenterDeps deps;
  deps.on_residue = cfg.on_residue;
  std::vector<std::vector<std::string>> train_tokens, val_tokens, test_tokens;
  run_stage("segment", [&] {
    if (!cfg.dict_path.empty()) {
      data.dict = MorphDictionary::load(cfg.dict_path);
      deps.dict = &data.dict;
    }
    if (method_is_bpe(cfg.method)) {
      if (!cfg.bpe_path.empty()) {
        data.bpe = load_bpe_model(cfg.bpe_path);
      } else {
        std::vector<std::string> words;
        const auto feed = [&](const std::vector<SentenceRecord>& part) {
          for (const auto& s : part) {
            auto w = tokenize_words(s.text);
            words.insert(words.end(), std::make_move_iterator(w.begin()),
                         std::make_move_iterator(w.end()));
          }
        };
        feed(data.train_sentences);
        if (cfg.global_vocab) {
          feed(data.val_sentences);
          feed(data.test_sentences);
        }
        const std::size_t limit =
            cfg.bpe_limit.value_or(bpe_default_limit(cfg.method));
        data.bpe = bpe_train(words, limit);
        data.trained_bpe = true;
      }
      switch (cfg.method) {
        case SegmentationMethod::Bpe1k:
          deps.bpe1k = &data.bpe;
          break;
        case SegmentationMethod::Bpe5k:
          deps.bpe5k = &data.bpe;
          break;
        default:
          deps.bpe30k = &data.bpe;
          break;
      }
    }
    const auto segment_part = [&](const std::vector<SentenceRecord>& part,
                                  std::vector<std::vector<std::string>>& out) {
      out.reserve(part.size());
      for (const auto& s : part) {
        out.push_back(segment_or_unk(cfg.method, s.text, deps));
      }
    };
    segment_part(data.train_sentences, train_tokens);
    segment_part(data.val_sentences, val_tokens);
    segment_part(data.test_sentences, test_tokens);
    return 0;
  });

  data.vocab = run_stage("vocabulary", [&] {
    std::vector<std::vector<std::string>> stream = train_tokens;
    if (cfg.global_vocab) {
      stream.insert(stream.end(), val_tokens.begin(), val_tokens.end());
      stream.insert(stream.end(), test_tokens.begin(), test_tokens.end());
    }
    return build_vocabulary(stream, cfg.min_frequency);
  });

  run_stage("encode", [&] {
    for (const auto& tokens : train_tokens) {
      data.max_length = std::max(data.max_length, tokens.size());
    }
    if (data.max_length == 0) {
      throw InputError("no training sentences to encode");
    }
    const auto encode_part = [&](const std::vector<SentenceRecord>& part,
                                 const std::vector<std::vector<std::string>>&
                                     tokens,
                                 std::vector<EncodedSequence>& xs,
                                 std::vector<int>* ys) {
      xs.reserve(part.size());
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].size() > data.max_length) ++data.truncated_sequences;
        EncodedSequence seq = encode(data.vocab, tokens[i], data.max_length);
        seq.review_id = part[i].review_id;
        seq.sentence_index = part[i].index;
        xs.push_back(std::move(seq));
        if (ys != nullptr) {
          ys->push_back(part[i].label == Polarity::Positive ? 1 : 0);
        }
      }
    };
    encode_part(data.train_sentences, train_tokens, data.train.inputs,
                &data.train.labels);
    encode_part(data.val_sentences, val_tokens, data.val.inputs,
                &data.val.labels);
    encode_part(data.test_sentences, test_tokens, data.test_inputs, nullptr);
    return 0;
  });

  return data;
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("experiment needs --out");

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  const fs::path report_path = out_dir / "report.csv";
  const fs::path predictions_path = out_dir / "predictions.tsv";
  const fs::path model_path = out_dir / "model.txt";
  const fs::path history_path = out_dir / "history.csv";
  const fs::path vocab_path = out_dir / "vocab.txt";
  const fs::path merges_path = out_dir / "bpe.merges";
  const fs::path meta_path = out_dir / "meta.txt";
  for (const auto& p : {report_path, predictions_path, model_path,
                        history_path, vocab_path, meta_path}) {
    refuse_overwrite(p, cfg.force);
  }

  ArtifactGuard guard;
  Stopwatch sw;
  sw.stamp();  // t0: raw data is about to enter preprocessing

  PreparedDataset data = prepare_dataset(cfg);

  sw.stamp();  // t1: preprocessing complete

  const ArchitectureDescriptor arch = ArchitectureDescriptor::defaults(cfg.arch);
  TrainConfig tc = TrainConfig::defaults(cfg.arch);
  tc.seed = cfg.seed;
  if (cfg.max_epochs) tc.max_epochs = *cfg.max_epochs;
  if (cfg.batch_size) tc.batch_size = *cfg.batch_size;
  if (cfg.patience) tc.patience = *cfg.patience;
  if (cfg.learning_rate) tc.learning_rate = *cfg.learning_rate;
  if (cfg.min_delta) tc.min_delta = *cfg.min_delta;
  if (cfg.l2) tc.l2 = *cfg.l2;

  TrainResult trained = run_stage("train", [&] {
    const Model model = init_model(arch, data.vocab.size(), data.max_length,
                                   derive_seed(cfg.seed, SeedStream::Init));
    TrainResult result = train(model, data.train, data.val, tc);
    {
      auto hist = open_artifact(history_path, guard);
      hist << "epoch,train_loss,val_loss,val_accuracy\n";
      char buf[160];
      for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
        const auto& s = result.history.epochs[e];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e + 1,
                      s.train_loss, s.val_loss, s.val_accuracy);
        hist << buf;
      }
    }
    if (result.diverged) {
      throw NumericError("training diverged; partial history retained");
    }
    return result;
  });

  sw.stamp();  // t2: training complete

  std::vector<Prediction> predictions = run_stage("predict", [&] {
    const auto probs = forward(trained.best, data.test_inputs, RunMode::Eval);
    std::vector<Prediction> preds;
    preds.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      Prediction p;
      p.review_id = data.test_sentences[i].review_id;
      p.sentence_index = data.test_sentences[i].index;
      p.label = data.test_sentences[i].label;
      p.score = probs[i];
      preds.push_back(p);
    }
    return preds;
  });

  sw.stamp();  // t3: evaluation complete

  ExperimentOutput output;
  output.out_dir = out_dir;
  output.history = trained.history;
  output.predictions = predictions;
  output.truncated_sequences = data.truncated_sequences;
  run_stage("report", [&] {
    ExperimentRecord rec;
    rec.no = 1;
    rec.dataset = cfg.dataset_name.empty()
                      ? fs::path(cfg.corpus_path).stem().string()
                      : cfg.dataset_name;
    rec.segmentation = method_name(cfg.method);
    rec.train_sentences = data.train_sentences.size();
    rec.validation_sentences = data.val_sentences.size();
    rec.test_sentences = data.test_sentences.size();
    rec.batch_size = tc.batch_size;
    rec.vocabulary = data.vocab.size();
    rec.max_review_length = data.max_length;
    rec.score = sentence_accuracy(predictions);
    rec.mv_score = review_accuracy(majority_vote(predictions));
    rec.epoch_count = trained.history.epoch_count;
    rec.save_epoch = trained.history.save_epoch;
    std::int64_t mem = 0;
    switch (cfg.arch) {
      case ArchKind::CnnRand:
      case ArchKind::CnnRandSimplified:
        mem = mem_cnn(static_cast<std::int64_t>(data.vocab.size()),
                      static_cast<std::int64_t>(data.max_length));
        break;
      case ArchKind::Lstm:
        mem = mem_lstm(static_cast<std::int64_t>(data.vocab.size()), 0);
        break;
      case ArchKind::MeanPool:
        // No paper formula for the baseline; its exact parameter count is
        // the closest meaningful footprint.
        mem = count_parameters(arch, data.max_length, data.vocab.size());
        break;
    }
    output.record = record_experiment(sw, rec, mem);

    data.vocab.save(vocab_path.string());
    guard.add(vocab_path);
    if (data.trained_bpe) {
      refuse_overwrite(merges_path, cfg.force);
      save_bpe_model(data.bpe, merges_path.string());
      guard.add(merges_path);
    }
    save_model(trained.best, model_path.string(),
               {{"method", method_name(cfg.method)}});
    guard.add(model_path);
    {
      auto out = open_artifact(predictions_path, guard);
      write_predictions(out, predictions);
    }
    {
      auto out = open_artifact(report_path, guard);
      write_report(out, {output.record});
    }
    {
      auto out = open_artifact(meta_path, guard);
      out << "corpus=" << cfg.corpus_path << '\n'
          << "method=" << method_name(cfg.method) << '\n'
          << "arch=" << arch_name(cfg.arch) << '\n'
          << "seed=" << cfg.seed << '\n'
          << "reviews=" << data.reviews << '\n'
          << "excluded_neutral=" << data.excluded_neutral << '\n'
          << "skipped_lines=" << data.skipped_lines << '\n'
          << "truncated_sequences=" << data.truncated_sequences << '\n'
          << "wall_clock_seconds=" << sw.total() << '\n';
    }
    return 0;
  });

  guard.commit();
  return output;
}

}  // namespace segtr
