#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "segtr/errors.hpp"
#include "segtr/experiment.hpp"
#include "segtr/syllable.hpp"
#include "segtr/text.hpp"

namespace fs = std::filesystem;
using namespace segtr;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SEGTR_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw ConfigError("SEGTR_SEED is not a number: " + std::string(env));
    }
  }
  return 1;
}

std::optional<RatingScheme> parse_scheme(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "movie") return RatingScheme::MovieReviews;
  if (s == "product") return RatingScheme::ProductReviews;
  throw ConfigError("unknown rating scheme: " + s + " (movie|product)");
}

SegmentationMethod require_method(const std::string& s) {
  const auto m = parse_method(s);
  if (!m) throw ConfigError("unknown segmentation method: " + s);
  return *m;
}

ArchKind require_arch(const std::string& s) {
  const auto a = parse_arch(s);
  if (!a) throw ConfigError("unknown architecture: " + s);
  return *a;
}

void refuse_overwrite(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) {
    throw ConfigError("refusing to overwrite " + p.string() +
                      " (pass --force)");
  }
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (...) {
      throw ConfigError("bad number in list: " + part);
    }
  }
  return out;
}

std::vector<std::vector<int>> parse_filter_sets(const std::string& spec) {
  std::vector<std::vector<int>> out;
  std::istringstream ss(spec);
  std::string set;
  while (std::getline(ss, set, ';')) {
    std::vector<int> fs;
    std::istringstream inner(set);
    std::string part;
    while (std::getline(inner, part, ',')) {
      try {
        fs.push_back(std::stoi(part));
      } catch (...) {
        throw ConfigError("bad filter size: " + part);
      }
    }
    if (!fs.empty()) out.push_back(std::move(fs));
  }
  return out;
}

// Shared flags for every command that loads a labeled corpus.
struct CorpusFlags {
  std::string path;
  std::string scheme;
  bool lenient = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", path, "corpus file, label<TAB>text per line")
        ->required();
    cmd->add_option("--scheme", scheme,
                    "rating scheme for r:<rating> labels (movie|product)");
    cmd->add_flag("--lenient", lenient,
                  "skip unparseable lines instead of failing");
  }

  CorpusLoadResult load() const {
    auto result = load_corpus(path, parse_scheme(scheme), lenient);
    for (const auto& msg : result.skipped) {
      std::cerr << "skipped " << path << ":" << msg << "\n";
    }
    return result;
  }
};

int cmd_stats(const CorpusFlags& corpus, bool csv) {
  const auto loaded = corpus.load();
  std::cout << format_stats(compute_stats(loaded.reviews), csv);
  return 0;
}

int cmd_split(const CorpusFlags& corpus, const std::string& out_dir,
              const std::string& ratios, std::uint64_t seed, bool force) {
  SplitSpec spec;
  const auto parts = parse_doubles(ratios);
  if (parts.size() != 3) {
    throw ConfigError("--ratios expects three comma-separated fractions");
  }
  spec.train_ratio = parts[0];
  spec.val_ratio = parts[1];
  spec.test_ratio = parts[2];
  spec.seed = derive_seed(seed, SeedStream::Split);
  spec.validate();

  const auto loaded = corpus.load();
  const auto split = split_dataset(loaded.reviews, spec);
  fs::create_directories(out_dir);
  const auto write = [&](const char* name, const std::vector<Review>& part) {
    const fs::path p = fs::path(out_dir) / name;
    refuse_overwrite(p, force);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw StateError("cannot write " + p.string());
    write_corpus(out, part);
  };
  write("train.tsv", split.train);
  write("val.tsv", split.val);
  write("test.tsv", split.test);
  std::cout << "train=" << split.train.size() << " val=" << split.val.size()
            << " test=" << split.test.size() << "\n";
  return 0;
}

int cmd_segment(const std::string& method_str, const std::string& dict_path,
                const std::string& bpe_path, const std::string& in_path,
                const std::string& out_path, const std::string& residue,
                bool check_form, bool force) {
  const auto method = require_method(method_str);
  if (check_form && method != SegmentationMethod::Syllable) {
    throw ConfigError("--check-form only applies to --method syllable");
  }

  MorphDictionary dict;
  BpeModel bpe;
  SegmenterDeps deps;
  if (residue == "unk") {
    deps.on_residue = BpeResidue::Unk;
  } else if (residue != "discard") {
    throw ConfigError("--on-residue must be discard or unk");
  }
  if (!dict_path.empty()) {
    dict = MorphDictionary::load(dict_path);
    deps.dict = &dict;
  }
  if (!bpe_path.empty()) {
    bpe = load_bpe_model(bpe_path);
    deps.bpe1k = deps.bpe5k = deps.bpe30k = &bpe;
  }

  std::ifstream file_in;
  if (!in_path.empty()) {
    file_in.open(in_path);
    if (!file_in) throw ConfigError("cannot open input file: " + in_path);
  }
  std::istream& in = in_path.empty() ? std::cin : file_in;

  std::ofstream file_out;
  if (!out_path.empty()) {
    refuse_overwrite(out_path, force);
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw ConfigError("cannot open output file: " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file_out;

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = segment(method, line, deps);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out << ' ';
      out << tokens[i];
      if (check_form) out << '/' << syllable_form(tokens[i]);
    }
    out << '\n';
  }
  return 0;
}

int cmd_bpe_train(const std::string& in_path, const std::string& out_path,
                  std::size_t limit, bool labeled, bool force) {
  std::vector<std::string> words;
  if (labeled) {
    const auto loaded = load_corpus(in_path, std::nullopt, false);
    for (const auto& r : loaded.reviews) {
      auto w = tokenize_words(r.text);
      words.insert(words.end(), w.begin(), w.end());
    }
  } else {
    std::ifstream in(in_path);
    if (!in) throw ConfigError("cannot open input file: " + in_path);
    std::string line;
    while (std::getline(in, line)) {
      auto w = tokenize_words(line);
      words.insert(words.end(), w.begin(), w.end());
    }
  }
  const auto model = bpe_train(words, limit);
  refuse_overwrite(out_path, force);
  save_bpe_model(model, out_path);
  std::cout << "tokens=" << model.tokens.size()
            << " merges=" << model.merges.size() << "\n";
  return 0;
}

ExperimentConfig build_experiment_config(
    const CorpusFlags& corpus, const std::string& method,
    const std::string& arch, const std::string& dict, const std::string& bpe,
    std::optional<std::size_t> bpe_limit, int min_frequency, double percentile,
    const std::string& ratios, const std::string& residue,
    std::optional<int> max_epochs, std::optional<int> batch_size,
    std::optional<int> patience, std::optional<double> lr,
    std::optional<double> min_delta, std::optional<double> l2,
    bool global_vocab, std::uint64_t seed, const std::string& dataset,
    const std::string& out_dir, bool force) {
  ExperimentConfig cfg;
  cfg.corpus_path = corpus.path;
  cfg.scheme = parse_scheme(corpus.scheme);
  cfg.lenient = corpus.lenient;
  cfg.method = require_method(method);
  cfg.arch = require_arch(arch);
  cfg.dict_path = dict;
  cfg.bpe_path = bpe;
  cfg.bpe_limit = bpe_limit;
  cfg.min_frequency = min_frequency;
  cfg.percentile = percentile;
  if (residue == "unk") {
    cfg.on_residue = BpeResidue::Unk;
  } else if (residue != "discard") {
    throw ConfigError("--on-residue must be discard or unk");
  }
  const auto parts = parse_doubles(ratios);
  if (parts.size() != 3) {
    throw ConfigError("--ratios expects three comma-separated fractions");
  }
  cfg.split.train_ratio = parts[0];
  cfg.split.val_ratio = parts[1];
  cfg.split.test_ratio = parts[2];
  cfg.max_epochs = max_epochs;
  cfg.batch_size = batch_size;
  cfg.patience = patience;
  cfg.learning_rate = lr;
  cfg.min_delta = min_delta;
  cfg.l2 = l2;
  cfg.global_vocab = global_vocab;
  cfg.seed = seed;
  cfg.dataset_name = dataset;
  cfg.out_dir = out_dir;
  cfg.force = force;
  return cfg;
}

int cmd_experiment(const std::vector<std::string>& methods,
                   ExperimentConfig base, int jobs) {
  if (methods.size() == 1) {
    base.method = require_method(methods[0]);
    const auto output = run_experiment(base);
    std::cout << kReportHeader << "\n" << report_row(output.record) << "\n";
    return 0;
  }

  // Several methods: isolated subdirectories, one combined report.
  const fs::path root(base.out_dir);
  fs::create_directories(root);
  const fs::path combined = root / "report.csv";
  refuse_overwrite(combined, base.force);

  std::vector<ExperimentConfig> configs;
  for (const auto& m : methods) {
    ExperimentConfig cfg = base;
    cfg.method = require_method(m);
    cfg.out_dir = (root / m).string();
    configs.push_back(std::move(cfg));
  }
  std::vector<ExperimentRecord> records(configs.size());
  std::vector<std::exception_ptr> failures(configs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        records[i] = run_experiment(configs[i]).record;
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (failures[i]) std::rethrow_exception(failures[i]);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].no = static_cast<int>(i + 1);
  }
  std::ofstream out(combined, std::ios::binary);
  if (!out) throw StateError("cannot write " + combined.string());
  write_report(out, records);
  std::cout << kReportHeader << "\n";
  for (const auto& r : records) std::cout << report_row(r) << "\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.out_dir.empty()) throw ConfigError("train needs --out");
  fs::create_directories(cfg.out_dir);
  const fs::path model_path = fs::path(cfg.out_dir) / "model.txt";
  const fs::path vocab_path = fs::path(cfg.out_dir) / "vocab.txt";
  const fs::path history_path = fs::path(cfg.out_dir) / "history.csv";
  const fs::path merges_path = fs::path(cfg.out_dir) / "bpe.merges";
  for (const auto& p : {model_path, vocab_path, history_path}) {
    refuse_overwrite(p, cfg.force);
  }

  PreparedDataset data = prepare_dataset(cfg);
  const auto arch = ArchitectureDescriptor::defaults(cfg.arch);
  TrainConfig tc = TrainConfig::defaults(cfg.arch);
  tc.seed = cfg.seed;
  if (cfg.max_epochs) tc.max_epochs = *cfg.max_epochs;
  if (cfg.batch_size) tc.batch_size = *cfg.batch_size;
  if (cfg.patience) tc.patience = *cfg.patience;
  if (cfg.learning_rate) tc.learning_rate = *cfg.learning_rate;
  if (cfg.min_delta) tc.min_delta = *cfg.min_delta;
  if (cfg.l2) tc.l2 = *cfg.l2;

  const Model model = init_model(arch, data.vocab.size(), data.max_length,
                                 derive_seed(cfg.seed, SeedStream::Init));
  const TrainResult result = train(model, data.train, data.val, tc);

  data.vocab.save(vocab_path.string());
  if (data.trained_bpe) {
    refuse_overwrite(merges_path, cfg.force);
    save_bpe_model(data.bpe, merges_path.string());
  }
  save_model(result.best, model_path.string(),
             {{"method", method_name(cfg.method)}});
  {
    std::ofstream hist(history_path, std::ios::binary);
    hist << "epoch,train_loss,val_loss,val_accuracy\n";
    char buf[160];
    for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
      const auto& s = result.history.epochs[e];
      std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e + 1,
                    s.train_loss, s.val_loss, s.val_accuracy);
      hist << buf;
    }
  }
  if (result.diverged) throw NumericError("training diverged");
  const auto& best = result.history.epochs[result.history.save_epoch - 1];
  std::cout << "epochs=" << result.history.epoch_count
            << " save_epoch=" << result.history.save_epoch
            << " val_accuracy=" << best.val_accuracy << "\n";
  return 0;
}

int cmd_predict(const CorpusFlags& corpus, const std::string& model_path,
                const std::string& vocab_path, const std::string& dict_path,
                const std::string& bpe_path, const std::string& method_str,
                double percentile, const std::string& out_path,
                const std::string& histogram_path, bool force) {
  const LoadedModel loaded = load_model(model_path);
  const Vocabulary vocab = Vocabulary::load(vocab_path);
  if (vocab.size() != loaded.model.vocab_size) {
    throw ConfigError("vocab file size does not match the model's v=");
  }

  SegmentationMethod method = SegmentationMethod::WordToken;
  if (!method_str.empty()) {
    method = require_method(method_str);
  } else {
    const auto it = loaded.extra.find("method");
    if (it == loaded.extra.end()) {
      throw ConfigError("model file carries no method; pass --method");
    }
    method = require_method(it->second);
  }

  MorphDictionary dict;
  BpeModel bpe;
  SegmenterDeps deps;
  if (!dict_path.empty()) {
    dict = MorphDictionary::load(dict_path);
    deps.dict = &dict;
  }
  if (!bpe_path.empty()) {
    bpe = load_bpe_model(bpe_path);
    deps.bpe1k = deps.bpe5k = deps.bpe30k = &bpe;
  }

  const auto data = corpus.load();
  const auto sentences = preprocess_sentences(data.reviews, percentile);
  std::vector<EncodedSequence> inputs;
  inputs.reserve(sentences.size());
  for (const auto& s : sentences) {
    EncodedSequence seq = encode(vocab, segment_or_unk(method, s.text, deps),
                                 loaded.model.max_length);
    seq.review_id = s.review_id;
    seq.sentence_index = s.index;
    inputs.push_back(std::move(seq));
  }
  const auto probs = forward(loaded.model, inputs, RunMode::Eval);
  std::vector<Prediction> preds;
  preds.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    preds.push_back({sentences[i].review_id, sentences[i].index,
                     sentences[i].label, probs[i]});
  }

  if (!out_path.empty()) {
    refuse_overwrite(out_path, force);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw StateError("cannot write " + out_path);
    write_predictions(out, preds);
  } else {
    write_predictions(std::cout, preds);
  }
  if (!histogram_path.empty()) {
    refuse_overwrite(histogram_path, force);
    std::ofstream out(histogram_path, std::ios::binary);
    if (!out) throw StateError("cannot write " + histogram_path);
    write_histogram_csv(out, histogram(preds));
  }
  if (!preds.empty()) {
    const double acc = sentence_accuracy(preds);
    const double mv = review_accuracy(majority_vote(preds));
    std::cerr << "sentence_accuracy=" << acc << " review_accuracy=" << mv
              << " overlap=" << overlap_ratio(acc) << "\n";
  }
  return 0;
}

int cmd_sweep(const ExperimentConfig& base, const std::string& filters,
              const std::string& dropouts, const std::string& l2s,
              std::optional<int> fps, std::optional<int> embedding,
              const std::string& out_path, bool force) {
  base.validate();
  SweepGrid grid = SweepGrid::paper_default();
  if (!filters.empty()) grid.filter_size_sets = parse_filter_sets(filters);
  if (!dropouts.empty()) grid.dropouts = parse_doubles(dropouts);
  if (!l2s.empty()) grid.l2s = parse_doubles(l2s);

  PreparedDataset data = prepare_dataset(base);

  // The statistic that motivated the paper-default filter sets.
  std::size_t chars = 0, words = 0;
  for (const auto& s : data.train_sentences) {
    for (const auto& w : tokenize_words(s.text)) {
      chars += split_graphemes(w).size();
      ++words;
    }
  }
  if (words > 0) {
    std::cerr << "avg_chars_per_word="
              << static_cast<double>(chars) / static_cast<double>(words)
              << "\n";
  }

  ArchitectureDescriptor arch = ArchitectureDescriptor::defaults(base.arch);
  if (fps) arch.filters_per_size = *fps;
  if (embedding) arch.embedding_dim = *embedding;
  TrainConfig tc = TrainConfig::defaults(base.arch);
  tc.seed = base.seed;
  if (base.max_epochs) tc.max_epochs = *base.max_epochs;
  if (base.batch_size) tc.batch_size = *base.batch_size;
  if (base.patience) tc.patience = *base.patience;
  if (base.learning_rate) tc.learning_rate = *base.learning_rate;
  if (base.min_delta) tc.min_delta = *base.min_delta;

  const SweepResult result =
      hyperparameter_sweep(arch, data.train, data.val, tc, data.vocab.size(),
                           grid);
  for (const auto& n : result.notices) std::cerr << n << "\n";
  const std::string csv = sweep_csv(result);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    refuse_overwrite(out_path, force);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw StateError("cannot write " + out_path);
    out << csv;
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_path, bool force) {
  std::vector<ExperimentRecord> all;
  for (const auto& path : inputs) {
    for (auto& r : read_report(path)) {
      all.push_back(std::move(r));
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& r = all[i];
    r.no = static_cast<int>(i + 1);
    // Derived columns are recomputed so a merged report stays consistent.
    r.t_atd = actual_train_duration(r.t_training, r.epoch_count, r.save_epoch);
    r.t_te = total_eval_duration(r.t_pp, r.t_eval);
  }
  if (out_path.empty()) {
    write_report(std::cout, all);
  } else {
    refuse_overwrite(out_path, force);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw StateError("cannot write " + out_path);
    write_report(out, all);
  }
  return 0;
}

int cmd_clt_check(std::size_t n, std::size_t trials, std::uint64_t seed,
                  const std::string& population_path,
                  std::size_t population_size) {
  std::vector<double> population;
  if (!population_path.empty()) {
    std::ifstream in(population_path);
    if (!in) throw ConfigError("cannot open population: " + population_path);
    double v = 0;
    while (in >> v) population.push_back(v);
  } else {
    if (population_size < 2) {
      throw ConfigError("--population-size must be at least 2");
    }
    population.reserve(population_size);
    for (std::size_t i = 0; i < population_size; ++i) {
      population.push_back(static_cast<double>(i) /
                           static_cast<double>(population_size - 1));
    }
  }
  const auto result =
      clt_check(population, n, trials, derive_seed(seed, SeedStream::Clt));
  std::cout << "sigma_population\t" << result.sigma_population << "\n"
            << "sigma_empirical\t" << result.sigma_empirical << "\n"
            << "sigma_predicted\t" << result.sigma_predicted << "\n"
            << "mean_population\t" << result.mean_population << "\n"
            << "mean_of_means\t" << result.mean_of_means << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segtr: text segmentation methods and desk-scale sentiment "
               "experiments for Turkish reviews"};
  app.require_subcommand(1);
  // key=value manifest files; command-line flags take precedence.
  app.set_config("--config", "", "read options from a key=value file");

  try {
    const std::uint64_t seed_fallback = default_seed();

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics");
    CorpusFlags stats_corpus;
    stats_corpus.attach(stats);
    bool stats_csv = false;
    stats->add_flag("--csv", stats_csv, "emit a single CSV row");

    // split
    auto* split = app.add_subcommand("split", "train/val/test split");
    CorpusFlags split_corpus;
    split_corpus.attach(split);
    std::string split_out, split_ratios = "0.8,0.1,0.1";
    std::uint64_t split_seed = seed_fallback;
    bool split_force = false;
    split->add_option("--out", split_out, "output directory")->required();
    split->add_option("--ratios", split_ratios, "train,val,test fractions");
    split->add_option("--seed", split_seed, "shuffle seed");
    split->add_flag("--force", split_force, "overwrite existing outputs");

    // segment
    auto* seg = app.add_subcommand("segment", "segment text, one sentence "
                                              "per line");
    std::string seg_method, seg_dict, seg_bpe, seg_in, seg_out;
    std::string seg_residue = "discard";
    bool seg_check_form = false, seg_force = false;
    seg->add_option("--method", seg_method, "segmentation method tag")
        ->required();
    seg->add_option("--dict", seg_dict, "morph dictionary TSV");
    seg->add_option("--bpe", seg_bpe, "trained BPE merges file");
    seg->add_option("--in", seg_in, "input file (default stdin)");
    seg->add_option("--out", seg_out, "output file (default stdout)");
    seg->add_option("--on-residue", seg_residue,
                    "BPE residue policy: discard|unk");
    seg->add_flag("--check-form", seg_check_form,
                  "print each syllable's matched pattern");
    seg->add_flag("--force", seg_force, "overwrite existing outputs");

    // bpe-train
    auto* bpet = app.add_subcommand("bpe-train", "train a BPE merge list");
    std::string bpet_in, bpet_out;
    std::size_t bpet_limit = 0;
    bool bpet_labeled = false, bpet_force = false;
    bpet->add_option("--in", bpet_in, "input text file")->required();
    bpet->add_option("--out", bpet_out, "merges file to write")->required();
    bpet->add_option("--limit", bpet_limit, "vocabulary target")->required();
    bpet->add_flag("--labeled", bpet_labeled,
                   "input is a label<TAB>text corpus");
    bpet->add_flag("--force", bpet_force, "overwrite existing outputs");

    // common experiment-ish flags
    const auto add_pipeline_flags =
        [&](CLI::App* cmd, CorpusFlags& corpus, std::string& arch,
            std::string& dict, std::string& bpe,
            std::optional<std::size_t>& bpe_limit, int& min_freq,
            double& percentile, std::string& ratios, std::string& residue,
            std::optional<int>& max_epochs, std::optional<int>& batch,
            std::optional<int>& patience, std::optional<double>& lr,
            std::optional<double>& min_delta, std::optional<double>& l2,
            bool& global_vocab, std::uint64_t& seed, std::string& dataset,
            std::string& out_dir, bool& force, bool out_required) {
          corpus.attach(cmd);
          cmd->add_option("--arch", arch,
                          "architecture: mean-pool|cnn-rand-simplified|"
                          "cnn-rand");
          cmd->add_option("--dict", dict, "morph dictionary TSV");
          cmd->add_option("--bpe", bpe, "trained BPE merges file");
          cmd->add_option("--bpe-limit", bpe_limit,
                          "train BPE here with this vocabulary target");
          cmd->add_option("--min-frequency", min_freq,
                          "vocabulary frequency cutoff");
          cmd->add_option("--percentile", percentile,
                          "long-sentence percentile cutoff");
          cmd->add_option("--ratios", ratios, "train,val,test fractions");
          cmd->add_option("--on-residue", residue,
                          "BPE residue policy: discard|unk");
          cmd->add_option("--max-epochs", max_epochs, "epoch cap");
          cmd->add_option("--batch-size", batch, "mini-batch size");
          cmd->add_option("--patience", patience, "early stopping patience");
          cmd->add_option("--lr", lr, "learning rate");
          cmd->add_option("--min-delta", min_delta,
                          "early stopping minimum delta");
          cmd->add_option("--l2", l2, "l2 penalty on dense weights");
          cmd->add_flag("--global-vocab", global_vocab,
                        "build vocabulary (and BPE) over all partitions");
          cmd->add_option("--seed", seed, "root seed (SEGTR_SEED fallback)");
          cmd->add_option("--dataset", dataset, "dataset name for the report");
          auto* out = cmd->add_option("--out", out_dir, "output directory");
          if (out_required) out->required();
          cmd->add_flag("--force", force, "overwrite existing outputs");
        };

    // experiment
    auto* exp = app.add_subcommand("experiment", "end-to-end seeded run");
    CorpusFlags exp_corpus;
    std::string exp_methods, exp_arch = "mean-pool", exp_dict, exp_bpe;
    std::optional<std::size_t> exp_bpe_limit;
    int exp_min_freq = 3;
    double exp_percentile = 0.995;
    std::string exp_ratios = "0.8,0.1,0.1", exp_residue = "discard";
    std::optional<int> exp_epochs, exp_batch, exp_patience;
    std::optional<double> exp_lr, exp_min_delta, exp_l2;
    bool exp_global = false, exp_force = false;
    std::uint64_t exp_seed = seed_fallback;
    std::string exp_dataset, exp_out;
    int exp_jobs = 1;
    exp->add_option("--method", exp_methods,
                    "method tag, or a comma-separated list")
        ->required();
    exp->add_option("--jobs", exp_jobs, "parallel runs for method lists");
    add_pipeline_flags(exp, exp_corpus, exp_arch, exp_dict, exp_bpe,
                       exp_bpe_limit, exp_min_freq, exp_percentile,
                       exp_ratios, exp_residue, exp_epochs, exp_batch,
                       exp_patience, exp_lr, exp_min_delta, exp_l2,
                       exp_global, exp_seed, exp_dataset, exp_out, exp_force,
                       /*out_required=*/true);

    // train
    auto* trn = app.add_subcommand("train", "train a classifier and save it");
    CorpusFlags trn_corpus;
    std::string trn_method, trn_arch = "mean-pool", trn_dict, trn_bpe;
    std::optional<std::size_t> trn_bpe_limit;
    int trn_min_freq = 3;
    double trn_percentile = 0.995;
    std::string trn_ratios = "0.8,0.1,0.1", trn_residue = "discard";
    std::optional<int> trn_epochs, trn_batch, trn_patience;
    std::optional<double> trn_lr, trn_min_delta, trn_l2;
    bool trn_global = false, trn_force = false;
    std::uint64_t trn_seed = seed_fallback;
    std::string trn_dataset, trn_out;
    trn->add_option("--method", trn_method, "method tag")->required();
    add_pipeline_flags(trn, trn_corpus, trn_arch, trn_dict, trn_bpe,
                       trn_bpe_limit, trn_min_freq, trn_percentile,
                       trn_ratios, trn_residue, trn_epochs, trn_batch,
                       trn_patience, trn_lr, trn_min_delta, trn_l2,
                       trn_global, trn_seed, trn_dataset, trn_out, trn_force,
                       /*out_required=*/true);

    // predict
    auto* prd = app.add_subcommand("predict", "score a corpus with a saved "
                                              "model");
    CorpusFlags prd_corpus;
    std::string prd_model, prd_vocab, prd_dict, prd_bpe, prd_method;
    std::string prd_out, prd_hist;
    double prd_percentile = 0.995;
    bool prd_force = false;
    prd_corpus.attach(prd);
    prd->add_option("--model", prd_model, "model file")->required();
    prd->add_option("--vocab", prd_vocab, "vocab file")->required();
    prd->add_option("--dict", prd_dict, "morph dictionary TSV");
    prd->add_option("--bpe", prd_bpe, "trained BPE merges file");
    prd->add_option("--method", prd_method,
                    "override the method stored in the model file");
    prd->add_option("--percentile", prd_percentile,
                    "long-sentence percentile cutoff");
    prd->add_option("--out", prd_out, "predictions TSV (default stdout)");
    prd->add_option("--histogram", prd_hist, "also write a histogram CSV");
    prd->add_flag("--force", prd_force, "overwrite existing outputs");

    // sweep
    auto* swp = app.add_subcommand("sweep", "hyper-parameter grid search");
    CorpusFlags swp_corpus;
    std::string swp_method, swp_arch = "cnn-rand", swp_dict, swp_bpe;
    std::optional<std::size_t> swp_bpe_limit;
    int swp_min_freq = 3;
    double swp_percentile = 0.995;
    std::string swp_ratios = "0.8,0.1,0.1", swp_residue = "discard";
    std::optional<int> swp_epochs, swp_batch, swp_patience;
    std::optional<double> swp_lr, swp_min_delta, swp_l2;
    bool swp_global = false, swp_force = false;
    std::uint64_t swp_seed = seed_fallback;
    std::string swp_dataset, swp_out_dir;
    std::string swp_filters, swp_dropouts, swp_l2s, swp_csv;
    std::optional<int> swp_fps, swp_embedding;
    swp->add_option("--method", swp_method, "method tag")->required();
    add_pipeline_flags(swp, swp_corpus, swp_arch, swp_dict, swp_bpe,
                       swp_bpe_limit, swp_min_freq, swp_percentile,
                       swp_ratios, swp_residue, swp_epochs, swp_batch,
                       swp_patience, swp_lr, swp_min_delta, swp_l2,
                       swp_global, swp_seed, swp_dataset, swp_out_dir,
                       swp_force, /*out_required=*/false);
    swp->add_option("--grid-filters", swp_filters,
                    "filter size sets, e.g. \"3,4,5;10,16,22\"");
    swp->add_option("--grid-dropout", swp_dropouts, "dropout values");
    swp->add_option("--grid-l2", swp_l2s, "l2 values");
    swp->add_option("--filters-per-size", swp_fps,
                    "override filters per size (desk-scale runs)");
    swp->add_option("--embedding-dim", swp_embedding,
                    "override embedding size (desk-scale runs)");
    swp->add_option("--csv", swp_csv, "sweep CSV path (default stdout)");

    // report
    auto* rpt = app.add_subcommand("report", "merge and renumber report "
                                             "CSVs");
    std::vector<std::string> rpt_inputs;
    std::string rpt_out;
    bool rpt_force = false;
    rpt->add_option("inputs", rpt_inputs, "report.csv files")->required();
    rpt->add_option("--out", rpt_out, "combined CSV (default stdout)");
    rpt->add_flag("--force", rpt_force, "overwrite existing outputs");

    // clt-check
    auto* clt = app.add_subcommand("clt-check", "central-limit-theorem "
                                                "verification");
    std::size_t clt_n = 25, clt_trials = 10000, clt_pop_size = 100001;
    std::uint64_t clt_seed = seed_fallback;
    std::string clt_population;
    clt->add_option("--n", clt_n, "group size");
    clt->add_option("--trials", clt_trials, "number of sampled groups");
    clt->add_option("--seed", clt_seed, "sampling seed");
    clt->add_option("--population", clt_population,
                    "population file, one value per line");
    clt->add_option("--population-size", clt_pop_size,
                    "synthetic uniform grid size when no file is given");

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;  // bad usage is a configuration error
    }

    if (stats->parsed()) return cmd_stats(stats_corpus, stats_csv);
    if (split->parsed()) {
      return cmd_split(split_corpus, split_out, split_ratios, split_seed,
                       split_force);
    }
    if (seg->parsed()) {
      return cmd_segment(seg_method, seg_dict, seg_bpe, seg_in, seg_out,
                         seg_residue, seg_check_form, seg_force);
    }
    if (bpet->parsed()) {
      return cmd_bpe_train(bpet_in, bpet_out, bpet_limit, bpet_labeled,
                           bpet_force);
    }
    if (exp->parsed()) {
      std::vector<std::string> methods;
      std::istringstream ss(exp_methods);
      std::string m;
      while (std::getline(ss, m, ',')) {
        if (!m.empty()) methods.push_back(m);
      }
      if (methods.empty()) throw ConfigError("--method list is empty");
      auto cfg = build_experiment_config(
          exp_corpus, methods[0], exp_arch, exp_dict, exp_bpe, exp_bpe_limit,
          exp_min_freq, exp_percentile, exp_ratios, exp_residue, exp_epochs,
          exp_batch, exp_patience, exp_lr, exp_min_delta, exp_l2, exp_global,
          exp_seed, exp_dataset, exp_out, exp_force);
      return cmd_experiment(methods, cfg, exp_jobs);
    }
    if (trn->parsed()) {
      const auto cfg = build_experiment_config(
          trn_corpus, trn_method, trn_arch, trn_dict, trn_bpe, trn_bpe_limit,
          trn_min_freq, trn_percentile, trn_ratios, trn_residue, trn_epochs,
          trn_batch, trn_patience, trn_lr, trn_min_delta, trn_l2, trn_global,
          trn_seed, trn_dataset, trn_out, trn_force);
      return cmd_train(cfg);
    }
    if (prd->parsed()) {
      return cmd_predict(prd_corpus, prd_model, prd_vocab, prd_dict, prd_bpe,
                         prd_method, prd_percentile, prd_out, prd_hist,
                         prd_force);
    }
    if (swp->parsed()) {
      auto cfg = build_experiment_config(
          swp_corpus, swp_method, swp_arch, swp_dict, swp_bpe, swp_bpe_limit,
          swp_min_freq, swp_percentile, swp_ratios, swp_residue, swp_epochs,
          swp_batch, swp_patience, swp_lr, swp_min_delta, swp_l2, swp_global,
          swp_seed, swp_dataset, swp_out_dir, swp_force);
      return cmd_sweep(cfg, swp_filters, swp_dropouts, swp_l2s, swp_fps,
                       swp_embedding, swp_csv, swp_force);
    }
    if (rpt->parsed()) return cmd_report(rpt_inputs, rpt_out, rpt_force);
    if (clt->parsed()) {
      return cmd_clt_check(clt_n, clt_trials, clt_seed, clt_population,
                           clt_pop_size);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
