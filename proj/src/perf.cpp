#include "segtr/perf.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "segtr/errors.hpp"

namespace segtr {

std::int64_t mem_cnn(std::int64_t vocab, std::int64_t max_len) {
  if (vocab < 0 || max_len < 0) throw InputError("mem_cnn: negative input");
  return 50 * vocab + 500 * max_len + 3121;
}

std::int64_t mem_lstm(std::int64_t vocab, std::int64_t max_len) {
  if (vocab < 0 || max_len < 0) throw InputError("mem_lstm: negative input");
  return 32 * vocab + 0 * max_len + 53301;
}

double actual_train_duration(double t_training, int epoch_count,
                             int save_epoch) {
  if (epoch_count == 0) throw InputError("actual_train_duration: EC is zero");
  if (save_epoch < 1 || save_epoch > epoch_count) {
    throw InputError("actual_train_duration: SE must satisfy 1 <= SE <= EC");
  }
  const double ec = static_cast<double>(epoch_count);
  const double se = static_cast<double>(save_epoch);
  return t_training * (1.0 - (ec - se) / ec);
}

double total_eval_duration(double t_pp, double t_eval) {
  if (t_pp < 0 || t_eval < 0) {
    throw InputError("total_eval_duration: negative duration");
  }
  return t_pp + t_eval;
}

void Stopwatch::stamp() {
  if (count_ >= 4) throw StateError("stopwatch already fully stamped");
  stamps_[count_++] = Clock::now();
}

double Stopwatch::seconds_between(int a, int b) const {
  if (count_ <= b) throw StateError("stopwatch not fully stamped yet");
  return std::chrono::duration<double>(stamps_[b] - stamps_[a]).count();
}

double Stopwatch::t_pp() const { return seconds_between(0, 1); }
double Stopwatch::t_training() const { return seconds_between(1, 2); }
double Stopwatch::t_eval() const { return seconds_between(2, 3); }
double Stopwatch::total() const { return seconds_between(0, 3); }

void ExperimentRecord::validate() const {
  if (t_pp < 0 || t_training < 0 || t_eval < 0) {
    throw InputError("experiment record: negative duration");
  }
  if (save_epoch > epoch_count) {
    throw InputError("experiment record: SE exceeds EC");
  }
  if (vocabulary < 2) {
    throw InputError("experiment record: vocabulary below PAD+UNK");
  }
  if (score < 0 || score > 1 || mv_score < 0 || mv_score > 1) {
    throw InputError("experiment record: scores must lie in [0, 1]");
  }
}

ExperimentRecord record_experiment(const Stopwatch& sw,
                                   ExperimentRecord partial,
                                   std::int64_t mem_estimate) {
  if (!sw.complete()) {
    throw StateError("record_experiment: stopwatch is missing stamps");
  }
  partial.t_pp = sw.t_pp();
  partial.t_training = sw.t_training();
  partial.t_eval = sw.t_eval();
  partial.t_atd =
      actual_train_duration(partial.t_training, partial.epoch_count,
                            partial.save_epoch);
  partial.t_te = total_eval_duration(partial.t_pp, partial.t_eval);
  partial.mem_estimate = mem_estimate;
  partial.validate();
  return partial;
}

namespace {

std::string render_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string report_row(const ExperimentRecord& r) {
  std::string out;
  out += std::to_string(r.no) + ',' + r.dataset + ',' + r.segmentation + ',';
  out += std::to_string(r.train_sentences) + ',' +
         std::to_string(r.validation_sentences) + ',' +
         std::to_string(r.test_sentences) + ',';
  out += std::to_string(r.batch_size) + ',' + std::to_string(r.vocabulary) +
         ',' + std::to_string(r.max_review_length) + ',';
  out += render_double(r.t_pp) + ',' + render_double(r.t_training) + ',' +
         render_double(r.t_eval) + ',';
  out += render_double(r.score) + ',' + render_double(r.mv_score) + ',';
  out += std::to_string(r.epoch_count) + ',' + std::to_string(r.save_epoch) +
         ',';
  out += render_double(r.t_atd) + ',' + render_double(r.t_te) + ',' +
         std::to_string(r.mem_estimate);
  return out;
}

void write_report(std::ostream& os,
                  const std::vector<ExperimentRecord>& records) {
  os << kReportHeader << '\n';
  for (const auto& r : records) os << report_row(r) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_num(const std::string& s, const std::string& path, long line_no) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(path, line_no, "bad numeric field: " + s);
  }
  return v;
}

}  // namespace

std::vector<ExperimentRecord> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open report file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty report");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportHeader) {
    throw ParseError(path, 1, "unexpected report header");
  }
  std::vector<ExperimentRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 19) {
      throw ParseError(path, line_no, "expected 19 columns");
    }
    ExperimentRecord r;
    r.no = parse_num<int>(f[0], path, line_no);
    r.dataset = f[1];
    r.segmentation = f[2];
    r.train_sentences = parse_num<std::size_t>(f[3], path, line_no);
    r.validation_sentences = parse_num<std::size_t>(f[4], path, line_no);
    r.test_sentences = parse_num<std::size_t>(f[5], path, line_no);
    r.batch_size = parse_num<int>(f[6], path, line_no);
    r.vocabulary = parse_num<std::size_t>(f[7], path, line_no);
    r.max_review_length = parse_num<std::size_t>(f[8], path, line_no);
    r.t_pp = parse_num<double>(f[9], path, line_no);
    r.t_training = parse_num<double>(f[10], path, line_no);
    r.t_eval = parse_num<double>(f[11], path, line_no);
    r.score = parse_num<double>(f[12], path, line_no);
    r.mv_score = parse_num<double>(f[13], path, line_no);
    r.epoch_count = parse_num<int>(f[14], path, line_no);
    r.save_epoch = parse_num<int>(f[15], path, line_no);
    r.t_atd = parse_num<double>(f[16], path, line_no);
    r.t_te = parse_num<double>(f[17], path, line_no);
    r.mem_estimate = parse_num<std::int64_t>(f[18], path, line_no);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace segtr
