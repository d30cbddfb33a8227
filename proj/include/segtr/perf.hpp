#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace segtr {

// Memory footprint formulas, reported in the unit-free form they are
// defined in: 50v + 500l + 3121 for the CNN and 32v + 53301 for the LSTM
// (the LSTM does not depend on the input length).
std::int64_t mem_cnn(std::int64_t vocab, std::int64_t max_len);
std::int64_t mem_lstm(std::int64_t vocab, std::int64_t max_len);

// t_training * SE / EC: the training time spent up to the best model.
double actual_train_duration(double t_training, int epoch_count,
                             int save_epoch);

// t_pp + t_eval: what a deployed classifier pays per evaluation pass.
double total_eval_duration(double t_pp, double t_eval);

// Four ordered monotonic stamps: start, preprocessing done, training done,
// evaluation done.
class Stopwatch {
 public:
  void stamp();  // call exactly four times, in order
  bool complete() const { return count_ == 4; }

  double t_pp() const;        // t1 - t0
  double t_training() const;  // t2 - t1
  double t_eval() const;      // t3 - t2
  double total() const;       // t3 - t0

 private:
  using Clock = std::chrono::steady_clock;
  double seconds_between(int a, int b) const;
  Clock::time_point stamps_[4];
  int count_ = 0;
};

struct ExperimentRecord {
  int no = 0;
  std::string dataset;
  std::string segmentation;
  std::size_t train_sentences = 0;
  std::size_t validation_sentences = 0;
  std::size_t test_sentences = 0;
  int batch_size = 0;
  std::size_t vocabulary = 0;
  std::size_t max_review_length = 0;
  double t_pp = 0.0;
  double t_training = 0.0;
  double t_eval = 0.0;
  double score = 0.0;     // sentence-level accuracy
  double mv_score = 0.0;  // review-level accuracy after majority voting
  int epoch_count = 0;
  int save_epoch = 0;
  // Derived via the formulas above.
  double t_atd = 0.0;
  double t_te = 0.0;
  std::int64_t mem_estimate = 0;

  void validate() const;
};

inline constexpr const char* kReportHeader =
    "no,dataset,segmentation,train,validation,test,batch_size,vocabulary,"
    "max_review_length,t_pp,t_training,t_eval,score,mv_score,epoch_count,"
    "save_epoch,t_atd,t_te,mem_estimate";

// Fills the duration fields from a fully stamped stopwatch and computes the
// derived columns. Throws StateError on an incomplete stopwatch.
ExperimentRecord record_experiment(const Stopwatch& sw,
                                   ExperimentRecord partial,
                                   std::int64_t mem_estimate);

std::string report_row(const ExperimentRecord& record);
void write_report(std::ostream& os,
                  const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_report(const std::string& path);

}  // namespace segtr
