#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "segtr/errors.hpp"
#include "segtr/perf.hpp"
#include "segtr/rng.hpp"

using namespace segtr;

TEST_CASE("memory formulas") {
  CHECK(mem_cnn(0, 0) == 3121);
  CHECK(mem_cnn(1000, 100) == 103121);
  CHECK(mem_cnn(4822, 38) == 263221);  // BPE-5k vocabulary at L=38

  CHECK(mem_lstm(0, 0) == 53301);
  CHECK(mem_lstm(0, 123456) == 53301);
  CHECK(mem_lstm(1000, 0) == 85301);
  CHECK(mem_lstm(77, 10) == mem_lstm(77, 10000));

  CHECK_THROWS_AS(mem_cnn(-1, 0), InputError);
  CHECK_THROWS_AS(mem_lstm(0, -5), InputError);

  SUBCASE("randomized exact arithmetic against a wide-integer oracle") {
    Rng rng(123123);
    for (int i = 0; i < 1000; ++i) {
      const auto v = static_cast<std::int64_t>(rng.next_index(1000001));
      const auto l = static_cast<std::int64_t>(rng.next_index(1000001));
      const __int128 cnn = static_cast<__int128>(50) * v +
                           static_cast<__int128>(500) * l + 3121;
      const __int128 lstm = static_cast<__int128>(32) * v + 53301;
      CHECK(static_cast<__int128>(mem_cnn(v, l)) == cnn);
      CHECK(static_cast<__int128>(mem_lstm(v, l)) == lstm);
    }
  }
}

TEST_CASE("actual train duration") {
  CHECK(actual_train_duration(100, 10, 10) == doctest::Approx(100));
  CHECK(actual_train_duration(100, 10, 5) == doctest::Approx(50));
  CHECK(actual_train_duration(77.7, 7, 3) ==
        doctest::Approx(77.7 * 3 / 7).epsilon(1e-9));

  CHECK_THROWS_AS(actual_train_duration(1, 0, 0), InputError);
  CHECK_THROWS_AS(actual_train_duration(1, 5, 0), InputError);
  CHECK_THROWS_AS(actual_train_duration(1, 5, 6), InputError);

  SUBCASE("never exceeds the full training duration") {
    Rng rng(77);
    for (int i = 0; i < 200; ++i) {
      const int ec = 1 + static_cast<int>(rng.next_index(50));
      const int se = 1 + static_cast<int>(rng.next_index(ec));
      const double t = rng.next_double() * 1000;
      const double atd = actual_train_duration(t, ec, se);
      CHECK(atd <= t + 1e-9);
      if (se == ec) CHECK(atd == doctest::Approx(t));
    }
  }
}

TEST_CASE("total eval duration") {
  CHECK(total_eval_duration(0, 0) == 0);
  CHECK(total_eval_duration(1.5, 2.5) == doctest::Approx(4.0));
  CHECK(total_eval_duration(2.5, 1.5) == total_eval_duration(1.5, 2.5));
  CHECK_THROWS_AS(total_eval_duration(-1, 0), InputError);
}

TEST_CASE("stopwatch ordering") {
  Stopwatch sw;
  CHECK_THROWS_AS(sw.t_pp(), StateError);
  sw.stamp();
  sw.stamp();
  CHECK(sw.t_pp() >= 0.0);
  CHECK_THROWS_AS(sw.t_training(), StateError);
  sw.stamp();
  sw.stamp();
  CHECK(sw.complete());
  CHECK_THROWS_AS(sw.stamp(), StateError);
  CHECK(sw.total() >= sw.t_pp());
}

namespace {

ExperimentRecord sample_record(int no) {
  ExperimentRecord r;
  r.no = no;
  r.dataset = "toy";
  r.segmentation = "word-token";
  r.train_sentences = 80;
  r.validation_sentences = 10;
  r.test_sentences = 10;
  r.batch_size = 64;
  r.vocabulary = 123;
  r.max_review_length = 17;
  r.t_pp = 0.125;
  r.t_training = 3.25;
  r.t_eval = 0.0625;
  r.score = 0.91;
  r.mv_score = 0.93;
  r.epoch_count = 12;
  r.save_epoch = 9;
  r.t_atd = actual_train_duration(r.t_training, r.epoch_count, r.save_epoch);
  r.t_te = total_eval_duration(r.t_pp, r.t_eval);
  r.mem_estimate = mem_cnn(123, 17);
  return r;
}

}  // namespace

TEST_CASE("experiment records") {
  SUBCASE("record assembly telescopes the stopwatch") {
    Stopwatch sw;
    sw.stamp();
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    sw.stamp();
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    sw.stamp();
    sw.stamp();
    ExperimentRecord partial = sample_record(1);
    const auto rec = record_experiment(sw, partial, 999);
    CHECK(rec.t_pp + rec.t_training + rec.t_eval ==
          doctest::Approx(sw.total()).epsilon(1e-9));
    CHECK(rec.t_te == doctest::Approx(rec.t_pp + rec.t_eval));
    CHECK(rec.t_atd <= rec.t_training + 1e-12);
    CHECK(rec.mem_estimate == 999);
  }
  SUBCASE("incomplete stopwatch is a state error") {
    Stopwatch sw;
    sw.stamp();
    CHECK_THROWS_AS(record_experiment(sw, sample_record(1), 0), StateError);
  }
  SUBCASE("validation rejects nonsense") {
    auto r = sample_record(1);
    r.save_epoch = 99;
    CHECK_THROWS_AS(r.validate(), InputError);
    r = sample_record(1);
    r.vocabulary = 1;
    CHECK_THROWS_AS(r.validate(), InputError);
    r = sample_record(1);
    r.score = 1.5;
    CHECK_THROWS_AS(r.validate(), InputError);
  }
}

TEST_CASE("report CSV round trips losslessly") {
  const std::vector<ExperimentRecord> records = {sample_record(1),
                                                 sample_record(2)};
  const std::string path = "test_report_tmp.csv";
  {
    std::ofstream out(path, std::ios::binary);
    write_report(out, records);
  }
  const auto back = read_report(path);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].no == records[i].no);
    CHECK(back[i].dataset == records[i].dataset);
    CHECK(back[i].segmentation == records[i].segmentation);
    CHECK(back[i].train_sentences == records[i].train_sentences);
    CHECK(back[i].batch_size == records[i].batch_size);
    CHECK(back[i].vocabulary == records[i].vocabulary);
    CHECK(back[i].max_review_length == records[i].max_review_length);
    CHECK(back[i].t_pp == records[i].t_pp);  // exact, not approximate
    CHECK(back[i].t_training == records[i].t_training);
    CHECK(back[i].t_eval == records[i].t_eval);
    CHECK(back[i].score == records[i].score);
    CHECK(back[i].mv_score == records[i].mv_score);
    CHECK(back[i].epoch_count == records[i].epoch_count);
    CHECK(back[i].save_epoch == records[i].save_epoch);
    CHECK(back[i].t_atd == records[i].t_atd);
    CHECK(back[i].t_te == records[i].t_te);
    CHECK(back[i].mem_estimate == records[i].mem_estimate);
  }

  // Writing the parsed records again reproduces the file byte for byte.
  std::ostringstream second;
  write_report(second, back);
  std::ifstream in(path, std::ios::binary);
  std::stringstream original;
  original << in.rdbuf();
  CHECK(second.str() == original.str());

  SUBCASE("derived columns recompute from the row") {
    for (const auto& r : back) {
      CHECK(r.t_atd == doctest::Approx(actual_train_duration(
                           r.t_training, r.epoch_count, r.save_epoch)));
      CHECK(r.t_te == doctest::Approx(r.t_pp + r.t_eval));
    }
  }
  std::remove(path.c_str());

  SUBCASE("header mismatch is rejected") {
    const std::string bad = "test_report_bad.csv";
    std::ofstream(bad, std::ios::binary) << "nope\n";
    CHECK_THROWS_AS(read_report(bad), ParseError);
    std::remove(bad.c_str());
  }
}
