#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gcsl/calibration.hpp"

using namespace gcsl;

namespace {

PredictionRecord rec(double conf, int pred, int label) {
  PredictionRecord r;
  r.confidence = conf;
  r.predicted = pred;
  r.label = label;
  return r;
}

}  // namespace

TEST_CASE("hand-worked two-bin example gives ECE exactly 0.25") {
  // Two bins, two records each, accuracy 1/2 in both. Confidences sit at the
  // bin midpoints, so each bin's |accuracy - mean confidence| is 0.25 and the
  // count-weighted sum is 0.25 with every intermediate a dyadic rational.
  std::vector<PredictionRecord> records = {
      rec(0.25, 0, 0),  // low bin, correct
      rec(0.25, 0, 1),  // low bin, wrong   -> acc .5, conf .25, gap +.25
      rec(0.75, 0, 0),  // high bin, correct
      rec(0.75, 0, 1),  // high bin, wrong  -> acc .5, conf .75, gap -.25
  };
  CalibrationReport rep = ece(records, 2);
  CHECK(rep.ece == 0.25);
  CHECK(rep.n == 4);
  CHECK(rep.accuracy == 0.5);
  CHECK(rep.mean_confidence == 0.5);
  REQUIRE(rep.reliability.size() == 2);
  CHECK(rep.reliability[0].count == 2);
  CHECK(rep.reliability[1].count == 2);
  CHECK(rep.reliability[0].gap == 0.25);
  CHECK(rep.reliability[1].gap == -0.25);
}

TEST_CASE("perfectly calibrated and maximally miscalibrated edges") {
  // all correct at confidence 1.0: ECE = 0 exactly
  std::vector<PredictionRecord> perfect;
  for (int i = 0; i < 10; ++i) perfect.push_back(rec(1.0, i % 2, i % 2));
  CHECK(ece(perfect, 10).ece == 0.0);

  // all wrong at confidence 1.0: ECE = 1 exactly
  std::vector<PredictionRecord> hopeless;
  for (int i = 0; i < 10; ++i) hopeless.push_back(rec(1.0, 0, 1));
  CHECK(ece(hopeless, 10).ece == 1.0);
}

TEST_CASE("bin edges: (m-1)/M to m/M, right-closed, zero lands in bin 1") {
  std::vector<PredictionRecord> records = {
      rec(0.0, 0, 0),   // exactly zero -> first bin
      rec(0.5, 0, 0),   // boundary -> bin 5 of 10 (right-closed)
      rec(0.50001, 0, 0),  // just above -> bin 6
      rec(1.0, 0, 0),   // top -> bin 10
  };
  auto bins = reliability_bins(records, 10);
  REQUIRE(bins.size() == 10);
  CHECK(bins[0].count == 1);
  CHECK(bins[4].count == 1);
  CHECK(bins[5].count == 1);
  CHECK(bins[9].count == 1);
}

TEST_CASE("bin counts partition the records for random inputs") {
  std::vector<PredictionRecord> records;
  // deterministic pseudo-random confidences without pulling in Rng
  unsigned state = 12345;
  for (int i = 0; i < 500; ++i) {
    state = state * 1664525u + 1013904223u;
    double conf = (state >> 8) / double(1u << 24);
    records.push_back(rec(conf, i % 3, (i * 7) % 3));
  }
  for (int m : {1, 2, 7, 10, 50}) {
    auto bins = reliability_bins(records, m);
    int total = 0;
    for (const auto& b : bins) total += b.count;
    CHECK(total == 500);
  }

  // single bin: ECE = |accuracy - mean confidence|
  CalibrationReport rep = ece(records, 1);
  CHECK(rep.ece ==
        doctest::Approx(std::abs(rep.accuracy - rep.mean_confidence)).epsilon(1e-15));
}

TEST_CASE("empty bins carry zero stats and never contribute") {
  std::vector<PredictionRecord> records = {rec(0.95, 0, 0), rec(0.97, 1, 1)};
  CalibrationReport rep = ece(records, 10);
  for (int m = 0; m < 9; ++m) {
    CHECK(rep.reliability[m].count == 0);
    CHECK(rep.reliability[m].accuracy == 0.0);
    CHECK(rep.reliability[m].mean_confidence == 0.0);
    CHECK(rep.reliability[m].gap == 0.0);
  }
  CHECK(rep.ece == doctest::Approx(1.0 - 0.96).epsilon(1e-12));
}

TEST_CASE("contract violations throw") {
  std::vector<PredictionRecord> ok = {rec(0.5, 0, 0)};
  CHECK_THROWS_AS(ece(ok, 0), std::invalid_argument);
  CHECK_THROWS_AS(ece({}, 10), std::invalid_argument);
  CHECK_THROWS_AS(ece({rec(1.5, 0, 0)}, 10), std::invalid_argument);
  CHECK_THROWS_AS(ece({rec(-0.1, 0, 0)}, 10), std::invalid_argument);
}

TEST_CASE("confidence histogram counts match reliability counts") {
  std::vector<PredictionRecord> records = {rec(0.1, 0, 0), rec(0.12, 0, 1),
                                           rec(0.95, 1, 1)};
  ConfidenceHistogram h = confidence_histogram(records, 10);
  auto bins = reliability_bins(records, 10);
  REQUIRE(h.counts.size() == bins.size());
  for (size_t i = 0; i < bins.size(); ++i) CHECK(h.counts[i] == bins[i].count);
  CHECK(h.mean_confidence == doctest::Approx((0.1 + 0.12 + 0.95) / 3).epsilon(1e-15));
}

TEST_CASE("prediction CSV round-trips with 1-based labels on disk") {
  std::vector<PredictionRecord> records = {rec(0.4999999999999999, 0, 1),
                                           rec(1.0, 2, 2), rec(0.0, 1, 0)};
  auto path = std::filesystem::temp_directory_path() / "gcsl_pred_test.csv";
  write_predictions_csv(records, path.string());

  // header and 1-based class columns
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "confidence,predicted,true");
  std::string row;
  std::getline(in, row);
  CHECK(row.find(",1,2") != std::string::npos);
  in.close();

  auto back = read_predictions_csv(path.string());
  REQUIRE(back.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(back[i].confidence == records[i].confidence);
    CHECK(back[i].predicted == records[i].predicted);
    CHECK(back[i].label == records[i].label);
  }
  std::filesystem::remove(path);
}

TEST_CASE("report CSV lists one row per bin with edges") {
  std::vector<PredictionRecord> records = {rec(0.25, 0, 0), rec(0.75, 0, 1)};
  CalibrationReport rep = ece(records, 2);
  auto path = std::filesystem::temp_directory_path() / "gcsl_report_test.csv";
  write_report_csv(rep, path.string());
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "bin,low,high,count,accuracy,mean_confidence,gap");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
  in.close();
  std::filesystem::remove(path);
}
