#pragma once

#include <string>
#include <vector>

namespace gcsl {

// One scored prediction; classes are 0-based in memory, 1-based on disk.
struct PredictionRecord {
  double confidence = 0.0;  // top-class probability, in [0, 1]
  int predicted = 0;
  int label = 0;
};

struct ReliabilityBin {
  int count = 0;
  double accuracy = 0.0;         // fraction correct within the bin (0 when empty)
  double mean_confidence = 0.0;  // 0 when empty
  double gap = 0.0;              // accuracy - mean_confidence (0 when empty)
};

struct CalibrationReport {
  int bins = 0;
  std::vector<ReliabilityBin> reliability;
  double ece = 0.0;
  double accuracy = 0.0;
  double mean_confidence = 0.0;
  int n = 0;
};

struct ConfidenceHistogram {
  std::vector<int> counts;
  double mean_confidence = 0.0;
};

// Equal-width bins ((m-1)/M, m/M]; a confidence of exactly 0 lands in the
// first bin. ECE = sum_m |B_m|/n * |acc(B_m) - conf(B_m)|.
CalibrationReport ece(const std::vector<PredictionRecord>& records, int bins = 10);

std::vector<ReliabilityBin> reliability_bins(const std::vector<PredictionRecord>& records,
                                             int bins = 10);

ConfidenceHistogram confidence_histogram(const std::vector<PredictionRecord>& records,
                                         int bins = 10);

// CSV with header confidence,predicted,true (1-based classes on disk).
std::vector<PredictionRecord> read_predictions_csv(const std::string& path);
void write_predictions_csv(const std::vector<PredictionRecord>& records,
                           const std::string& path);

// Per-bin table: bin,low,high,count,accuracy,mean_confidence,gap.
void write_report_csv(const CalibrationReport& report, const std::string& path);

}  // namespace gcsl
