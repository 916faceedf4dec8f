#include "gcsl/calibration.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gcsl/data_io.hpp"
#include "gcsl/numerics.hpp"

namespace gcsl {

namespace {

int bin_index(double confidence, int bins) {
  // ((m-1)/M, m/M] with confidence 0 assigned to the first bin
  int m = static_cast<int>(std::ceil(confidence * bins));
  if (m < 1) m = 1;
  if (m > bins) m = bins;
  return m - 1;
}

void check_records(const std::vector<PredictionRecord>& records, int bins) {
  require(bins >= 1, "calibration: bins must be positive");
  require(!records.empty(), "calibration: no records");
  for (const auto& r : records)
    require(r.confidence >= 0.0 && r.confidence <= 1.0,
            "calibration: confidence outside [0, 1]");
}

}  // namespace

std::vector<ReliabilityBin> reliability_bins(const std::vector<PredictionRecord>& records,
                                             int bins) {
  check_records(records, bins);
  std::vector<ReliabilityBin> out(bins);
  std::vector<int> correct(bins, 0);
  std::vector<double> conf_sum(bins, 0.0);
  for (const auto& r : records) {
    int b = bin_index(r.confidence, bins);
    out[b].count += 1;
    conf_sum[b] += r.confidence;
    if (r.predicted == r.label) correct[b] += 1;
  }
  for (int b = 0; b < bins; ++b) {
    if (out[b].count == 0) continue;
    out[b].accuracy = static_cast<double>(correct[b]) / out[b].count;
    out[b].mean_confidence = conf_sum[b] / out[b].count;
    out[b].gap = out[b].accuracy - out[b].mean_confidence;
  }
  return out;
}

CalibrationReport ece(const std::vector<PredictionRecord>& records, int bins) {
  CalibrationReport report;
  report.bins = bins;
  report.reliability = reliability_bins(records, bins);
  report.n = static_cast<int>(records.size());

  int correct = 0;
  double conf_sum = 0.0;
  for (const auto& r : records) {
    if (r.predicted == r.label) ++correct;
    conf_sum += r.confidence;
  }
  report.accuracy = static_cast<double>(correct) / report.n;
  report.mean_confidence = conf_sum / report.n;

  // Extended-precision reduction: the per-bin gaps are differences of short
  // decimal fractions, and accumulating them in double loses the correctly
  // rounded result by an ulp.
  std::vector<long double> conf_sum_ld(bins, 0.0L);
  std::vector<int> correct_by_bin(bins, 0);
  std::vector<int> count_by_bin(bins, 0);
  for (const auto& r : records) {
    int b = bin_index(r.confidence, bins);
    conf_sum_ld[b] += r.confidence;
    count_by_bin[b] += 1;
    if (r.predicted == r.label) correct_by_bin[b] += 1;
  }
  long double e = 0.0L;
  for (int b = 0; b < bins; ++b) {
    if (count_by_bin[b] == 0) continue;
    long double acc = static_cast<long double>(correct_by_bin[b]) / count_by_bin[b];
    long double conf = conf_sum_ld[b] / count_by_bin[b];
    e += (static_cast<long double>(count_by_bin[b]) / report.n) * std::abs(acc - conf);
  }
  report.ece = static_cast<double>(e);
  return report;
}

ConfidenceHistogram confidence_histogram(const std::vector<PredictionRecord>& records,
                                         int bins) {
  check_records(records, bins);
  ConfidenceHistogram h;
  h.counts.assign(bins, 0);
  double sum = 0.0;
  for (const auto& r : records) {
    h.counts[bin_index(r.confidence, bins)] += 1;
    sum += r.confidence;
  }
  h.mean_confidence = sum / records.size();
  return h;
}

std::vector<PredictionRecord> read_predictions_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++line_no;
  if (line == "confidence,predicted,true\r") line.pop_back();
  if (line != "confidence,predicted,true")
    throw ParseError("expected header confidence,predicted,true", line_no);

  std::vector<PredictionRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string c, p, t;
    if (!std::getline(row, c, ',') || !std::getline(row, p, ',') || !std::getline(row, t))
      throw ParseError("expected 3 fields", line_no);
    PredictionRecord r;
    char* end = nullptr;
    r.confidence = std::strtod(c.c_str(), &end);
    if (end == c.c_str() || *end != '\0')
      throw ParseError("bad confidence '" + c + "'", line_no);
    if (r.confidence < 0.0 || r.confidence > 1.0)
      throw ParseError("confidence outside [0, 1]", line_no);
    auto parse_cls = [&](const std::string& s) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1)
        throw ParseError("bad class '" + s + "'", line_no);
      return v - 1;
    };
    r.predicted = parse_cls(p);
    r.label = parse_cls(t);
    records.push_back(r);
  }
  return records;
}

void write_predictions_csv(const std::vector<PredictionRecord>& records,
                           const std::string& path) {
  std::ostringstream out;
  out << "confidence,predicted,true\n";
  for (const auto& r : records)
    out << format_double(r.confidence) << ',' << (r.predicted + 1) << ',' << (r.label + 1)
        << '\n';
  atomic_write_text(path, out.str());
}

void write_report_csv(const CalibrationReport& report, const std::string& path) {
  std::ostringstream out;
  out << "bin,low,high,count,accuracy,mean_confidence,gap\n";
  for (int b = 0; b < report.bins; ++b) {
    const auto& bin = report.reliability[b];
    out << (b + 1) << ',' << format_double(static_cast<double>(b) / report.bins) << ','
        << format_double(static_cast<double>(b + 1) / report.bins) << ',' << bin.count << ','
        << format_double(bin.accuracy) << ',' << format_double(bin.mean_confidence) << ','
        << format_double(bin.gap) << '\n';
  }
  atomic_write_text(path, out.str());
}

}  // namespace gcsl
