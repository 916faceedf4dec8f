#include "gcsl/data_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gcsl {

int Dataset::labeled_count() const {
  int n = 0;
  for (const auto& l : labels)
    if (l) ++n;
  return n;
}

bool Dataset::fully_labeled() const { return labeled_count() == size(); }

int Dataset::inferred_classes() const {
  int m = -1;
  for (const auto& l : labels)
    if (l) m = std::max(m, *l);
  return m + 1;
}

namespace {

Dataset sample_two_gaussians(int n, Rng& rng, double std_dev, const std::string& name) {
  Dataset d;
  d.name = name;
  d.features = Mat(n, 2, 0.0);
  d.labels.assign(n, std::nullopt);
  const int n1 = (n + 1) / 2;
  for (int i = 0; i < n; ++i) {
    int cls = i < n1 ? 0 : 1;
    double mean_y = cls == 0 ? -0.5 : 0.5;
    d.features(i, 0) = std_dev * rng.normal();
    d.features(i, 1) = mean_y + std_dev * rng.normal();
    d.labels[i] = cls;
  }
  return d;
}

}  // namespace

std::pair<Dataset, Dataset> gen_two_gaussians(int n_train, int n_test, uint64_t seed,
                                              double std_dev) {
  require(n_train >= 0 && n_test >= 0, "gen_two_gaussians: counts must be non-negative");
  require(std_dev > 0.0, "gen_two_gaussians: std_dev must be positive");
  Rng base(seed);
  Rng train_rng = base.split(0);
  Rng test_rng = base.split(1);
  return {sample_two_gaussians(n_train, train_rng, std_dev, "train"),
          sample_two_gaussians(n_test, test_rng, std_dev, "test")};
}

Dataset apply_mask(const Dataset& data, const MaskRule& rule) {
  require(data.fully_labeled(), "apply_mask: dataset must be fully labeled");
  require(rule.k >= 0, "apply_mask: k must be non-negative");
  const int classes = data.inferred_classes();
  std::vector<std::vector<int>> by_class(classes);
  for (int i = 0; i < data.size(); ++i) by_class[*data.labels[i]].push_back(i);
  for (int c = 0; c < classes; ++c)
    require(rule.k <= static_cast<int>(by_class[c].size()),
            "apply_mask: k exceeds class population");

  std::vector<bool> keep(data.size(), false);
  if (rule.kind == MaskKind::extremal_y) {
    require(classes == 2, "apply_mask: extremal_y expects exactly two classes");
    require(data.dim() >= 2, "apply_mask: extremal_y needs a second coordinate");
    auto take = [&](int cls, bool highest) {
      auto order = by_class[cls];
      // stable: equal y falls back to sample index
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double ya = data.features(a, 1), yb = data.features(b, 1);
        return highest ? ya > yb : ya < yb;
      });
      for (int i = 0; i < rule.k; ++i) keep[order[i]] = true;
    };
    // Deliberately adversarial: each class keeps the points nearest the other
    // class, so the labeled subset alone supports a badly tilted boundary.
    take(0, /*highest=*/true);
    take(1, /*highest=*/false);
  } else {
    Rng rng(rule.seed);
    for (int c = 0; c < classes; ++c) {
      auto pool = by_class[c];
      Rng stream = rng.split(static_cast<uint64_t>(c));
      for (int i = 0; i < rule.k; ++i) {
        int j = i + static_cast<int>(stream.uniform() * (pool.size() - i));
        j = std::min<int>(j, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[j]);
        keep[pool[i]] = true;
      }
    }
  }

  Dataset out = data;
  for (int i = 0; i < out.size(); ++i)
    if (!keep[i]) out.labels[i] = std::nullopt;
  return out;
}

std::string format_double(double v) {
  char buf[64];
  int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<size_t>(len));
}

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  for (int j = 0; j < data.dim(); ++j) out << 'f' << (j + 1) << ',';
  out << "label\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.dim(); ++j) out << format_double(data.features(i, j)) << ',';
    if (data.labels[i]) out << (*data.labels[i] + 1);  // 1-based on disk
    out << '\n';
  }
  atomic_write_text(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int line_no) {
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(b, &end);
  if (end == b || *end != '\0' || errno == ERANGE)
    throw ParseError("bad numeric value '" + s + "'", line_no);
  return v;
}

}  // namespace

Dataset read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);

  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty file", 1);
  ++line_no;
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label")
    throw ParseError("expected header f1,...,fD,label", line_no);
  const int dim = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < dim; ++j)
    if (header[j] != "f" + std::to_string(j + 1))
      throw ParseError("expected header column f" + std::to_string(j + 1), line_no);

  std::vector<double> values;
  std::vector<std::optional<int>> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    for (int j = 0; j < dim; ++j) values.push_back(parse_double(fields[j], line_no));
    const std::string& lab = fields[dim];
    if (lab.empty()) {
      labels.push_back(std::nullopt);
    } else {
      int v = 0;
      auto [p, ec] = std::from_chars(lab.data(), lab.data() + lab.size(), v);
      if (ec != std::errc{} || p != lab.data() + lab.size() || v < 1)
        throw ParseError("bad label '" + lab + "'", line_no);
      labels.push_back(v - 1);
    }
  }

  Dataset d;
  d.name = std::filesystem::path(path).stem().string();
  d.features = Mat(static_cast<int>(labels.size()), dim, 0.0);
  d.features.a = std::move(values);
  d.labels = std::move(labels);
  return d;
}

}  // namespace gcsl
