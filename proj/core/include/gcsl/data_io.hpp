#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "gcsl/numerics.hpp"

namespace gcsl {

// Feature rows with optional 0-based class labels (absent = unlabeled).
// On disk the label column is 1-based; conversion happens at the CSV edge.
struct Dataset {
  Mat features;
  std::vector<std::optional<int>> labels;
  std::string name;

  int size() const { return features.rows; }
  int dim() const { return features.cols; }
  int labeled_count() const;
  bool fully_labeled() const;
  // 1 + max label, or 0 when nothing is labeled.
  int inferred_classes() const;
};

enum class MaskKind {
  extremal_y,          // keeps labels on the k highest-y class-1 samples and
                       // the k lowest-y class-2 samples
  random_k_per_class,  // keeps labels on k seeded-random samples per class
};

struct MaskRule {
  MaskKind kind = MaskKind::extremal_y;
  int k = 5;
  uint64_t seed = 0;  // used by random_k_per_class only
};

// Two classes in 2-D with means (0, -0.5) and (0, +0.5) and a shared
// isotropic covariance std_dev^2 * I; fully labeled, class-1 rows first
// (odd counts give class 1 the extra sample).
//
// The source experiment prints the covariance as 0.5*I, but its reported
// accuracies (~97.5%) sit far above the ~76% Bayes ceiling that covariance
// implies; std_dev = 0.25 puts the Bayes accuracy at 97.7%, matching every
// reported figure, so that is the default here.
std::pair<Dataset, Dataset> gen_two_gaussians(int n_train, int n_test, uint64_t seed,
                                              double std_dev = 0.25);

// Returns a copy with labels removed everywhere the rule does not keep them.
// Requires a fully labeled input; ties in extremal_y break by sample index.
Dataset apply_mask(const Dataset& data, const MaskRule& rule);

struct ParseError : std::runtime_error {
  int line;
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

// Header f1,...,fD,label; empty label field = unlabeled; labels 1-based on
// disk. Values round-trip exactly (17 significant digits).
Dataset read_csv(const std::string& path);
void write_csv(const Dataset& data, const std::string& path);

// Shared by every writer in the project: write to a temp file in the target
// directory, then rename over the destination.
void atomic_write_text(const std::string& path, const std::string& content);

std::string format_double(double v);  // shortest exact round-trip form

}  // namespace gcsl
