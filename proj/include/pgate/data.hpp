#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pgate/errors.hpp"
#include "pgate/matrix.hpp"
#include "pgate/rng.hpp"

namespace pgate {

// ---------------------------------------------------------------------------
// Vector data

/// Per-feature affine transform fitted on a training set.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns

  static constexpr double kStdFloor = 1e-8;

  /// Rows of `features` are samples.
  void apply(Matrix& features) const;
};

struct VectorDataset {
  Matrix features;                  // n x d, one sample per row
  std::vector<std::size_t> labels;  // contiguous 0..C-1
  std::size_t classes = 0;
  std::vector<std::string> label_names;  // original label text, indexed by class

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
};

enum class LabelColumn { First, Last };

struct CsvOptions {
  char delimiter = ',';
  bool whitespace = false;  // split on runs of blanks; overrides delimiter
  bool header = false;
  LabelColumn label = LabelColumn::Last;
};

/// Integer labels are mapped in ascending numeric order onto 0..C-1.
VectorDataset parse_csv(std::istream& in, const CsvOptions& opts);
VectorDataset load_csv(const std::string& path, const CsvOptions& opts);

/// The MiniBooNE PID layout: a first line with the signal and background
/// counts, then whitespace-separated feature rows, signal rows first.
/// Signal is class 1.
VectorDataset parse_miniboone(std::istream& in);
VectorDataset load_miniboone(const std::string& path);

struct DatasetSplit {
  VectorDataset train;
  VectorDataset valid;
};

VectorDataset subset(const VectorDataset& ds, std::span<const std::size_t> rows);

/// Seeded uniform split with explicit sizes. Throws ConfigError when
/// train + valid exceeds the row count.
DatasetSplit split_counts(const VectorDataset& ds, std::size_t train, std::size_t valid, Rng& rng);
/// Seeded uniform split; every row lands in exactly one side.
DatasetSplit split_fraction(const VectorDataset& ds, double train_fraction, Rng& rng);

/// Population statistics of the training features.
Standardizer fit_standardizer(const VectorDataset& train);
/// Fits on train only and applies to both; returns the fitted transform.
Standardizer standardize(VectorDataset& train, VectorDataset& valid);

/// Shuffled index batches covering 0..n-1 exactly once; the last batch may
/// be short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, Rng& rng);

struct Batch {
  Matrix x;  // d x b, one sample per column
  std::vector<std::size_t> labels;
};

Batch make_batch(const VectorDataset& ds, std::span<const std::size_t> rows);

/// Two-class surrogate for MiniBoo-style data: each class is a mixture of
/// Gaussian blobs in `dim` dimensions, with overlapping supports and
/// features of very different scales.
VectorDataset make_gaussian_surrogate(std::size_t n, std::size_t dim, Rng& rng);

// ---------------------------------------------------------------------------
// Character data

constexpr std::size_t kMaxSequenceLength = 100;

std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// Index 0 is the unknown character; chars[i] has index i + 1.
struct Vocabulary {
  std::vector<char32_t> chars;

  static Vocabulary build(std::span<const std::u32string> lines);

  std::size_t size() const { return chars.size() + 1; }
  std::size_t index(char32_t c) const;
  std::vector<std::size_t> encode(std::u32string_view text) const;
};

struct CharCorpus {
  Vocabulary vocab;
  std::vector<std::vector<std::size_t>> sequences;
  std::size_t dropped = 0;    // sampled lines shorter than 2 characters
  std::size_t truncated = 0;  // sampled lines cut at kMaxSequenceLength
  std::size_t characters = 0;
};

struct CorpusSplit {
  CharCorpus train;
  CharCorpus valid;
};

/// Samples train + valid sentences without replacement, truncates each at
/// kMaxSequenceLength characters and builds the vocabulary from the training
/// sample only. When the file has fewer lines than requested, training is
/// filled first.
CorpusSplit build_corpus(std::vector<std::u32string> lines, std::size_t train_sentences,
                         std::size_t valid_sentences, Rng& rng);
CorpusSplit load_corpus(const std::string& path, std::size_t train_sentences,
                        std::size_t valid_sentences, Rng& rng);

/// Encodes already-segmented text with a fixed vocabulary.
CharCorpus encode_corpus(const Vocabulary& vocab, std::span<const std::u32string> lines);

/// English-like sentences from a small seeded grammar, for smoke tests and
/// runs without a real corpus.
std::vector<std::string> synthetic_sentences(std::size_t count, Rng& rng);

}  // namespace pgate
