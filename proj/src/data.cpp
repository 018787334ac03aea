#include "pgate/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pgate {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, const CsvOptions& opts) {
  std::vector<std::string_view> out;
  if (opts.whitespace) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      out.push_back(line.substr(start, i - start));
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(opts.delimiter, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

/// Maps label strings (integer-valued) to 0..C-1 in ascending numeric order.
void assign_labels(VectorDataset& ds, const std::vector<std::string>& raw,
                   const std::vector<std::size_t>& line_numbers) {
  std::map<long long, std::string> distinct;
  std::vector<long long> numeric(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double v = 0.0;
    if (!parse_double(raw[i], v) || v != std::floor(v)) {
      throw DataError("row " + std::to_string(line_numbers[i]) + ": unknown label '" + raw[i] +
                      "' (labels must be integers)");
    }
    numeric[i] = static_cast<long long>(v);
    distinct.emplace(numeric[i], std::string(trim(raw[i])));
  }
  std::map<long long, std::size_t> index;
  for (const auto& [value, name] : distinct) {
    index.emplace(value, ds.label_names.size());
    ds.label_names.push_back(name);
  }
  ds.classes = ds.label_names.size();
  ds.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) ds.labels[i] = index.at(numeric[i]);
}

}  // namespace

void Standardizer::apply(Matrix& features) const {
  if (features.cols() != mean.size()) {
    throw DimensionError("Standardizer: fitted on " + std::to_string(mean.size()) +
                         " features, got " + features.shape_string());
  }
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto row = features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
}

VectorDataset parse_csv(std::istream& in, const CsvOptions& opts) {
  VectorDataset ds;
  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::vector<std::size_t> line_numbers;
  std::size_t arity = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (opts.header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, opts);
    if (fields.size() < 2) {
      throw DataError("row " + std::to_string(line_no) + ": need at least one feature and a label");
    }
    if (arity == 0) {
      arity = fields.size();
    } else if (fields.size() != arity) {
      throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                      " fields, found " + std::to_string(fields.size()));
    }
    const std::size_t label_at = opts.label == LabelColumn::First ? 0 : arity - 1;
    for (std::size_t c = 0; c < arity; ++c) {
      if (c == label_at) continue;
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw DataError("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": cannot parse '" + std::string(fields[c]) + "' as a number");
      }
      values.push_back(v);
    }
    raw_labels.emplace_back(fields[label_at]);
    line_numbers.push_back(line_no);
  }
  if (raw_labels.empty()) throw DataError("no data rows");
  ds.features = Matrix::from_data(raw_labels.size(), arity - 1, std::move(values));
  assign_labels(ds, raw_labels, line_numbers);
  return ds;
}

VectorDataset load_csv(const std::string& path, const CsvOptions& opts) {
  auto in = open_input(path);
  try {
    return parse_csv(in, opts);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

VectorDataset parse_miniboone(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("row 1: missing class-count header");
  std::istringstream head(line);
  std::size_t signal = 0;
  std::size_t background = 0;
  if (!(head >> signal >> background)) {
    throw DataError("row 1: expected '<signal count> <background count>'");
  }
  const std::size_t total = signal + background;
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  CsvOptions opts;
  opts.whitespace = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, opts);
    if (dim == 0) {
      dim = fields.size();
    } else if (fields.size() != dim) {
      throw DataError("row " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw DataError("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                        ": cannot parse '" + std::string(fields[c]) + "' as a number");
      }
      values.push_back(v);
    }
    ++rows;
  }
  if (rows != total) {
    throw DataError("header announces " + std::to_string(total) + " rows, file has " +
                    std::to_string(rows));
  }
  VectorDataset ds;
  ds.features = Matrix::from_data(rows, dim, std::move(values));
  ds.labels.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) ds.labels[i] = i < signal ? 1 : 0;
  ds.classes = 2;
  ds.label_names = {"background", "signal"};
  return ds;
}

VectorDataset load_miniboone(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_miniboone(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

VectorDataset subset(const VectorDataset& ds, std::span<const std::size_t> rows) {
  VectorDataset out;
  out.classes = ds.classes;
  out.label_names = ds.label_names;
  out.features = Matrix(rows.size(), ds.dim());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels[i] = ds.labels[rows[i]];
  }
  return out;
}

DatasetSplit split_counts(const VectorDataset& ds, std::size_t train, std::size_t valid, Rng& rng) {
  if (train + valid > ds.size()) {
    throw ConfigError("split: requested " + std::to_string(train) + " + " +
                      std::to_string(valid) + " rows but the dataset has " +
                      std::to_string(ds.size()));
  }
  if (train == 0) throw ConfigError("split: training set would be empty");
  const auto order = rng.permutation(ds.size());
  const std::span<const std::size_t> all(order);
  return {subset(ds, all.subspan(0, train)), subset(ds, all.subspan(train, valid))};
}

DatasetSplit split_fraction(const VectorDataset& ds, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("split: train fraction must lie in (0, 1]");
  }
  const auto train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(ds.size())));
  return split_counts(ds, std::max<std::size_t>(train, 1), ds.size() - std::max<std::size_t>(train, 1),
                      rng);
}

Standardizer fit_standardizer(const VectorDataset& train) {
  const std::size_t n = train.size();
  const std::size_t d = train.dim();
  if (n == 0) throw DataError("standardize: empty training set");
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = train.features.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = train.features.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = row[c] - s.mean[c];
      var[c] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    s.scale[c] = sd < Standardizer::kStdFloor ? 1.0 : sd;
  }
  return s;
}

Standardizer standardize(VectorDataset& train, VectorDataset& valid) {
  Standardizer s = fit_standardizer(train);
  s.apply(train.features);
  if (valid.size() > 0) s.apply(valid.features);
  return s;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("minibatches: batch size must be positive");
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> out;
  out.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

Batch make_batch(const VectorDataset& ds, std::span<const std::size_t> rows) {
  Batch b;
  b.x = Matrix(ds.dim(), rows.size());
  b.labels.resize(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto src = ds.features.row(rows[j]);
    for (std::size_t i = 0; i < src.size(); ++i) b.x(i, j) = src[i];
    b.labels[j] = ds.labels[rows[j]];
  }
  return b;
}

VectorDataset make_gaussian_surrogate(std::size_t n, std::size_t dim, Rng& rng) {
  constexpr std::size_t kComponents = 4;
  constexpr double kMeanSpread = 0.42;
  constexpr double kSignalFraction = 0.28;  // MiniBoo is roughly 28% signal

  std::vector<std::vector<double>> means(2 * kComponents, std::vector<double>(dim));
  for (auto& mu : means) {
    for (double& v : mu) v = kMeanSpread * rng.normal();
  }
  // Raw features span several orders of magnitude, as in the particle data.
  std::vector<double> feature_scale(dim);
  std::vector<double> feature_offset(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    feature_scale[c] = std::pow(10.0, rng.uniform(-2.0, 3.0));
    feature_offset[c] = rng.uniform(-5.0, 5.0) * feature_scale[c];
  }

  VectorDataset ds;
  ds.classes = 2;
  ds.label_names = {"0", "1"};
  ds.features = Matrix(n, dim);
  ds.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t label = rng.uniform01() < kSignalFraction ? 1 : 0;
    const auto& mu = means[label * kComponents + rng.below(kComponents)];
    auto row = ds.features.row(r);
    for (std::size_t c = 0; c < dim; ++c) {
      row[c] = feature_offset[c] + feature_scale[c] * (mu[c] + rng.normal());
    }
    ds.labels[r] = label;
  }
  return ds;
}

// ---------------------------------------------------------------------------

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

Vocabulary Vocabulary::build(std::span<const std::u32string> lines) {
  std::set<char32_t> seen;
  for (const auto& line : lines) seen.insert(line.begin(), line.end());
  Vocabulary v;
  v.chars.assign(seen.begin(), seen.end());
  return v;
}

std::size_t Vocabulary::index(char32_t c) const {
  const auto it = std::lower_bound(chars.begin(), chars.end(), c);
  if (it == chars.end() || *it != c) return 0;
  return static_cast<std::size_t>(it - chars.begin()) + 1;
}

std::vector<std::size_t> Vocabulary::encode(std::u32string_view text) const {
  std::vector<std::size_t> out;
  out.reserve(text.size());
  for (char32_t c : text) out.push_back(index(c));
  return out;
}

CharCorpus encode_corpus(const Vocabulary& vocab, std::span<const std::u32string> lines) {
  CharCorpus corpus;
  corpus.vocab = vocab;
  for (const auto& line : lines) {
    std::u32string_view text = line;
    if (text.size() > kMaxSequenceLength) {
      text = text.substr(0, kMaxSequenceLength);
      ++corpus.truncated;
    }
    if (text.size() < 2) {
      ++corpus.dropped;
      continue;
    }
    corpus.sequences.push_back(vocab.encode(text));
    corpus.characters += text.size();
  }
  return corpus;
}

CorpusSplit build_corpus(std::vector<std::u32string> lines, std::size_t train_sentences,
                         std::size_t valid_sentences, Rng& rng) {
  if (lines.empty()) throw DataError("corpus is empty");
  rng.shuffle(lines);
  const std::size_t n_train = std::min(train_sentences, lines.size());
  const std::size_t n_valid = std::min(valid_sentences, lines.size() - n_train);

  std::vector<std::u32string> train(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::u32string> valid(lines.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    lines.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  // Characters past the cut never reach the model, so they stay out of the
  // vocabulary too.
  std::vector<std::u32string> seen;
  seen.reserve(train.size());
  for (const auto& s : train) seen.push_back(s.substr(0, kMaxSequenceLength));
  const Vocabulary vocab = Vocabulary::build(seen);
  CorpusSplit out{encode_corpus(vocab, train), encode_corpus(vocab, valid)};
  return out;
}

CorpusSplit load_corpus(const std::string& path, std::size_t train_sentences,
                        std::size_t valid_sentences, Rng& rng) {
  auto in = open_input(path);
  std::vector<std::u32string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(decode_utf8(line));
  }
  if (lines.empty()) throw DataError(path + ": corpus is empty");
  return build_corpus(std::move(lines), train_sentences, valid_sentences, rng);
}

std::vector<std::string> synthetic_sentences(std::size_t count, Rng& rng) {
  static const std::vector<std::string> subjects = {
      "the company", "the bank", "analysts", "the minister", "shares", "the government",
      "investors", "the market", "the firm", "officials", "traders", "the board"};
  static const std::vector<std::string> verbs = {
      "said", "reported", "expected", "announced", "raised", "cut", "forecast", "denied",
      "approved", "rejected", "reviewed", "confirmed"};
  static const std::vector<std::string> objects = {
      "profits", "the deal", "interest rates", "its outlook", "the merger", "quarterly earnings",
      "the budget", "new rules", "a dividend", "the offer", "sales growth", "the report"};
  static const std::vector<std::string> tails = {
      "on monday", "last week", "in london", "after the close", "for the year",
      "despite weak demand", "by ten percent", "in a statement", "earlier this month",
      "amid rising costs"};
  auto pick = [&rng](const std::vector<std::string>& words) -> const std::string& {
    return words[rng.below(words.size())];
  };
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string s = pick(subjects) + " " + pick(verbs) + " " + pick(objects);
    if (rng.uniform01() < 0.7) s += " " + pick(tails);
    if (rng.uniform01() < 0.3) s += " and " + pick(subjects) + " " + pick(verbs) + " " + pick(objects);
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    s += ".";
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pgate
