#include "pgate/model_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "pgate/format.hpp"

namespace pgate {

namespace {

struct RawModel {
  std::string kind;
  Metadata meta;
  std::map<std::string, std::string> params;
  std::map<std::string, Matrix> matrices;
  std::vector<char32_t> vocab;
};

void write_header(std::ostream& out, std::string_view kind, const Metadata& meta) {
  out << "pgate-model " << kModelFormatVersion << '\n' << "kind " << kind << '\n';
  for (const auto& [key, value] : meta) out << "meta " << key << ' ' << value << '\n';
}

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

RawModel read_raw(std::istream& in) {
  RawModel raw;
  std::string line;
  if (!std::getline(in, line)) throw DataError("model file is empty");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != "pgate-model") {
      throw DataError("not a pgate model file");
    }
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format version " + std::to_string(version));
    }
  }
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "end") {
      ended = true;
      break;
    }
    if (tag == "kind") {
      ss >> raw.kind;
    } else if (tag == "meta") {
      std::string key;
      ss >> key;
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      raw.meta.emplace_back(key, value);
    } else if (tag == "param") {
      std::string key, value;
      ss >> key >> value;
      raw.params[key] = value;
    } else if (tag == "matrix") {
      std::string name;
      std::size_t rows = 0, cols = 0;
      if (!(ss >> name >> rows >> cols)) throw DataError("model file: malformed matrix header");
      std::vector<double> data;
      data.reserve(rows * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw DataError("model file: truncated matrix " + name);
        std::istringstream rs(line);
        std::string cell;
        std::size_t count = 0;
        while (rs >> cell) {
          data.push_back(parse_double_strict(cell, "matrix entry"));
          ++count;
        }
        if (count != cols) throw DataError("model file: ragged row in matrix " + name);
      }
      raw.matrices.emplace(name, Matrix::from_data(rows, cols, std::move(data)));
    } else if (tag == "vocab") {
      std::size_t n = 0;
      ss >> n;
      raw.vocab.resize(n);
      for (auto& c : raw.vocab) {
        std::uint32_t cp = 0;
        if (!(ss >> cp)) throw DataError("model file: truncated vocabulary");
        c = static_cast<char32_t>(cp);
      }
    } else {
      throw DataError("model file: unknown record '" + tag + "'");
    }
  }
  if (!ended) throw DataError("model file: missing 'end' record");
  return raw;
}

const std::string& require_param(const RawModel& raw, const std::string& key) {
  const auto it = raw.params.find(key);
  if (it == raw.params.end()) throw DataError("model file: missing param " + key);
  return it->second;
}

Matrix take_matrix(RawModel& raw, std::string_view name) {
  const auto it = raw.matrices.find(std::string(name));
  if (it == raw.matrices.end()) throw DataError("model file: missing matrix " + std::string(name));
  return std::move(it->second);
}

PNorm read_pnorm(const RawModel& raw) {
  return PNorm(parse_double_strict(require_param(raw, "p"), "p"),
               parse_double_strict(require_param(raw, "epsilon"), "epsilon"));
}

}  // namespace

void save_highway(std::ostream& out, const SavedHighway& model) {
  const auto& params = model.params;
  params.validate();
  write_header(out, "highway", model.meta);
  out << "param layers " << params.layers << '\n'
      << "param p " << format_double(params.pn.p()) << '\n'
      << "param epsilon " << format_double(params.pn.epsilon()) << '\n'
      << "param nonlinearity " << to_string(params.g) << '\n';
  for (const auto& [name, m] : params.weights.fields()) write_matrix(out, name, *m);
  if (model.standardizer) {
    const auto& s = *model.standardizer;
    write_matrix(out, "standardizer_mean", Matrix::from_data(1, s.mean.size(), s.mean));
    write_matrix(out, "standardizer_scale", Matrix::from_data(1, s.scale.size(), s.scale));
  }
  out << "end\n";
}

void save_gru(std::ostream& out, const SavedGru& model) {
  const auto& params = model.params;
  params.validate();
  if (model.vocab.size() != params.vocab()) {
    throw DimensionError("save_gru: vocabulary size differs from the model's");
  }
  write_header(out, "gru", model.meta);
  out << "param p " << format_double(params.pn.p()) << '\n'
      << "param epsilon " << format_double(params.pn.epsilon()) << '\n';
  for (const auto& [name, m] : params.weights.fields()) write_matrix(out, name, *m);
  out << "vocab " << model.vocab.chars.size();
  for (char32_t c : model.vocab.chars) out << ' ' << static_cast<std::uint32_t>(c);
  out << "\nend\n";
}

SavedHighway load_highway(std::istream& in) {
  RawModel raw = read_raw(in);
  if (raw.kind != "highway") throw DataError("model file holds a '" + raw.kind + "' model");
  SavedHighway model;
  model.meta = raw.meta;
  model.params.layers =
      static_cast<std::size_t>(parse_double_strict(require_param(raw, "layers"), "layers"));
  model.params.pn = read_pnorm(raw);
  model.params.g = parse_nonlinearity(require_param(raw, "nonlinearity"));
  for (auto& [name, m] : model.params.weights.fields()) *m = take_matrix(raw, name);
  model.params.validate();
  if (raw.matrices.contains("standardizer_mean")) {
    const Matrix mean = take_matrix(raw, "standardizer_mean");
    const Matrix scale = take_matrix(raw, "standardizer_scale");
    if (mean.size() != model.params.input_dim() || scale.size() != mean.size()) {
      throw DataError("model file: standardizer does not match the input width");
    }
    model.standardizer = Standardizer{{mean.data().begin(), mean.data().end()},
                                      {scale.data().begin(), scale.data().end()}};
  }
  return model;
}

SavedGru load_gru(std::istream& in) {
  RawModel raw = read_raw(in);
  if (raw.kind != "gru") throw DataError("model file holds a '" + raw.kind + "' model");
  SavedGru model;
  model.meta = raw.meta;
  model.params.pn = read_pnorm(raw);
  for (auto& [name, m] : model.params.weights.fields()) *m = take_matrix(raw, name);
  model.params.validate();
  model.vocab.chars = raw.vocab;
  if (model.vocab.size() != model.params.vocab()) {
    throw DataError("model file: vocabulary size differs from the weights");
  }
  return model;
}

std::string peek_model_kind(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("pgate-model", 0) != 0) throw DataError(path + ": not a pgate model file");
  while (std::getline(in, line)) {
    if (line.rfind("kind ", 0) == 0) return line.substr(5);
  }
  throw DataError(path + ": model kind missing");
}

}  // namespace pgate
