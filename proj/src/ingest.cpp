#include "labelsel/ingest.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

namespace labelsel {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
    out.emplace_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Non-empty, non-comment lines of a CSV file. Line numbers are not kept:
// rows are reported as 1-based data rows after the header.
std::vector<std::string> read_csv_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

SampleId parse_id(const std::string& text, std::size_t row) {
  SampleId id = 0;
  if (!parse_number(text, id)) {
    throw Error(Errc::ParseFailure, "row " + std::to_string(row) + ": bad id '" + text + "'", row, 0);
  }
  return id;
}

void check_header(const std::vector<std::string>& lines, const std::filesystem::path& path,
                  std::string_view prefix) {
  if (lines.empty()) throw Error(Errc::MissingHeader, path.string() + " is empty");
  auto fields = split_fields(lines.front());
  if (fields.empty() || fields.front() != "id") {
    throw Error(Errc::MissingHeader, path.string() + ": first line must start with 'id'");
  }
  for (std::size_t j = 1; j < fields.size(); ++j) {
    if (fields[j] != std::string(prefix) + std::to_string(j - 1)) {
      throw Error(Errc::MissingHeader, path.string() + ": expected column '" + std::string(prefix) +
                                           std::to_string(j - 1) + "', found '" + fields[j] + "'");
    }
  }
}

void write_comments(std::ostream& out, std::span<const std::string> comment_lines) {
  for (const auto& c : comment_lines) out << "# " << c << '\n';
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<SampleId> ids, std::size_t dim, std::vector<float> data)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (ids_.empty() || dim_ == 0) {
    throw Error(Errc::EmptyMatrix, "embedding matrix needs N >= 1 and D >= 1");
  }
  if (data_.size() != ids_.size() * dim_) {
    throw Error(Errc::DimensionMismatch, "data has " + std::to_string(data_.size()) +
                                             " values, expected " + std::to_string(ids_.size() * dim_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      const std::size_t r = i / dim_ + 1;
      const std::size_t c = i % dim_;
      throw Error(Errc::NonFiniteValue,
                  "non-finite value at row " + std::to_string(r) + ", column " + std::to_string(c), r, c);
    }
  }
  std::unordered_set<SampleId> seen;
  seen.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second) {
      throw Error(Errc::DuplicateId, "duplicate id " + std::to_string(ids_[i]), i + 1);
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::with_contiguous_ids(std::size_t rows, std::size_t dim,
                                                     std::vector<float> data) {
  std::vector<SampleId> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = i;
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

bool EmbeddingMatrix::has_contiguous_ids() const noexcept {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] != i) return false;
  }
  return true;
}

EmbeddingMatrix EmbeddingMatrix::subset(std::span<const std::size_t> positions) const {
  std::vector<SampleId> ids;
  std::vector<float> data;
  ids.reserve(positions.size());
  data.reserve(positions.size() * dim_);
  for (std::size_t p : positions) {
    ids.push_back(ids_.at(p));
    auto r = row(p);
    data.insert(data.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(std::move(ids), dim_, std::move(data));
}

ClassIndex LabelAssignment::at(SampleId id) const {
  auto it = labels.find(id);
  if (it == labels.end()) throw Error(Errc::MissingLabel, "no label for sample id " + std::to_string(id));
  return it->second;
}

std::vector<ClassIndex> LabelAssignment::for_rows(const EmbeddingMatrix& m) const {
  std::vector<ClassIndex> out;
  out.reserve(m.rows());
  for (SampleId id : m.ids()) out.push_back(at(id));
  return out;
}

void validate(const LabelAssignment& labels) {
  if (labels.classes < 2) {
    throw Error(Errc::InvalidParams, "label assignment needs at least 2 classes, got " +
                                         std::to_string(labels.classes));
  }
  for (const auto& [id, label] : labels.labels) {
    if (label >= labels.classes) {
      throw Error(Errc::InvalidParams, "label " + std::to_string(label) + " of id " + std::to_string(id) +
                                           " is not below class count " + std::to_string(labels.classes));
    }
  }
}

PredictionMatrix::PredictionMatrix(std::vector<SampleId> ids, std::size_t classes, std::vector<double> probs)
    : ids_(std::move(ids)), classes_(classes), probs_(std::move(probs)) {
  if (classes_ == 0 || probs_.size() != ids_.size() * classes_) {
    throw Error(Errc::DimensionMismatch, "prediction matrix shape does not match its ids");
  }
  std::unordered_set<SampleId> seen;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second) {
      throw Error(Errc::DuplicateId, "duplicate id " + std::to_string(ids_[i]), i + 1);
    }
    double* r = probs_.data() + i * classes_;
    double sum = 0.0;
    for (std::size_t j = 0; j < classes_; ++j) {
      if (!std::isfinite(r[j])) {
        throw Error(Errc::NonFiniteValue, "non-finite probability at row " + std::to_string(i + 1), i + 1, j);
      }
      if (r[j] < 0.0) {
        throw Error(Errc::NegativeProbability,
                    "negative probability at row " + std::to_string(i + 1) + ", column " + std::to_string(j),
                    i + 1, j);
      }
      sum += r[j];
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.9g", sum);
      throw Error(Errc::RowNotNormalized, "row " + std::to_string(i + 1) + " sums to " + buf, i + 1);
    }
    for (std::size_t j = 0; j < classes_; ++j) {
      if (r[j] > 1.0) {
        throw Error(Errc::RowNotNormalized, "probability above 1 at row " + std::to_string(i + 1), i + 1, j);
      }
      r[j] /= sum;
    }
  }
}

std::string format_float(float value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(value));
  return buf;
}

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path) {
  auto lines = read_csv_lines(path);
  check_header(lines, path, "f");
  const std::size_t width = split_fields(lines.front()).size();
  if (width < 2) throw Error(Errc::MissingHeader, path.string() + ": header has no feature columns");
  const std::size_t dim = width - 1;

  std::vector<SampleId> ids;
  std::vector<float> data;
  std::unordered_set<SampleId> seen;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != width) {
      throw Error(Errc::RaggedRow, "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(width), r);
    }
    SampleId id = parse_id(fields[0], r);
    if (!seen.insert(id).second) throw Error(Errc::DuplicateId, "duplicate id " + std::to_string(id), r);
    ids.push_back(id);
    for (std::size_t j = 0; j < dim; ++j) {
      float v = 0.0f;
      if (!parse_number(fields[j + 1], v)) {
        // from_chars rejects out-of-range literals; "nan"/"inf" parse but are caught below.
        throw Error(Errc::ParseFailure,
                    "row " + std::to_string(r) + ", column " + std::to_string(j) + ": bad number '" +
                        fields[j + 1] + "'",
                    r, j);
      }
      if (!std::isfinite(v)) {
        throw Error(Errc::NonFiniteValue,
                    "non-finite value at row " + std::to_string(r) + ", column " + std::to_string(j), r, j);
      }
      data.push_back(v);
    }
  }
  if (ids.empty()) throw Error(Errc::EmptyMatrix, path.string() + " has no data rows");
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

void write_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path,
                          std::span<const std::string> comment_lines) {
  auto out = open_for_write(path);
  write_comments(out, comment_lines);
  out << "id";
  for (std::size_t j = 0; j < m.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.ids()[i];
    for (float v : m.row(i)) out << ',' << format_float(v);
    out << '\n';
  }
  finish_write(out, path);
}

std::vector<std::uint8_t> encode_embeddings_bin(const EmbeddingMatrix& m) {
  if (!m.has_contiguous_ids()) {
    throw Error(Errc::NonContiguousIds, "EMB1 stores implicit ids 0..N-1; matrix ids are not contiguous");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * m.data().size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  for (float v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix decode_embeddings_bin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    if (bytes.size() < 4) {
      throw Error(Errc::TruncatedFile, "expected at least " + std::to_string(kHeaderBytes) + " bytes, got " +
                                           std::to_string(bytes.size()));
    }
    throw Error(Errc::BadMagic, "file does not start with EMB1");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(Errc::TruncatedFile, "expected at least " + std::to_string(kHeaderBytes) + " bytes, got " +
                                         std::to_string(bytes.size()));
  }
  const std::uint64_t rows = get_u32(bytes.data() + 4);
  const std::uint64_t dim = get_u32(bytes.data() + 8);
  const std::uint64_t expected = kHeaderBytes + 4 * rows * dim;
  if (bytes.size() != expected) {
    throw Error(Errc::TruncatedFile, "expected " + std::to_string(expected) + " bytes, got " +
                                         std::to_string(bytes.size()));
  }
  std::vector<float> data(rows * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes.data() + kHeaderBytes + 4 * i));
  }
  return EmbeddingMatrix::with_contiguous_ids(rows, dim, std::move(data));
}

EmbeddingMatrix read_embeddings_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings_bin(bytes);
}

void write_embeddings_bin(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  auto bytes = encode_embeddings_bin(m);
  auto out = open_for_write(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  finish_write(out, path);
}

LabelAssignment read_labels(const std::filesystem::path& path) {
  auto lines = read_csv_lines(path);
  if (lines.empty() || split_fields(lines.front()) != std::vector<std::string>{"id", "label"}) {
    throw Error(Errc::MissingHeader, path.string() + ": expected header 'id,label'");
  }
  LabelAssignment out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != 2) {
      throw Error(Errc::RaggedRow, "row " + std::to_string(r) + " must have 2 fields", r);
    }
    SampleId id = parse_id(fields[0], r);
    long long label = 0;
    if (!parse_number(fields[1], label)) {
      throw Error(Errc::ParseFailure, "row " + std::to_string(r) + ": bad label '" + fields[1] + "'", r, 1);
    }
    if (label < 0) throw Error(Errc::NegativeLabel, "row " + std::to_string(r) + " has negative label", r, 1);
    if (!out.labels.emplace(id, static_cast<ClassIndex>(label)).second) {
      throw Error(Errc::DuplicateId, "duplicate id " + std::to_string(id), r);
    }
    out.classes = std::max<std::size_t>(out.classes, static_cast<std::size_t>(label) + 1);
  }
  return out;
}

void write_labels(const LabelAssignment& labels, const std::filesystem::path& path,
                  std::span<const std::string> comment_lines) {
  auto out = open_for_write(path);
  write_comments(out, comment_lines);
  out << "id,label\n";
  for (const auto& [id, label] : labels.labels) out << id << ',' << label << '\n';
  finish_write(out, path);
}

PredictionMatrix read_predictions(const std::filesystem::path& path) {
  auto lines = read_csv_lines(path);
  check_header(lines, path, "p");
  const std::size_t width = split_fields(lines.front()).size();
  if (width < 2) throw Error(Errc::MissingHeader, path.string() + ": header has no probability columns");
  const std::size_t classes = width - 1;
  std::vector<SampleId> ids;
  std::vector<double> probs;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_fields(lines[r]);
    if (fields.size() != width) {
      throw Error(Errc::RaggedRow, "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                                       " fields, expected " + std::to_string(width), r);
    }
    ids.push_back(parse_id(fields[0], r));
    for (std::size_t j = 0; j < classes; ++j) {
      double v = 0.0;
      if (!parse_number(fields[j + 1], v)) {
        throw Error(Errc::ParseFailure, "row " + std::to_string(r) + ": bad number '" + fields[j + 1] + "'", r, j);
      }
      probs.push_back(v);
    }
  }
  return PredictionMatrix(std::move(ids), classes, std::move(probs));
}

void write_predictions(const PredictionMatrix& preds, const std::filesystem::path& path,
                       std::span<const std::string> comment_lines) {
  auto out = open_for_write(path);
  write_comments(out, comment_lines);
  out << "id";
  for (std::size_t j = 0; j < preds.classes(); ++j) out << ",p" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < preds.rows(); ++i) {
    out << preds.ids()[i];
    for (double p : preds.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      out << ',' << buf;
    }
    out << '\n';
  }
  finish_write(out, path);
}

}  // namespace labelsel
