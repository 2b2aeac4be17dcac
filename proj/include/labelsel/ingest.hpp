#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "labelsel/error.hpp"

namespace labelsel {

using SampleId = std::uint64_t;
using ClassIndex = std::uint32_t;

/// N x D feature matrix with one stable id per row. Values are stored as
/// 32-bit floats, the precision of the EMB1 format.
class EmbeddingMatrix {
 public:
  /// Validates the invariants: N >= 1, D >= 1, finite values, unique ids.
  EmbeddingMatrix(std::vector<SampleId> ids, std::size_t dim, std::vector<float> data);

  /// Ids 0..rows-1.
  static EmbeddingMatrix with_contiguous_ids(std::size_t rows, std::size_t dim,
                                             std::vector<float> data);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<SampleId>& ids() const noexcept { return ids_; }
  const std::vector<float>& data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  float at(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  bool has_contiguous_ids() const noexcept;

  /// Rows at `positions`, in that order, keeping their ids.
  EmbeddingMatrix subset(std::span<const std::size_t> positions) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::vector<SampleId> ids_;
  std::size_t dim_;
  std::vector<float> data_;
};

struct LabelAssignment {
  std::map<SampleId, ClassIndex> labels;
  std::size_t classes = 0;

  /// Throws MissingLabel when `id` has no entry.
  ClassIndex at(SampleId id) const;

  /// Label of every row of `m`, in row order.
  std::vector<ClassIndex> for_rows(const EmbeddingMatrix& m) const;

  friend bool operator==(const LabelAssignment&, const LabelAssignment&) = default;
};

/// Validates classes >= 2 and every label < classes.
void validate(const LabelAssignment& labels);

class PredictionMatrix {
 public:
  /// Rows must sum to 1 within 1e-5 and lie in [0, 1]; rows are renormalized.
  PredictionMatrix(std::vector<SampleId> ids, std::size_t classes, std::vector<double> probs);

  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t classes() const noexcept { return classes_; }
  const std::vector<SampleId>& ids() const noexcept { return ids_; }
  std::span<const double> row(std::size_t i) const {
    return {probs_.data() + i * classes_, classes_};
  }

 private:
  std::vector<SampleId> ids_;
  std::size_t classes_;
  std::vector<double> probs_;
};

inline constexpr double kRowSumTolerance = 1e-5;

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path);
void write_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path,
                          std::span<const std::string> comment_lines = {});

EmbeddingMatrix read_embeddings_bin(const std::filesystem::path& path);
void write_embeddings_bin(const EmbeddingMatrix& m, const std::filesystem::path& path);

/// EMB1 encoding in memory: "EMB1", u32 LE rows, u32 LE dim, f32 LE row-major.
std::vector<std::uint8_t> encode_embeddings_bin(const EmbeddingMatrix& m);
EmbeddingMatrix decode_embeddings_bin(std::span<const std::uint8_t> bytes);

LabelAssignment read_labels(const std::filesystem::path& path);
void write_labels(const LabelAssignment& labels, const std::filesystem::path& path,
                  std::span<const std::string> comment_lines = {});

PredictionMatrix read_predictions(const std::filesystem::path& path);
void write_predictions(const PredictionMatrix& preds, const std::filesystem::path& path,
                       std::span<const std::string> comment_lines = {});

/// Shortest decimal text that is guaranteed to parse back to the same float.
std::string format_float(float value);

}  // namespace labelsel
