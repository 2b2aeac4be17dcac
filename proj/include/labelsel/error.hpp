#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace labelsel {

enum class Errc {
  // ingest
  MissingHeader,
  RaggedRow,
  NonFiniteValue,
  DuplicateId,
  BadMagic,
  TruncatedFile,
  NonContiguousIds,
  IoFailure,
  NegativeLabel,
  RowNotNormalized,
  NegativeProbability,
  ParseFailure,
  EmptyMatrix,
  // cluster
  KExceedsN,
  UnsplittableCluster,
  DimensionMismatch,
  InvalidParams,
  // select
  NExceedsPopulation,
  ClassTooSmall,
  NLessThanClassCount,
  MissingLabel,
  // curriculum
  NotNormalized,
  NegativeEntry,
  MissingPrediction,
  // policy
  InvalidSpec,
  EpochOutOfRange,
  ScheduleExceedsSelection,
  // sslsim
  EmptyUnlabelledBatch,
  ScheduleMismatch,
  // bench
  ConfigError,
};

std::string_view errc_name(Errc code) noexcept;

/// Every module reports failures through this exception. `row`/`col` are
/// set when the failure can be pinned to a location in an input file
/// (rows are 1-based data rows, columns 0-based value columns).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> row = std::nullopt,
        std::optional<std::size_t> col = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  std::optional<std::size_t> col() const noexcept { return col_; }

 private:
  Errc code_;
  std::optional<std::size_t> row_;
  std::optional<std::size_t> col_;
};

}  // namespace labelsel
