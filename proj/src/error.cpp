#include "labelsel/error.hpp"

namespace labelsel {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingHeader: return "MissingHeader";
    case Errc::RaggedRow: return "RaggedRow";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::NonContiguousIds: return "NonContiguousIds";
    case Errc::IoFailure: return "IoFailure";
    case Errc::NegativeLabel: return "NegativeLabel";
    case Errc::RowNotNormalized: return "RowNotNormalized";
    case Errc::NegativeProbability: return "NegativeProbability";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::KExceedsN: return "KExceedsN";
    case Errc::UnsplittableCluster: return "UnsplittableCluster";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::NExceedsPopulation: return "NExceedsPopulation";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::NLessThanClassCount: return "NLessThanClassCount";
    case Errc::MissingLabel: return "MissingLabel";
    case Errc::NotNormalized: return "NotNormalized";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::MissingPrediction: return "MissingPrediction";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::EpochOutOfRange: return "EpochOutOfRange";
    case Errc::ScheduleExceedsSelection: return "ScheduleExceedsSelection";
    case Errc::EmptyUnlabelledBatch: return "EmptyUnlabelledBatch";
    case Errc::ScheduleMismatch: return "ScheduleMismatch";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> row,
             std::optional<std::size_t> col)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what),
      code_(code),
      row_(row),
      col_(col) {}

}  // namespace labelsel
