// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace docmt {

// Base class for every error docmt raises. Each concrete type corresponds to
// one documented failure class so callers (and the CLI exit-code mapping) can
// catch precisely what they can handle.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// numerics
struct ShapeError : Error { using Error::Error; };
struct FullyMaskedRow : Error { using Error::Error; };
struct NonScalarLoss : Error { using Error::Error; };

// corpus / data
struct AlignmentMismatch : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };
struct UnknownId : Error { using Error::Error; };

// context assembly
struct SourceTooLong : Error { using Error::Error; };
struct EmptySource : Error { using Error::Error; };

// model
struct PositionOverflow : Error { using Error::Error; };
struct IdOutOfRange : Error { using Error::Error; };
struct EmptyPrefix : Error { using Error::Error; };

// checkpoints
struct BadMagic : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct DuplicateName : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct VocabMismatch : Error { using Error::Error; };

// training
struct TrainingDiverged : Error { using Error::Error; };
struct ExampleTooLong : Error { using Error::Error; };

// metrics
struct LengthMismatch : Error { using Error::Error; };

// configuration / io
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace docmt
