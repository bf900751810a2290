#pragma once

#include <stdexcept>
#include <string>

namespace tabmda {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// numerics
struct EmptyInput : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };

// encoder
struct TooManyFeatures : Error { using Error::Error; };
struct TooManyClasses : Error { using Error::Error; };
struct EmptyContext : Error { using Error::Error; };

// weight files
struct NotAWeightFile : Error { using Error::Error; };
struct CorruptWeights : Error { using Error::Error; };
struct VersionError : Error { using Error::Error; };

// augmentation
struct ContextTooSmall : Error { using Error::Error; };
struct ContextTooLarge : Error { using Error::Error; };

// classifiers
struct EmptyTrain : Error { using Error::Error; };
struct SingleClassError : Error { using Error::Error; };

// harness
struct StratifyError : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct MissingCell : Error { using Error::Error; };

// data ingestion
struct MissingValue : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct RegistryMismatch : Error { using Error::Error; };

// configuration
struct ConfigError : Error { using Error::Error; };

// runtime (I/O and similar unexpected failures)
struct RuntimeError : Error { using Error::Error; };

} // namespace tabmda
