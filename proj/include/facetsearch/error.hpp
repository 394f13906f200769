#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace facetsearch {

// Domain errors. The CLI maps any facetsearch::Error to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateAsin : public Error {
 public:
  explicit DuplicateAsin(const std::string& asin)
      : Error("duplicate asin: " + asin), asin_(asin) {}
  const std::string& asin() const { return asin_; }

 private:
  std::string asin_;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& why)
      : Error("malformed record at line " + std::to_string(line) + ": " + why),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class OutOfRangeRating : public Error {
 public:
  OutOfRangeRating(std::size_t line, double rating)
      : Error("average_rating " + std::to_string(rating) +
              " outside [0,5] at line " + std::to_string(line)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class NonSquare : public Error {
 public:
  NonSquare(std::size_t rows, std::size_t cols)
      : Error("score matrix must be square and non-empty, got " +
              std::to_string(rows) + "x" + std::to_string(cols)) {}
};

class EmptyTrainingSet : public Error {
 public:
  EmptyTrainingSet() : Error("no trainable batches: training set is empty") {}
};

class TooFewVectors : public Error {
 public:
  TooFewVectors(std::size_t have, std::size_t nlist)
      : Error("k-means needs at least nlist=" + std::to_string(nlist) +
              " vectors, got " + std::to_string(have)) {}
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::int64_t id)
      : Error("duplicate id: " + std::to_string(id)), id_(id) {}
  std::int64_t id() const { return id_; }

 private:
  std::int64_t id_;
};

class NprobeOutOfRange : public Error {
 public:
  NprobeOutOfRange(std::size_t nprobe, std::size_t nlist)
      : Error("nprobe " + std::to_string(nprobe) + " outside [1, " +
              std::to_string(nlist) + "]") {}
};

class CorruptFile : public Error {
 public:
  explicit CorruptFile(const std::string& reason)
      : Error("corrupt file: " + reason) {}
};

class VersionMismatch : public Error {
 public:
  VersionMismatch(const std::string& what, std::uint32_t expected,
                  std::uint32_t got)
      : Error(what + " version mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class InconsistentBounds : public Error {
 public:
  explicit InconsistentBounds(const std::string& field)
      : Error("inconsistent bounds on " + field + ": min > max") {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& why)
      : Error("parse error at byte " + std::to_string(position) + ": " + why),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class EmptyRelevantSet : public Error {
 public:
  EmptyRelevantSet() : Error("relevant set is empty") {}
};

class MissingAsin : public Error {
 public:
  explicit MissingAsin(const std::string& asin)
      : Error("asin not in catalog: " + asin), asin_(asin) {}
  const std::string& asin() const { return asin_; }

 private:
  std::string asin_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace facetsearch
