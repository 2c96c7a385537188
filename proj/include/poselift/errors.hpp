#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poselift {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidSkeleton : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  BehindCamera(std::size_t frame, std::size_t joint, double depth)
      : Error("joint " + std::to_string(joint) + " of frame " + std::to_string(frame) +
              " is behind the camera (Z=" + std::to_string(depth) + " mm)"),
        frame_(frame),
        joint_(joint) {}

  std::size_t frame() const { return frame_; }
  std::size_t joint() const { return joint_; }

 private:
  std::size_t frame_;
  std::size_t joint_;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

// An evaluation-only aggregator or oracle was requested without ground truth.
class MissingGroundTruth : public Error {
 public:
  using Error::Error;
};

class DegenerateAlignment : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(std::size_t layer, const std::string& what)
      : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace poselift
