#pragma once

#include <stdexcept>
#include <string>

namespace tabnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Raised by infer_cutout_box when a slice carries no foreground scribble.
class NoForeground : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed files: checkpoints, NIfTI volumes, manifests.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A loss term went NaN/Inf; the message names the term.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace tabnet
