#pragma once

#include "mmsf/error.hpp"

namespace mmsf::transport {

class TransportError : public Error {
 public:
  using Error::Error;
};

class ConnectError : public TransportError {
 public:
  using TransportError::TransportError;
};

class IoError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ChecksumError : public TransportError {
 public:
  using TransportError::TransportError;
};

class BindError : public TransportError {
 public:
  using TransportError::TransportError;
};

class RouteError : public TransportError {
 public:
  using TransportError::TransportError;
};

}  // namespace mmsf::transport
