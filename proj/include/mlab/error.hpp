#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Syntax error in a symbol expression; offset is a byte index into the text.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

// Configuration document does not match the schema; path is a JSON pointer.
class ConfigError : public Error {
public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

}  // namespace mlab
