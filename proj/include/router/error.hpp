#pragma once

#include <stdexcept>
#include <string>

namespace router {

/// Failure categories; values double as CLI exit codes.
enum class ErrorKind : int { Domain = 1, Io = 2, Numeric = 3 };

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, std::string const &what)
    : std::runtime_error(what)
    , kind_(kind)
  {
  }
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct DomainError : Error
{
  explicit DomainError(std::string const &what)
    : Error(ErrorKind::Domain, what)
  {
  }
};

struct IoError : Error
{
  explicit IoError(std::string const &what)
    : Error(ErrorKind::Io, what)
  {
  }
};

struct NumericError : Error
{
  explicit NumericError(std::string const &what)
    : Error(ErrorKind::Numeric, what)
  {
  }
};

} // namespace router
