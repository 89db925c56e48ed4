#pragma once

#include <stdexcept>
#include <string>

namespace noisylab {

/// Process exit status used by the command line tool for each error family.
enum class ExitCode : int { Ok = 0, Usage = 1, Data = 2, Numerical = 3 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), code_(code), name_(std::move(name)) {}

  ExitCode code() const noexcept { return code_; }
  const std::string& name() const noexcept { return name_; }

 private:
  ExitCode code_;
  std::string name_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ExitCode::Usage, "UsageError", what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ExitCode::Data, "DataError", what) {}
  DataError(std::string name, const std::string& what) : Error(ExitCode::Data, std::move(name), what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what)
      : Error(ExitCode::Numerical, "NumericalError", what) {}
  NumericalError(std::string name, const std::string& what)
      : Error(ExitCode::Numerical, std::move(name), what) {}
};

/// Histogram has fewer than two occupied bins (constant image).
struct DegenerateHistogram : DataError {
  explicit DegenerateHistogram(const std::string& what) : DataError("DegenerateHistogram", what) {}
};

/// AUC requested for labels containing a single class.
struct UndefinedAuc : DataError {
  explicit UndefinedAuc(const std::string& what) : DataError("UndefinedAuc", what) {}
};

/// Report requested over a directory without any prediction files.
struct NoResults : DataError {
  explicit NoResults(const std::string& what) : DataError("NoResults", what) {}
};

}  // namespace noisylab
