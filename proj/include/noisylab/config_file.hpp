#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace noisylab {

/// Plain structured text: `key = value` lines plus named matrix blocks.
///
///     # comment
///     classes = Effusion,Mass
///     begin covariance 2 2
///     0.25 0.01
///     0.01 0.16
///     end
///
/// Keys keep their first-seen order when written back out. Repeated keys are
/// kept (see `all`) so lists such as experiment configurations can be spelled
/// one per line.
class StructuredText {
 public:
  void set(const std::string& key, const std::string& value);
  void add(const std::string& key, const std::string& value);
  void set_matrix(const std::string& name, const Eigen::MatrixXd& m);

  bool has(const std::string& key) const;
  bool has_matrix(const std::string& name) const;

  /// Last value for the key; throws DataError when absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int_or(const std::string& key, long long fallback) const;
  std::vector<std::string> all(const std::string& key) const;
  const Eigen::MatrixXd& matrix(const std::string& name) const;

  void write(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

  static StructuredText parse(std::istream& is, const std::string& source = "<stream>");
  static StructuredText load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::pair<std::string, Eigen::MatrixXd>> matrices_;
};

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string join(const std::vector<std::string>& parts, const std::string& sep);

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

}  // namespace noisylab
