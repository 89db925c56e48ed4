#include "noisylab/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "noisylab/error.hpp"

namespace noisylab {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) {
      out += sep;
    }
    out += parts[i];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError(context + ": expected a number, got '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError(context + ": expected an integer, got '" + s + "'");
  }
  return v;
}

void StructuredText::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void StructuredText::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

void StructuredText::set_matrix(const std::string& name, const Eigen::MatrixXd& m) {
  for (auto& [k, v] : matrices_) {
    if (k == name) {
      v = m;
      return;
    }
  }
  matrices_.emplace_back(name, m);
}

bool StructuredText::has(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) {
      return true;
    }
  }
  return false;
}

bool StructuredText::has_matrix(const std::string& name) const {
  for (const auto& m : matrices_) {
    if (m.first == name) {
      return true;
    }
  }
  return false;
}

const std::string& StructuredText::get(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) {
      return it->second;
    }
  }
  throw DataError("missing key '" + key + "'");
}

std::string StructuredText::get_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double StructuredText::get_double(const std::string& key) const { return parse_double(get(key), key); }

double StructuredText::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long StructuredText::get_int(const std::string& key) const { return parse_int(get(key), key); }

long long StructuredText::get_int_or(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<std::string> StructuredText::all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.first == key) {
      out.push_back(e.second);
    }
  }
  return out;
}

const Eigen::MatrixXd& StructuredText::matrix(const std::string& name) const {
  for (const auto& m : matrices_) {
    if (m.first == name) {
      return m.second;
    }
  }
  throw DataError("missing matrix block '" + name + "'");
}

void StructuredText::write(std::ostream& os) const {
  for (const auto& [k, v] : entries_) {
    os << k << " = " << v << '\n';
  }
  for (const auto& [name, m] : matrices_) {
    os << "begin " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        os << (c ? " " : "") << format_double(m(r, c));
      }
      os << '\n';
    }
    os << "end\n";
  }
}

void StructuredText::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw DataError("cannot write " + path.string());
  }
  write(os);
}

StructuredText StructuredText::parse(std::istream& is, const std::string& source) {
  StructuredText doc;
  std::string line;
  int lineno = 0;
  auto where = [&] { return source + ":" + std::to_string(lineno); };
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    if (t.rfind("begin ", 0) == 0) {
      std::istringstream hdr(t.substr(6));
      std::string name;
      long long rows = -1, cols = -1;
      if (!(hdr >> name >> rows >> cols) || rows < 0 || cols < 0) {
        throw DataError(where() + ": malformed matrix header");
      }
      Eigen::MatrixXd m(rows, cols);
      for (long long r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) {
          throw DataError(where() + ": matrix '" + name + "' truncated");
        }
        ++lineno;
        std::istringstream row(line);
        std::string tok;
        for (long long c = 0; c < cols; ++c) {
          if (!(row >> tok)) {
            throw DataError(where() + ": matrix '" + name + "' row has too few values");
          }
          m(r, c) = parse_double(tok, where());
        }
        if (row >> tok) {
          throw DataError(where() + ": matrix '" + name + "' row has too many values");
        }
      }
      if (!std::getline(is, line) || trim(line) != "end") {
        ++lineno;
        throw DataError(where() + ": matrix '" + name + "' missing 'end'");
      }
      ++lineno;
      doc.set_matrix(name, m);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(where() + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw DataError(where() + ": empty key");
    }
    doc.add(key, trim(t.substr(eq + 1)));
  }
  return doc;
}

StructuredText StructuredText::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw DataError("cannot read " + path.string());
  }
  return parse(is, path.string());
}

}  // namespace noisylab
