#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "geomae/datasets.hpp"
#include "geomae/errors.hpp"

namespace geomae {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool is_latent_name(std::string_view name, std::string_view prefix) {
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return false;
  for (char c : name.substr(prefix.size())) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

double parse_cell(std::string_view cell, std::size_t lineno, std::string_view column) {
  // from_chars rejects a leading '+', which other writers sometimes emit.
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
    throw FormatError("csv line " + std::to_string(lineno) + ", column " + std::string(column) +
                      ": not a number: '" + std::string(cell) + "'");
  }
  if (!std::isfinite(v)) {
    throw FormatError("csv line " + std::to_string(lineno) + ", column " + std::string(column) +
                      ": non-finite value '" + std::string(cell) + "'");
  }
  return v;
}

void append_number(std::string& out, double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace

EmbeddingFrame read_csv(std::istream& is, const CsvSchema& schema) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    for (std::string_view h : split(line)) header.emplace_back(h);
    break;
  }
  if (header.empty()) throw FormatError("csv: missing header row");

  enum class Role { x, z, label };
  std::vector<Role> roles;
  std::size_t nx = 0;
  std::size_t nz = 0;
  bool have_label = false;
  for (const std::string& h : header) {
    if (h == schema.label_column) {
      if (have_label) throw FormatError("csv: duplicate label column '" + h + "'");
      roles.push_back(Role::label);
      have_label = true;
    } else if (is_latent_name(h, schema.latent_prefix)) {
      roles.push_back(Role::z);
      ++nz;
    } else {
      roles.push_back(Role::x);
      ++nx;
    }
  }

  std::vector<double> xs;
  std::vector<double> zs;
  EmbeddingFrame frame;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError("csv line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = parse_cell(cells[c], lineno, header[c]);
      switch (roles[c]) {
        case Role::x: xs.push_back(v); break;
        case Role::z: zs.push_back(v); break;
        case Role::label:
          if (v != std::floor(v) || std::abs(v) > 1e9) {
            throw FormatError("csv line " + std::to_string(lineno) + ": label is not an integer");
          }
          frame.labels.push_back(static_cast<int>(v));
          break;
      }
    }
    if (!have_label) frame.labels.push_back(0);
  }
  const auto m = static_cast<Eigen::Index>(frame.labels.size());
  frame.x = Eigen::Map<const Matrix>(xs.data(), m, static_cast<Eigen::Index>(nx));
  if (nz > 0) frame.z = Eigen::Map<const Matrix>(zs.data(), m, static_cast<Eigen::Index>(nz));
  return frame;
}

EmbeddingFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_csv(in, schema);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_csv(std::ostream& os, const EmbeddingFrame& frame) {
  frame.validate();
  std::string out;
  bool first = true;
  auto sep = [&] {
    if (!first) out += ',';
    first = false;
  };
  for (Eigen::Index c = 0; c < frame.x.cols(); ++c) {
    sep();
    out += "x" + std::to_string(c);
  }
  const Eigen::Index l = frame.z ? frame.z->cols() : 0;
  for (Eigen::Index c = 0; c < l; ++c) {
    sep();
    out += "z" + std::to_string(c);
  }
  sep();
  out += "label\n";
  for (Eigen::Index r = 0; r < frame.x.rows(); ++r) {
    first = true;
    for (Eigen::Index c = 0; c < frame.x.cols(); ++c) {
      sep();
      append_number(out, frame.x(r, c));
    }
    for (Eigen::Index c = 0; c < l; ++c) {
      sep();
      append_number(out, (*frame.z)(r, c));
    }
    sep();
    out += std::to_string(frame.labels[static_cast<std::size_t>(r)]);
    out += '\n';
  }
  os << out;
}

void save_csv(const std::filesystem::path& path, const EmbeddingFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, frame);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace geomae
