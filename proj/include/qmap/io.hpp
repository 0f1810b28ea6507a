#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "quantize.hpp"
#include "sensing.hpp"
#include "solver.hpp"
#include "sources.hpp"
#include "tuple.hpp"

namespace qmap {

using json = nlohmann::json;

// Shortest round-trip decimal text, independent of the C locale.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) throw InputError("empty numeric field");
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InputError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- kernels ---------------------------------------------------------------
// {"b":…, "k":…, "lo":…, "hi":…, "rows":[{"context":[indices], "probs":[…]}…]}
// Every context appears exactly once; the stationary marginal is computed.

inline QuantKernel kernel_from_json(const json& j) {
  try {
    for (const char* key : {"b", "k", "lo", "hi", "rows"}) {
      if (!j.contains(key)) throw InputError(std::string("kernel: missing \"") + key + "\"");
    }
    for (const auto& [key, _] : j.items()) {
      if (key != "b" && key != "k" && key != "lo" && key != "hi" && key != "rows") {
        throw InputError("kernel: unknown key \"" + key + "\"");
      }
    }
    QuantKernel q;
    q.alphabet = build_alphabet(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("b").get<int>());
    q.k = j.at("k").get<int>();
    if (q.k < 0) throw InputError("kernel: k must be >= 0");
    const std::size_t S = q.symbols();
    const std::size_t C = checked_pow(S, q.k, kMaxDenseTuples);
    q.probs.assign(C * S, 0.0);
    std::vector<char> seen(C, 0);
    const auto& rows = j.at("rows");
    if (!rows.is_array()) throw InputError("kernel: rows must be an array");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      const auto ctx = row.at("context").get<std::vector<Symbol>>();
      const auto probs = row.at("probs").get<std::vector<double>>();
      const std::string where = "kernel row " + std::to_string(r);
      if (ctx.size() != static_cast<std::size_t>(q.k)) throw InputError(where + ": context length must be k");
      for (Symbol s : ctx) {
        if (s >= S) throw InputError(where + ": context symbol out of range");
      }
      if (probs.size() != S) throw InputError(where + ": expected " + std::to_string(S) + " probabilities");
      const std::size_t c = tuple_index(ctx, S);
      if (seen[c]) throw InputError(where + ": duplicate context");
      seen[c] = 1;
      std::copy(probs.begin(), probs.end(), q.probs.begin() + static_cast<std::ptrdiff_t>(c * S));
    }
    for (std::size_t c = 0; c < C; ++c) {
      if (!seen[c]) throw InputError("kernel: context " + std::to_string(c) + " has no row");
    }
    q.validate_rows();
    q.marginal = stationary_contexts(q.probs, S, q.k);
    q.validate();
    return q;
  } catch (const json::exception& e) {
    throw InputError(std::string("kernel: ") + e.what());
  }
}

inline json kernel_to_json(const QuantKernel& q) {
  json rows = json::array();
  const std::size_t S = q.symbols();
  for (std::size_t c = 0; c < q.contexts(); ++c) {
    std::vector<double> probs(q.probs.begin() + static_cast<std::ptrdiff_t>(c * S),
                              q.probs.begin() + static_cast<std::ptrdiff_t>((c + 1) * S));
    rows.push_back({{"context", tuple_symbols(c, S, q.k)}, {"probs", probs}});
  }
  return {{"b", q.alphabet.bits()}, {"k", q.k}, {"lo", q.alphabet.lo()}, {"hi", q.alphabet.hi()}, {"rows", rows}};
}

inline QuantKernel load_kernel(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
  return kernel_from_json(j);
}

// ---- matrices --------------------------------------------------------------
// Raw little-endian float64, row-major, plus a JSON sidecar at <path>.json:
// {"m":…, "n":…, "scale":…, "seed":…}.

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline void save_matrix(const SenseMatrix& A, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  const Eigen::Index count = A.a.size();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(count) * 8);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(A.a.data()[i]);
    for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(i) * 8 + b] = (bits >> (8 * b)) & 0xffu;
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing " + path);
  std::ofstream side(sidecar_path(path));
  side << json{{"m", A.rows()}, {"n", A.cols()}, {"scale", to_string(A.scale)}, {"seed", A.seed}}.dump() << '\n';
  if (!side) throw InputError("failed writing " + sidecar_path(path));
}

inline SenseMatrix load_matrix(const std::string& path) {
  json side;
  try {
    side = json::parse(read_file(sidecar_path(path)));
  } catch (const json::parse_error& e) {
    throw InputError(sidecar_path(path) + ": " + e.what());
  }
  SenseMatrix A;
  Eigen::Index m = 0, n = 0;
  try {
    m = side.at("m").get<Eigen::Index>();
    n = side.at("n").get<Eigen::Index>();
    A.scale = parse_scale(side.at("scale").get<std::string>());
    A.seed = side.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw InputError(sidecar_path(path) + ": " + e.what());
  }
  if (m < 1 || n < 1) throw InputError(sidecar_path(path) + ": dimensions must be positive");
  const std::string raw = read_file(path);
  if (raw.size() != static_cast<std::size_t>(m * n) * 8) {
    throw InputError(path + ": expected " + std::to_string(m * n * 8) + " bytes, found " +
                     std::to_string(raw.size()));
  }
  A.a.resize(m, n);
  for (Eigen::Index i = 0; i < m * n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[static_cast<std::size_t>(i) * 8 + b]))
              << (8 * b);
    }
    A.a.data()[i] = std::bit_cast<double>(bits);
  }
  return A;
}

// ---- CSV -------------------------------------------------------------------

// Reads one column of numbers. Blank lines and lines starting with '#' are
// skipped, as is a non-numeric first line (header). Multi-column rows use the
// named or first column.
inline std::vector<double> read_vector_csv(const std::string& path, const std::string& column = "") {
  std::istringstream in(read_file(path));
  std::vector<double> out;
  std::string line;
  std::size_t col = 0;
  bool first = true;
  std::size_t lineno = 0;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : l) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    f.push_back(cur);
    return f;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto fields = split(line);
    if (first) {
      first = false;
      bool numeric = true;
      try {
        parse_double(fields[0]);
      } catch (const InputError&) {
        numeric = false;
      }
      if (!numeric || !column.empty()) {
        if (numeric) throw InputError(path + ": column '" + column + "' requested but file has no header");
        col = 0;
        if (!column.empty()) {
          const auto it = std::find(fields.begin(), fields.end(), column);
          if (it == fields.end()) throw InputError(path + ": no column named '" + column + "'");
          col = static_cast<std::size_t>(it - fields.begin());
        }
        continue;
      }
    }
    if (col >= fields.size()) throw InputError(path + ":" + std::to_string(lineno) + ": missing column");
    try {
      out.push_back(parse_double(fields[col]));
    } catch (const InputError& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (out.empty()) throw InputError(path + ": no values");
  return out;
}

inline void write_trace_csv(std::ostream& out, const PgdTrace& trace) {
  out << "t,residual,cost,err_quantized,err_analog\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << format_double(r.residual) << ',' << format_double(r.cost) << ','
        << format_double(r.err_quantized) << ',' << format_double(r.err_analog) << '\n';
  }
}

}  // namespace qmap
