#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "actint/compiler.hpp"
#include "actint/network.hpp"
#include "actint/partition.hpp"
#include "actint/trainer.hpp"

namespace actint {

/// 17 significant digits: enough to round-trip any double.
inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(std::string_view text) {
  const std::string s(text);
  if (s.empty()) throw Error(ErrorKind::Parse, "empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v) || (errno == ERANGE && std::fabs(v) > 1.0))
    throw Error(ErrorKind::Parse, "not a finite number: '" + s + "'");
  return v;
}

// ---------------------------------------------------------------------------
// Network documents (JSON, format_version 1)

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw Error(ErrorKind::Parse, std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::Parse, "unknown field '" + key + "' in " + std::string(where));
  }
}

inline const json& require(const json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::Parse, "missing field '" + std::string(key) + "' in " + std::string(where));
  return *it;
}

inline json reals_to_json(std::span<const double> xs) {
  json arr = json::array();
  for (double x : xs) arr.push_back(format_real(x));
  return arr;
}

inline std::vector<double> reals_from_json(const json& arr, std::string_view where) {
  if (!arr.is_array()) throw Error(ErrorKind::Parse, std::string(where) + " must be an array of decimal strings");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_string()) throw Error(ErrorKind::Parse, std::string(where) + " entries must be decimal strings");
    out.push_back(parse_real(v.get<std::string>()));
  }
  return out;
}

inline std::size_t size_from_json(const json& v, std::string_view where) {
  if (!v.is_number_unsigned()) throw Error(ErrorKind::Parse, std::string(where) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::string activation_tag(const std::optional<Activation>& a) { return a ? std::string(to_string(*a)) : "none"; }

inline std::optional<Activation> activation_from_json(const json& v, bool allow_none, std::string_view where) {
  if (!v.is_string()) throw Error(ErrorKind::Parse, std::string(where) + ": activation must be a string");
  const auto tag = v.get<std::string>();
  if (allow_none && tag == "none") return std::nullopt;
  const auto a = parse_activation(tag);
  if (!a || tag == "linear" || tag == "hardlinear")
    throw Error(ErrorKind::Parse, std::string(where) + ": unknown activation '" + tag + "'");
  return a;
}

inline std::string route_tag(const Route& r) { return r.is_block() ? "block:" + std::to_string(r.block) : "previous"; }

inline Route route_from_json(const json& v, std::string_view where) {
  if (!v.is_string()) throw Error(ErrorKind::Parse, std::string(where) + ": route must be a string");
  const auto tag = v.get<std::string>();
  if (tag == "previous") return Route::previous();
  if (tag.rfind("block:", 0) == 0 && tag.size() > 6 &&
      tag.find_first_not_of("0123456789", 6) == std::string::npos)
    return Route::from_block(std::stoul(tag.substr(6)));
  throw Error(ErrorKind::Parse, std::string(where) + ": bad route '" + tag + "'");
}

inline void put_matrix(json& j, const Matrix& m) {
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["weights"] = reals_to_json(m.data());
}

inline Matrix matrix_from_json(const json& j, std::string_view where) {
  const auto rows = size_from_json(require(j, "rows", where), where);
  const auto cols = size_from_json(require(j, "cols", where), where);
  auto data = reals_from_json(require(j, "weights", where), where);
  if (data.size() != rows * cols) throw Error(ErrorKind::Parse, std::string(where) + ": weight count != rows*cols");
  return Matrix(rows, cols, std::move(data));
}

inline json to_json(const NetworkSpec& net);
inline NetworkSpec network_from_json(const json& doc);

inline json layer_to_json(const LayerSpec& layer, const Route& route) {
  json j;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, DenseActivated>) {
          j["kind"] = "dense";
          put_matrix(j, l.weights);
          j["activation"] = std::string(to_string(l.activation));
        } else if constexpr (std::is_same_v<T, LinearOnly>) {
          j["kind"] = "linear";
          put_matrix(j, l.weights);
          j["bias"] = l.has_bias;
        } else if constexpr (std::is_same_v<T, SharedWeight>) {
          j["kind"] = "shared";
          j["kernel"] = reals_to_json(l.kernel);
          j["stride"] = l.stride;
          j["activation"] = activation_tag(l.activation);
        } else if constexpr (std::is_same_v<T, RecurrentStep>) {
          j["kind"] = "recurrent";
          j["state_weight"] = format_real(l.state_weight);
          put_matrix(j, l.input_weights);
          j["activation"] = activation_tag(l.activation);
        } else if constexpr (std::is_same_v<T, Residual>) {
          j["kind"] = "residual";
          j["inner"] = to_json(*l.inner);
        }
      },
      layer);
  j["route"] = route_tag(route);
  return j;
}

inline json to_json(const NetworkSpec& net) {
  json doc;
  doc["format_version"] = 1;
  doc["input_arity"] = net.input_arity();
  doc["input_blocks"] = std::vector<std::size_t>(net.blocks().begin(), net.blocks().end());
  doc["combine"] = "none";
  json layers = json::array();
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (const auto* c = std::get_if<Combine>(&net.layer(i))) {
      doc["combine"] = c->mode == CombineMode::Sum ? "sum" : "product";
      continue;
    }
    layers.push_back(layer_to_json(net.layer(i), net.route(i)));
  }
  doc["layers"] = std::move(layers);
  return doc;
}

inline NetworkSpec network_from_json(const json& doc) {
  check_keys(doc, {"format_version", "input_arity", "input_blocks", "combine", "layers"}, "network document");
  const auto& ver = require(doc, "format_version", "network document");
  if (!ver.is_number_integer() || ver.get<long long>() != 1)
    throw Error(ErrorKind::Parse, "unsupported format_version (expected 1)");
  const auto arity = size_from_json(require(doc, "input_arity", "network document"), "input_arity");
  std::vector<std::size_t> blocks{arity};
  if (const auto it = doc.find("input_blocks"); it != doc.end()) {
    if (!it->is_array()) throw Error(ErrorKind::Parse, "input_blocks must be an array");
    blocks.clear();
    for (const auto& b : *it) blocks.push_back(size_from_json(b, "input_blocks"));
  }
  const auto& jl = require(doc, "layers", "network document");
  if (!jl.is_array()) throw Error(ErrorKind::Parse, "layers must be an array");

  std::vector<LayerSpec> layers;
  std::vector<Route> routes;
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const auto& j = jl[i];
    const std::string where = "layer " + std::to_string(i);
    if (!j.is_object()) throw Error(ErrorKind::Parse, where + " must be an object");
    const auto& kind_v = require(j, "kind", where);
    if (!kind_v.is_string()) throw Error(ErrorKind::Parse, where + ": kind must be a string");
    const auto kind = kind_v.get<std::string>();
    if (kind == "dense") {
      check_keys(j, {"kind", "rows", "cols", "weights", "activation", "route"}, where);
      layers.emplace_back(DenseActivated{matrix_from_json(j, where), *activation_from_json(require(j, "activation", where), false, where)});
    } else if (kind == "linear") {
      check_keys(j, {"kind", "rows", "cols", "weights", "bias", "route"}, where);
      const auto& bias = require(j, "bias", where);
      if (!bias.is_boolean()) throw Error(ErrorKind::Parse, where + ": bias must be a boolean");
      layers.emplace_back(LinearOnly{matrix_from_json(j, where), bias.get<bool>()});
    } else if (kind == "shared") {
      check_keys(j, {"kind", "kernel", "stride", "activation", "route"}, where);
      layers.emplace_back(SharedWeight{reals_from_json(require(j, "kernel", where), where),
                                       size_from_json(require(j, "stride", where), where),
                                       activation_from_json(require(j, "activation", where), true, where)});
    } else if (kind == "recurrent") {
      check_keys(j, {"kind", "state_weight", "rows", "cols", "weights", "activation", "route"}, where);
      const auto& sw = require(j, "state_weight", where);
      if (!sw.is_string()) throw Error(ErrorKind::Parse, where + ": state_weight must be a decimal string");
      layers.emplace_back(RecurrentStep{parse_real(sw.get<std::string>()), matrix_from_json(j, where),
                                        activation_from_json(require(j, "activation", where), true, where)});
    } else if (kind == "residual") {
      check_keys(j, {"kind", "inner", "route"}, where);
      layers.emplace_back(make_residual(network_from_json(require(j, "inner", where))));
    } else {
      throw Error(ErrorKind::Parse, where + ": unknown layer kind '" + kind + "'");
    }
    routes.push_back(route_from_json(require(j, "route", where), where));
  }
  if (const auto it = doc.find("combine"); it != doc.end()) {
    if (!it->is_string()) throw Error(ErrorKind::Parse, "combine must be a string");
    const auto mode = it->get<std::string>();
    if (mode == "sum" || mode == "product") {
      layers.emplace_back(Combine{mode == "sum" ? CombineMode::Sum : CombineMode::Product});
      routes.push_back(Route::previous());
    } else if (mode != "none") {
      throw Error(ErrorKind::Parse, "combine must be none, sum or product");
    }
  }
  return NetworkSpec(arity, std::move(blocks), std::move(layers), std::move(routes));
}

}  // namespace detail

inline std::string serialize_network(const NetworkSpec& net) { return detail::to_json(net).dump(2) + "\n"; }

inline NetworkSpec parse_network(std::string_view text) {
  detail::json doc;
  try {
    doc = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
  }
  return detail::network_from_json(doc);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
  out << text;
}

inline NetworkSpec load_network(const std::string& path) { return parse_network(read_text_file(path)); }
inline void save_network(const std::string& path, const NetworkSpec& net) { write_text_file(path, serialize_network(net)); }

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline CsvTable parse_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " cells");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_real(c));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorKind::Parse, "empty CSV");
  return t;
}

inline CsvTable read_csv(const std::string& path, std::initializer_list<std::string_view> expected = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  auto t = parse_csv(in);
  if (expected.size() != 0) {
    std::vector<std::string> want(expected.begin(), expected.end());
    if (t.header != want) {
      std::string w;
      for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
      throw Error(ErrorKind::Parse, "'" + path + "' must have header " + w);
    }
  }
  return t;
}

/// Partition CSV: header `x,f`, one knot per row in knot order.
inline Partition read_partition_csv(const std::string& path) {
  const auto t = read_csv(path, {"x", "f"});
  std::vector<double> xs;
  std::vector<double> fs;
  for (const auto& r : t.rows) {
    xs.push_back(r[0]);
    fs.push_back(r[1]);
  }
  return Partition(std::move(xs), std::move(fs));
}

inline void write_partition_csv(std::ostream& out, const Partition& p) {
  out << "x,f\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << format_real(p.knots()[i]) << ',' << format_real(p.values()[i]) << '\n';
}

/// Dataset CSV: header `x,y`.
inline std::vector<Sample> read_samples_csv(const std::string& path) {
  const auto t = read_csv(path, {"x", "y"});
  std::vector<Sample> out;
  for (const auto& r : t.rows) out.push_back({r[0], r[1]});
  return out;
}

/// Grid CSV: header `i1,...,in,f` with non-negative integer coordinates.
inline GridSamples read_grid_csv(const std::string& path) {
  const auto t = read_csv(path);
  if (t.header.size() < 2 || t.header.back() != "f")
    throw Error(ErrorKind::Parse, "grid CSV needs coordinate columns followed by 'f'");
  GridSamples g;
  for (const auto& r : t.rows) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      if (r[k] < 0 || r[k] != std::floor(r[k])) throw Error(ErrorKind::Parse, "grid coordinates must be non-negative integers");
      idx.push_back(static_cast<std::size_t>(r[k]));
    }
    if (!g.emplace(std::move(idx), r.back()).second) throw Error(ErrorKind::Parse, "duplicate grid point");
  }
  return g;
}

}  // namespace actint
