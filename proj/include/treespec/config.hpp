#pragma once

// Geometry/run configuration: JSON is the canonical format, a small TOML
// subset is accepted for convenience and normalised to JSON before parsing.
//
// Geometry schema:
//   {"kind": "explicit" | "eventually-periodic" | "substitution",
//    "edges": [{"length": 1.0, "branching": 2}, ...],    // explicit, ev-periodic
//    "preperiod": 0, "period": 1,                        // ev-periodic
//    "alphabet": {"A": {"length":1.0,"branching":2}, ...},  // substitution
//    "rules": {"A": "AB", "B": "A"}, "axiom": "A", "depth": 12}
//
// Run config: {"geometry": {...}, "analysis": {...}, "seed": N}. The
// analysis block carries command parameters (e_min, e_max, grid, y_ladder,
// tol, thresholds, generations, ell, count, ...); CLI flags override it.
//
// TOML subset: bare keys, [table] / [[array-of-table]] headers with dotted
// paths, strings, integers, floats, booleans, and flat arrays. Enough for
// every config this tool consumes; anything else is a parse error.

#include <cctype>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "treespec/io.hpp"
#include "treespec/measure.hpp"

namespace treespec {

using Json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// TOML subset -> JSON
// ---------------------------------------------------------------------------

namespace toml_lite {

inline void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline Json parse_scalar(const std::string& tok, std::size_t line_no) {
  if (tok.empty()) throw ParseError("toml: empty value on line " + std::to_string(line_no));
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      throw ParseError("toml: unterminated string on line " + std::to_string(line_no));
    return tok.substr(1, tok.size() - 2);
  }
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    std::size_t used = 0;
    if (tok.find_first_of(".eE") == std::string::npos &&
        tok.find("inf") == std::string::npos && tok.find("nan") == std::string::npos) {
      const long long v = std::stoll(tok, &used);
      if (used == tok.size()) return v;
    }
    const double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("toml: cannot parse value '" + tok + "' on line " + std::to_string(line_no));
}

inline Json parse_value(const std::string& s, std::size_t line_no) {
  std::string t = s;
  // strip trailing comment outside strings
  bool in_str = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '"') in_str = !in_str;
    if (t[i] == '#' && !in_str) {
      t = t.substr(0, i);
      break;
    }
  }
  while (!t.empty() && (t.back() == ' ' || t.back() == '\t' || t.back() == '\r')) t.pop_back();
  std::size_t b = 0;
  skip_ws(t, b);
  t = t.substr(b);
  if (t.empty()) throw ParseError("toml: missing value on line " + std::to_string(line_no));
  if (t.front() == '[') {
    if (t.back() != ']')
      throw ParseError("toml: unterminated array on line " + std::to_string(line_no));
    Json arr = Json::array();
    std::string body = t.substr(1, t.size() - 2);
    std::string item;
    bool str = false;
    for (char c : body) {
      if (c == '"') str = !str;
      if (c == ',' && !str) {
        if (!item.empty()) arr.push_back(parse_value(item, line_no));
        item.clear();
      } else {
        item += c;
      }
    }
    std::size_t k = 0;
    skip_ws(item, k);
    if (k < item.size()) arr.push_back(parse_value(item, line_no));
    return arr;
  }
  return parse_scalar(t, line_no);
}

inline std::vector<std::string> split_path(const std::string& s, std::size_t line_no) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '.') {
      if (cur.empty()) throw ParseError("toml: bad key path on line " + std::to_string(line_no));
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (cur.empty()) throw ParseError("toml: bad key path on line " + std::to_string(line_no));
  parts.push_back(cur);
  return parts;
}

inline Json* descend(Json& root, const std::vector<std::string>& path) {
  Json* node = &root;
  for (const std::string& p : path) {
    Json& slot = (*node)[p];
    if (slot.is_array()) {
      if (slot.empty()) slot.push_back(Json::object());
      node = &slot.back();
    } else {
      if (slot.is_null()) slot = Json::object();
      node = &slot;
    }
  }
  return node;
}

inline Json parse(const std::string& text) {
  Json root = Json::object();
  Json* table = &root;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t i = 0;
    skip_ws(line, i);
    if (i >= line.size() || line[i] == '#' || line[i] == '\r') continue;
    if (line[i] == '[') {
      const bool array_table = i + 1 < line.size() && line[i + 1] == '[';
      const std::size_t open = i + (array_table ? 2 : 1);
      const std::size_t close = line.find(array_table ? "]]" : "]", open);
      if (close == std::string::npos)
        throw ParseError("toml: unterminated table header on line " + std::to_string(line_no));
      const auto path = split_path(line.substr(open, close - open), line_no);
      if (array_table) {
        Json* parent = &root;
        for (std::size_t k = 0; k + 1 < path.size(); ++k)
          parent = descend(*parent, {path[k]});
        Json& slot = (*parent)[path.back()];
        if (slot.is_null()) slot = Json::array();
        if (!slot.is_array())
          throw ParseError("toml: key reused as array-of-tables on line " + std::to_string(line_no));
        slot.push_back(Json::object());
        table = &slot.back();
      } else {
        table = descend(root, path);
      }
      continue;
    }
    const std::size_t eq = line.find('=', i);
    if (eq == std::string::npos)
      throw ParseError("toml: expected key = value on line " + std::to_string(line_no));
    std::string key = line.substr(i, eq - i);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    if (key.empty()) throw ParseError("toml: empty key on line " + std::to_string(line_no));
    const auto path = split_path(key, line_no);
    Json* target = table;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) target = descend(*target, {path[k]});
    (*target)[path.back()] = parse_value(line.substr(eq + 1), line_no);
  }
  return root;
}

}  // namespace toml_lite

// ---------------------------------------------------------------------------
// Geometry parsing
// ---------------------------------------------------------------------------

inline double require_number(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ParseError("config: missing numeric field '" + key + "'");
  return j[key].get<double>();
}

inline std::vector<Edge> parse_edges(const Json& j) {
  if (!j.contains("edges") || !j["edges"].is_array() || j["edges"].empty())
    throw ParseError("config: geometry needs a nonempty 'edges' array");
  std::vector<Edge> edges;
  for (const Json& e : j["edges"])
    edges.push_back({require_number(e, "length"), require_number(e, "branching")});
  return edges;
}

inline TreeGeometry parse_geometry(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError("config: geometry needs a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "free") return TreeGeometry::free_line();
  if (kind == "explicit") return TreeGeometry::explicit_list(parse_edges(j));
  if (kind == "eventually-periodic") {
    const auto pre = j.value("preperiod", 0);
    const auto per = j.value("period", 0);
    if (pre < 0 || per < 1) throw ParseError("config: need preperiod >= 0 and period >= 1");
    return TreeGeometry::eventually_periodic(parse_edges(j), static_cast<std::size_t>(pre),
                                             static_cast<std::size_t>(per));
  }
  if (kind == "substitution") {
    if (!j.contains("alphabet") || !j["alphabet"].is_object())
      throw ParseError("config: substitution geometry needs an 'alphabet' object");
    if (!j.contains("rules") || !j["rules"].is_object())
      throw ParseError("config: substitution geometry needs a 'rules' object");
    SubstitutionSystem sys;
    for (const auto& [name, spec] : j["alphabet"].items()) {
      if (name.size() != 1)
        throw ParseError("config: alphabet symbols must be single characters: '" + name + "'");
      sys.alphabet[name[0]] = {require_number(spec, "length"), require_number(spec, "branching")};
    }
    for (const auto& [name, word] : j["rules"].items()) {
      if (name.size() != 1 || !word.is_string())
        throw ParseError("config: rules must map single characters to strings");
      sys.rules[name[0]] = word.get<std::string>();
    }
    sys.axiom = j.value("axiom", std::string(1, sys.alphabet.begin()->first));
    sys.depth = static_cast<std::size_t>(j.value("depth", 10));
    return TreeGeometry::substitution(std::move(sys));
  }
  throw ParseError("config: unknown geometry kind '" + kind + "'");
}

// Canonical, byte-stable geometry echo; re-parses to an identical geometry.
inline std::string normalized_geometry(const TreeGeometry& g) {
  JsonWriter w;
  w.begin_object();
  switch (g.kind()) {
    case GeometryKind::free_line:
      w.key("kind").value("free");
      break;
    case GeometryKind::explicit_list:
    case GeometryKind::eventually_periodic: {
      w.key("kind").value(g.kind() == GeometryKind::explicit_list ? "explicit"
                                                                  : "eventually-periodic");
      w.key("edges").begin_array();
      for (const Edge& e : g.edges()) {
        w.begin_object();
        w.key("length").value(e.length);
        w.key("branching").value(e.branching);
        w.end_object();
      }
      w.end_array();
      if (g.kind() == GeometryKind::eventually_periodic) {
        w.key("preperiod").value(g.preperiod());
        w.key("period").value(g.period());
      }
      break;
    }
    case GeometryKind::substitution: {
      const SubstitutionSystem& s = g.substitution_system();
      w.key("kind").value("substitution");
      w.key("alphabet").begin_object();
      for (const auto& [c, e] : s.alphabet) {
        w.key(std::string(1, c)).begin_object();
        w.key("length").value(e.length);
        w.key("branching").value(e.branching);
        w.end_object();
      }
      w.end_object();
      w.key("rules").begin_object();
      for (const auto& [c, word] : s.rules) w.key(std::string(1, c)).value(word);
      w.end_object();
      w.key("axiom").value(s.axiom);
      w.key("depth").value(s.depth);
      break;
    }
  }
  w.end_object();
  return w.str() + "\n";
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  Json raw;
  TreeGeometry geometry = TreeGeometry::explicit_list({{1.0, 2.0}});
  Json analysis;  // command parameters, may be empty
  std::uint64_t seed = 0;
};

inline Json load_config_text(const std::string& text, bool looks_like_toml) {
  if (looks_like_toml) return toml_lite::parse(text);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("config: JSON parse failed: ") + e.what());
  }
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const bool toml = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
  // sniff: JSON configs start with '{'
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  const bool looks_toml = toml || (i < text.size() && text[i] != '{');

  RunConfig cfg;
  cfg.raw = load_config_text(text, looks_toml);
  if (!cfg.raw.is_object()) throw ParseError("config: top level must be an object");
  if (!cfg.raw.contains("geometry"))
    throw ParseError("config: missing 'geometry' block");
  cfg.geometry = parse_geometry(cfg.raw["geometry"]);
  cfg.analysis = cfg.raw.value("analysis", Json::object());
  cfg.seed = cfg.raw.value("seed", 0ULL);
  return cfg;
}

// "a+bi" / "a-bi" / "a" / "bi" with optional whitespace.
inline std::complex<double> parse_complex(const std::string& s) {
  std::string t;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw ParseError("complex: empty literal");
  const bool has_i = t.back() == 'i' || t.back() == 'I';
  if (!has_i) {
    try {
      std::size_t used = 0;
      const double re = std::stod(t, &used);
      if (used == t.size()) return {re, 0.0};
    } catch (const std::exception&) {
    }
    throw ParseError("complex: cannot parse '" + s + "'");
  }
  t.pop_back();  // drop the i
  // split at the last +/- that is not an exponent sign and not leading
  std::size_t split = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  try {
    if (split == std::string::npos) {
      std::string im = t;
      if (im.empty() || im == "+") im = "1";
      else if (im == "-") im = "-1";
      return {0.0, std::stod(im)};
    }
    const double re = std::stod(t.substr(0, split));
    std::string im = t.substr(split);
    if (im == "+") im = "1";
    else if (im == "-") im = "-1";
    return {re, std::stod(im)};
  } catch (const std::exception&) {
    throw ParseError("complex: cannot parse '" + s + "'");
  }
}

}  // namespace treespec
