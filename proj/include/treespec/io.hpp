#pragma once

// Deterministic report emission. Reports must be byte-identical across runs
// for a fixed config, so JSON is written by hand with insertion-ordered keys
// and floats formatted with %.17g (round-trip exact); the same float format
// is used for CSV cells.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace treespec {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Insertion-ordered pretty printer; no reordering, no float surprises.
class JsonWriter {
 public:
  std::string str() const { return out_; }

  JsonWriter& begin_object() {
    lead_in();
    out_ += '{';
    stack_.push_back(true);
    return *this;
  }
  JsonWriter& end_object() { return close('}'); }
  JsonWriter& begin_array() {
    lead_in();
    out_ += '[';
    stack_.push_back(true);
    return *this;
  }
  JsonWriter& end_array() { return close(']'); }

  JsonWriter& key(const std::string& k) {
    lead_in();
    out_ += '"';
    escape(k);
    out_ += "\": ";
    pending_value_ = true;
    return *this;
  }

  JsonWriter& value(const std::string& v) {
    lead_in();
    out_ += '"';
    escape(v);
    out_ += '"';
    return *this;
  }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& value(double v) {
    lead_in();
    // JSON has no nan/inf literals; reports never produce them on purpose
    out_ += std::isfinite(v) ? format_double(v) : "null";
    return *this;
  }
  JsonWriter& value(long long v) {
    lead_in();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(unsigned long long v) {
    lead_in();
    out_ += std::to_string(v);
    return *this;
  }
  JsonWriter& value(int v) { return value(static_cast<long long>(v)); }
  JsonWriter& value(std::size_t v) { return value(static_cast<unsigned long long>(v)); }
  JsonWriter& value(bool v) {
    lead_in();
    out_ += v ? "true" : "false";
    return *this;
  }
  JsonWriter& null() {
    lead_in();
    out_ += "null";
    return *this;
  }

 private:
  // comma/newline/indent handling before any token
  void lead_in() {
    if (pending_value_) {
      pending_value_ = false;
      return;
    }
    if (stack_.empty()) return;
    if (!stack_.back()) out_ += ',';
    stack_.back() = false;
    out_ += '\n';
    out_.append(2 * stack_.size(), ' ');
  }
  JsonWriter& close(char c) {
    const bool was_empty = stack_.back();
    stack_.pop_back();
    if (!was_empty) {
      out_ += '\n';
      out_.append(2 * stack_.size(), ' ');
    }
    out_ += c;
    return *this;
  }
  void escape(const std::string& s) {
    for (char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\t': out_ += "\\t"; break;
        default: out_ += c;
      }
    }
  }

  std::string out_;
  std::vector<bool> stack_;  // per open container: still empty?
  bool pending_value_ = false;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ += ',';
      out_ += columns[i];
    }
    out_ += '\n';
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(const std::string& v) { return raw(v); }
  CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& end_row() {
    out_ += '\n';
    col_ = 0;
    return *this;
  }
  std::string str() const { return out_; }

 private:
  CsvWriter& raw(const std::string& v) {
    if (col_) out_ += ',';
    out_ += v;
    ++col_;
    return *this;
  }
  std::string out_;
  std::size_t col_ = 0;
};

}  // namespace treespec
