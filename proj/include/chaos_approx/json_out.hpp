#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace chaos {

// Minimal ordered JSON emitter. Keys keep insertion order and doubles are
// printed with %.17g, so identical values always serialize to identical
// bytes (the determinism contract for reports).
class JsonOut {
 public:
  enum class Kind { Null, Bool, Int, UInt, Double, String, Array, Object };

  JsonOut() : kind_(Kind::Null) {}
  static JsonOut boolean(bool v) { JsonOut j(Kind::Bool); j.bool_ = v; return j; }
  static JsonOut integer(long long v) { JsonOut j(Kind::Int); j.int_ = v; return j; }
  static JsonOut unsigned_integer(std::uint64_t v) { JsonOut j(Kind::UInt); j.uint_ = v; return j; }
  static JsonOut number(double v) { JsonOut j(Kind::Double); j.double_ = v; return j; }
  static JsonOut string(std::string v) { JsonOut j(Kind::String); j.string_ = std::move(v); return j; }
  static JsonOut array() { return JsonOut(Kind::Array); }
  static JsonOut object() { return JsonOut(Kind::Object); }

  JsonOut& push(JsonOut v) {
    items_.push_back({"", std::move(v)});
    return *this;
  }
  JsonOut& set(const std::string& key, JsonOut v) {
    items_.push_back({key, std::move(v)});
    return *this;
  }

  std::string dump(int indent = 2) const {
    std::string out;
    write(out, indent, 0);
    return out;
  }

 private:
  explicit JsonOut(Kind k) : kind_(k) {}

  static void escape(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
          } else {
            out += c;
          }
      }
    }
    out += '"';
  }

  void write(std::string& out, int indent, int depth) const {
    char buf[64];
    switch (kind_) {
      case Kind::Null: out += "null"; return;
      case Kind::Bool: out += bool_ ? "true" : "false"; return;
      case Kind::Int:
        std::snprintf(buf, sizeof(buf), "%lld", int_);
        out += buf;
        return;
      case Kind::UInt:
        std::snprintf(buf, sizeof(buf), "%llu", static_cast<unsigned long long>(uint_));
        out += buf;
        return;
      case Kind::Double:
        std::snprintf(buf, sizeof(buf), "%.17g", double_);
        out += buf;
        return;
      case Kind::String: escape(out, string_); return;
      case Kind::Array:
      case Kind::Object: break;
    }
    const bool object = kind_ == Kind::Object;
    const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    out += object ? '{' : '[';
    if (items_.empty()) {
      out += object ? '}' : ']';
      return;
    }
    for (std::size_t i = 0; i < items_.size(); ++i) {
      out += i == 0 ? "\n" : ",\n";
      out += pad;
      if (object) {
        escape(out, items_[i].first);
        out += ": ";
      }
      items_[i].second.write(out, indent, depth + 1);
    }
    out += '\n';
    out += close_pad;
    out += object ? '}' : ']';
  }

  Kind kind_;
  bool bool_ = false;
  long long int_ = 0;
  std::uint64_t uint_ = 0;
  double double_ = 0.0;
  std::string string_;
  std::vector<std::pair<std::string, JsonOut>> items_;
};

}  // namespace chaos
