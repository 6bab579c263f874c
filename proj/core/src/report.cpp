#include "calabi/report.hpp"

#include "calabi/common.hpp"

#include <fstream>

namespace calabi::report {

Json Json::object() {
  Json j;
  j.type_ = Type::object;
  return j;
}
Json Json::array() {
  Json j;
  j.type_ = Type::array;
  return j;
}
Json Json::number(double v) {
  Json j;
  j.type_ = Type::number;
  j.num_ = v;
  return j;
}
Json Json::integer(long long v) {
  Json j;
  j.type_ = Type::integer;
  j.int_ = v;
  return j;
}
Json Json::boolean(bool v) {
  Json j;
  j.type_ = Type::boolean;
  j.bool_ = v;
  return j;
}
Json Json::string(std::string v) {
  Json j;
  j.type_ = Type::string;
  j.str_ = std::move(v);
  return j;
}

Json& Json::set(const std::string& key, Json v) {
  members_.emplace_back(key, std::move(v));
  return *this;
}
Json& Json::set(const std::string& key, double v) { return set(key, number(v)); }
Json& Json::set(const std::string& key, bool v) { return set(key, boolean(v)); }
Json& Json::set(const std::string& key, const char* v) { return set(key, string(v)); }
Json& Json::set(const std::string& key, const std::string& v) { return set(key, string(v)); }
Json& Json::set_int(const std::string& key, long long v) { return set(key, integer(v)); }
Json& Json::push(Json v) {
  items_.push_back(std::move(v));
  return *this;
}
Json& Json::push(double v) { return push(number(v)); }

namespace {

void escape_into(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
}

}  // namespace

void Json::dump_to(std::string& out, int indent, int depth) const {
  const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
  const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
  switch (type_) {
    case Type::object: {
      if (members_.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      for (std::size_t i = 0; i < members_.size(); ++i) {
        out += pad_in;
        escape_into(out, members_[i].first);
        out += ": ";
        members_[i].second.dump_to(out, indent, depth + 1);
        if (i + 1 < members_.size()) out += ',';
        out += '\n';
      }
      out += pad + "}";
      return;
    }
    case Type::array: {
      if (items_.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < items_.size(); ++i) {
        out += pad_in;
        items_[i].dump_to(out, indent, depth + 1);
        if (i + 1 < items_.size()) out += ',';
        out += '\n';
      }
      out += pad + "]";
      return;
    }
    case Type::number: out += format_double(num_); return;
    case Type::integer: out += std::to_string(int_); return;
    case Type::boolean: out += bool_ ? "true" : "false"; return;
    case Type::string: escape_into(out, str_); return;
  }
}

std::string Json::dump(int indent) const {
  std::string out;
  dump_to(out, indent, 0);
  out += '\n';
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Error::Kind::config, "cannot write '" + path + "'");
  f << content;
}

}  // namespace calabi::report
