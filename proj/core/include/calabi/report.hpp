#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

// Deterministic JSON emitter for run reports: insertion-ordered keys,
// floats always printed with 17 significant digits, no locale or pointer
// dependence, so identical inputs give byte-identical output.

namespace calabi::report {

class Json {
 public:
  static Json object();
  static Json array();
  static Json number(double v);
  static Json integer(long long v);
  static Json boolean(bool v);
  static Json string(std::string v);

  Json& set(const std::string& key, Json v);        // object
  Json& set(const std::string& key, double v);
  Json& set(const std::string& key, bool v);
  Json& set(const std::string& key, const char* v);
  Json& set(const std::string& key, const std::string& v);
  Json& set_int(const std::string& key, long long v);
  Json& push(Json v);                               // array
  Json& push(double v);

  std::string dump(int indent = 2) const;

 private:
  enum class Type { object, array, number, integer, boolean, string };
  Type type_ = Type::object;
  double num_ = 0.0;
  long long int_ = 0;
  bool bool_ = false;
  std::string str_;
  std::vector<std::pair<std::string, Json>> members_;
  std::vector<Json> items_;

  void dump_to(std::string& out, int indent, int depth) const;
};

void write_file(const std::string& path, const std::string& content);

}  // namespace calabi::report
