#pragma once
// Common interface of the decision machines.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "fragkit/binary_io.hpp"
#include "fragkit/dataset.hpp"
#include "fragkit/error.hpp"

namespace fragkit::learn {

using nlohmann::json;

/// Borrowed view of training rows. Labels lie in [0, classes).
struct TrainingSet {
  const Matrix& x;
  std::span<const std::uint32_t> y;
  const Vector& w;
  std::size_t classes;

  std::size_t size() const { return y.size(); }
  std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
};

inline std::span<const double> row_of(const Matrix& x, std::size_t i) {
  return {x.data() + i * static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols())};
}

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t classes() const = 0;
  virtual std::size_t features() const = 0;
  virtual std::uint32_t predict_row(std::span<const double> row) const = 0;
  virtual void save(ByteWriter& out) const = 0;

  /// predict_row over every row (in parallel).
  Labels predict(const Matrix& rows) const;
};

/// Index of the largest entry; ties go to the lowest index.
std::uint32_t argmax(std::span<const double> values);

/// Reads a json field with a default and a type-aware error message.
template <typename T>
T param(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Parameter, std::string("parameter '") + key + "' has the wrong type: " + j.at(key).dump());
  }
}

}  // namespace fragkit::learn
