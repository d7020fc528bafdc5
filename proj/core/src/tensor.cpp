#include "flaudit/tensor.hpp"

#include <cmath>

#include "json.hpp"

namespace flaudit {

Tensor::Tensor(std::vector<size_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  require(values.size() == shape_product(shape), ErrorCode::shape_mismatch,
          "tensor value count does not match shape");
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
  size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

bool Tensor::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string tensor_to_json(const Tensor& t) {
  return nlohmann::json{{"shape", t.shape}, {"values", t.values}}.dump();
}

Tensor tensor_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Tensor t(j.at("shape").get<std::vector<size_t>>(),
           j.at("values").get<std::vector<double>>());
  require(t.all_finite(), ErrorCode::invalid_spec, "non-finite tensor value");
  return t;
}

}  // namespace flaudit
