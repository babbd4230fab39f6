#include "pressmap/tensor.hpp"

#include <sstream>

#include "pressmap/error.hpp"

namespace pressmap {

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(values.begin(), values.end()) {
  if (data.size() != shape_size(shape)) {
    throw Error(ErrorCode::ShapeMismatch, "tensor of shape " + shape_string(shape) + " given " +
                                              std::to_string(data.size()) + " values");
  }
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

}  // namespace pressmap
