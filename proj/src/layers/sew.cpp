#include "snn/layers/functional.hpp"
#include "snn/tensor/ops.hpp"

namespace snn::layers {

template <typename T>
TensorT<T> sew_connect(const TensorT<T>& a, const TensorT<T>& i, ConnectMode mode) {
  if (a.shape() != i.shape()) {
    throw ShapeError("sew_connect: block output " + shape_str(a.shape()) + " vs block input " +
                     shape_str(i.shape()));
  }
  switch (mode) {
    case ConnectMode::add: return add(a, i);
    case ConnectMode::iand: return logical_and(logical_not(a), i);
  }
  throw UsageError("sew_connect: unknown mode");
}

template <typename T>
TensorT<T> readout(const TensorT<T>& y_seq) {
  if (!y_seq.defined() || y_seq.rank() < 1) throw UsageError("readout: need at least one timestep");
  return mean_dim0(y_seq);
}

template TensorT<float> sew_connect(const TensorT<float>&, const TensorT<float>&, ConnectMode);
template TensorT<double> sew_connect(const TensorT<double>&, const TensorT<double>&, ConnectMode);
template TensorT<float> readout(const TensorT<float>&);
template TensorT<double> readout(const TensorT<double>&);

}  // namespace snn::layers
