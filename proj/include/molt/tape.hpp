#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "molt/matrix.hpp"

namespace molt {

class Tape;

// Handle into a tape. Cheap to copy; valid for the tape's lifetime.
struct DiffNode {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
};

// One tunable or frozen parameter: persistent value plus accumulated
// gradient. Frozen parameters never receive optimizer updates.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;
};

class ParamStore {
 public:
  int add(const std::string& name, Matrix init, bool frozen = false);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  int index_of(const std::string& name) const;
  Param& at(int i) { return params_[i]; }
  const Param& at(int i) const { return params_[i]; }
  Param& by_name(const std::string& name) { return params_[index_of(name)]; }
  const Param& by_name(const std::string& name) const { return params_[index_of(name)]; }
  int size() const { return static_cast<int>(params_.size()); }

  void zero_grads();
  bool grads_populated() const { return grads_populated_; }
  void mark_grads_populated() { grads_populated_ = true; }

  size_t tunable_scalar_count() const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, int> index_;
  bool grads_populated_ = false;
};

// Reverse-mode tape over matrix-valued nodes. Nodes are recorded in
// evaluation order, which is a valid topological order, so backward() is a
// single reverse sweep. One tape belongs to one training step and one
// thread; parameters are re-bound per tape via use_param().
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    // Pulls this node's grad into its inputs' grads. Null for leaves.
    std::function<void(Tape&, const Node&)> backward;
    int param_index = -1;  // binding into the attached ParamStore
  };

  Tape() = default;
  explicit Tape(ParamStore* store) : store_(store) {}

  DiffNode constant(Matrix v);
  DiffNode use_param(int param_index);
  DiffNode use_param(const std::string& name);
  DiffNode make(Matrix v, std::function<void(Tape&, const Node&)> backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  Matrix& grad_mut(int id) { return nodes_[id].grad; }
  size_t node_count() const { return nodes_.size(); }
  ParamStore* store() { return store_; }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 loss node, sweeps the tape in
  // reverse, then accumulates bound-parameter grads into the store.
  void backward(DiffNode loss);

 private:
  std::vector<Node> nodes_;
  ParamStore* store_ = nullptr;
};

}  // namespace molt
