#include "molt/tape.hpp"

namespace molt {

const Matrix& DiffNode::value() const { return tape->value(id); }
const Matrix& DiffNode::grad() const { return tape->grad(id); }

int ParamStore::add(const std::string& name, Matrix init, bool frozen) {
  if (index_.count(name)) throw ContractError("ParamStore: duplicate parameter name '" + name + "'");
  const int idx = static_cast<int>(params_.size());
  Param p;
  p.name = name;
  p.grad = Matrix::zeros(init.rows(), init.cols());
  p.value = std::move(init);
  p.frozen = frozen;
  params_.push_back(std::move(p));
  index_[name] = idx;
  return idx;
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grads() {
  for (Param& p : params_) p.grad.fill(0.0);
  grads_populated_ = false;
}

size_t ParamStore::tunable_scalar_count() const {
  size_t n = 0;
  for (const Param& p : params_)
    if (!p.frozen) n += p.value.size();
  return n;
}

DiffNode Tape::constant(Matrix v) {
  if (!v.all_finite()) throw ContractError("Tape: constant with non-finite entries");
  Node n;
  n.grad = Matrix::zeros(v.rows(), v.cols());
  n.value = std::move(v);
  nodes_.push_back(std::move(n));
  return DiffNode{this, static_cast<int>(nodes_.size() - 1)};
}

DiffNode Tape::use_param(int param_index) {
  if (!store_) throw ContractError("Tape: use_param requires an attached ParamStore");
  const Param& p = store_->at(param_index);
  Node n;
  n.value = p.value;
  n.grad = Matrix::zeros(p.value.rows(), p.value.cols());
  n.param_index = param_index;
  nodes_.push_back(std::move(n));
  return DiffNode{this, static_cast<int>(nodes_.size() - 1)};
}

DiffNode Tape::use_param(const std::string& name) { return use_param(store_->index_of(name)); }

DiffNode Tape::make(Matrix v, std::function<void(Tape&, const Node&)> backward) {
  if (!v.all_finite()) throw ContractError("Tape: operation produced non-finite values");
  Node n;
  n.grad = Matrix::zeros(v.rows(), v.cols());
  n.value = std::move(v);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return DiffNode{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(DiffNode loss) {
  if (loss.tape != this) throw ContractError("Tape: loss node belongs to a different tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("Tape: backward expects a 1x1 loss node, got " + lv.shape_str());
  }
  for (Node& n : nodes_) n.grad.fill(0.0);
  nodes_[loss.id].grad(0, 0) = 1.0;

  for (int i = loss.id; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.backward) n.backward(*this, n);
  }

  if (store_) {
    for (const Node& n : nodes_) {
      if (n.param_index >= 0) store_->at(n.param_index).grad.add_in_place(n.grad);
    }
    store_->mark_grads_populated();
  }
}

}  // namespace molt
