#include "cap/params.hpp"

namespace cap {

Tensor& ParamSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw ContractViolation("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
  return entries_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractViolation("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) out.add(name, Tensor(t.shape(), 0.0));
  return out;
}

void ParamSet::accumulate(const ParamSet& other, double factor) {
  if (other.size() != size()) throw DimensionError("accumulate: parameter sets differ in size");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, dst] = entries_[i];
    const auto& [oname, src] = other.entries_[i];
    if (name != oname || dst.shape() != src.shape())
      throw DimensionError("accumulate: mismatch at '" + name + "'");
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += factor * s[k];
  }
}

Bindings::Bindings(Tape& tape, const ParamSet& params, bool requires_grad) : tape_(&tape) {
  for (const auto& [name, t] : params.entries()) {
    index_.emplace(name, vars_.size());
    vars_.emplace_back(name, tape.leaf(t, requires_grad));
  }
}

Var Bindings::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractViolation("parameter '" + name + "' is not bound");
  return vars_[it->second].second;
}

ParamSet Bindings::gradients() const {
  ParamSet out;
  for (const auto& [name, v] : vars_) out.add(name, tape_->grad(v));
  return out;
}

}  // namespace cap
