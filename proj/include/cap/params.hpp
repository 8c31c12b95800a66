#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cap/tape.hpp"
#include "cap/tensor.hpp"

namespace cap {

/**
 * Ordered collection of named parameter tensors.
 *
 * Names are unique. Iteration order is insertion order, which fixes the
 * order of checkpoint manifests and optimizer updates.
 */
class ParamSet {
 public:
  using Entry = std::pair<std::string, Tensor>;

  Tensor& add(std::string name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::vector<Entry>& entries() noexcept { return entries_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Total number of scalar parameters.
  std::size_t num_scalars() const;

  /// Same names and shapes, zero-filled.
  ParamSet zeros_like() const;
  /// this += other, entry by entry (names and shapes must match).
  void accumulate(const ParamSet& other, double factor = 1.0);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Parameter handles on one tape, looked up by name.
class Bindings {
 public:
  Bindings() = default;
  Bindings(Tape& tape, const ParamSet& params, bool requires_grad = true);

  Var at(const std::string& name) const;
  /// Gradient of every bound parameter after tape.backward(); untouched ones are zero.
  ParamSet gradients() const;

 private:
  Tape* tape_ = nullptr;
  std::vector<std::pair<std::string, Var>> vars_;
  std::map<std::string, std::size_t> index_;
};

// Module parameter structs are templates over the member type: P<Tensor>
// holds values, P<Var> holds tape handles. Each provides
// `template <class F> void visit(F&& f)` calling f(name, member) per field.

template <typename P>
void register_params(ParamSet& set, const std::string& prefix, P params) {
  params.visit([&](const std::string& name, Tensor& t) { set.add(prefix + name, std::move(t)); });
}

template <typename P>
void bind_params(const Bindings& b, const std::string& prefix, P& out) {
  out.visit([&](const std::string& name, Var& v) { v = b.at(prefix + name); });
}

/// Record every field of `values` as a gradient-requiring leaf of `tape`.
template <typename PV, typename PT>
PV leaves(Tape& tape, PT values, PV out) {
  std::vector<Tensor> flat;
  values.visit([&](const std::string&, Tensor& t) { flat.push_back(std::move(t)); });
  std::size_t i = 0;
  out.visit([&](const std::string&, Var& v) { v = tape.leaf(std::move(flat.at(i++))); });
  return out;
}

}  // namespace cap
