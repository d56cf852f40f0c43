#include "mpath/store/module.hpp"

#include <cmath>

#include "mpath/autodiff/ops.hpp"
#include "mpath/errors.hpp"

namespace mpath::store {

std::string_view kind_name(ModuleKind kind) {
  switch (kind) {
    case ModuleKind::dense:
      return "dense";
    case ModuleKind::head:
      return "head";
    case ModuleKind::connector:
      return "connector";
    case ModuleKind::router:
      return "router";
  }
  return "?";
}

ModuleKind parse_kind(std::string_view name) {
  if (name == "dense") return ModuleKind::dense;
  if (name == "head") return ModuleKind::head;
  if (name == "connector") return ModuleKind::connector;
  if (name == "router") return ModuleKind::router;
  throw ValueError("unknown module kind '" + std::string(name) + "'");
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return id != "." && id != "..";
}

void ModuleDef::validate() const {
  if (!valid_id(module_id)) throw ValueError("invalid module id '" + module_id + "'");
  if (kernel.rank() != 2) throw DimensionError("module " + module_id + ": kernel must be rank 2");
  if (bias.rank() != 1 || bias.dim(0) != kernel.dim(1))
    throw DimensionError("module " + module_id + ": bias does not match kernel output dim");
}

ModuleDef make_zero_module(std::string id, ModuleKind kind, std::size_t in, std::size_t out) {
  ModuleDef m;
  m.module_id = std::move(id);
  m.kind = kind;
  m.kernel = ad::Tensor({in, out}, 0.0);
  m.bias = ad::Tensor({out}, 0.0);
  return m;
}

ModuleDef make_random_module(std::string id, ModuleKind kind, std::size_t in, std::size_t out, Rng& rng) {
  ModuleDef m = make_zero_module(std::move(id), kind, in, out);
  const double limit = std::sqrt(6.0 / static_cast<double>(in));
  for (double& w : m.kernel.data()) w = rng.uniform(-limit, limit);
  return m;
}

ModuleVars bind_module(ad::Tape& tape, const ModuleDef& module) {
  if (module.frozen) return bind_constant(tape, module);
  return {tape.parameter(module.kernel), tape.parameter(module.bias)};
}

ModuleVars bind_constant(ad::Tape& tape, const ModuleDef& module) {
  return {tape.constant(module.kernel), tape.constant(module.bias)};
}

ad::Var apply_module(const ModuleDef& module, const ModuleVars& vars, const ad::Var& x) {
  if (x.value().rank() != 2 || x.value().dim(1) != module.in_dim())
    throw DimensionError("module " + module.module_id + " expects input width " + std::to_string(module.in_dim()) +
                         ", got " + ad::shape_string(x.value().shape()));
  ad::Var y = ad::add_bias(ad::matmul(x, vars.kernel), vars.bias);
  return module.has_activation() ? ad::relu(y) : y;
}

}  // namespace mpath::store
