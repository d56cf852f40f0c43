#ifndef MPATH_STORE_MODULE_HPP_
#define MPATH_STORE_MODULE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpath/autodiff/tape.hpp"
#include "mpath/rng.hpp"

namespace mpath::store {

/// dense: FCL + ReLU (trunk layer). head, connector and router are a single
/// linear FCL; the router's softmax is applied by the multipath model.
enum class ModuleKind { dense, head, connector, router };

std::string_view kind_name(ModuleKind kind);
ModuleKind parse_kind(std::string_view name);

/// A parameterized network component. kernel is [in x out], bias is [out].
struct ModuleDef {
  std::string module_id;
  ModuleKind kind = ModuleKind::dense;
  ad::Tensor kernel;
  ad::Tensor bias;
  bool frozen = false;
  std::optional<std::string> parent_module_id;
  std::string last_trained_task;

  std::size_t in_dim() const { return kernel.dim(0); }
  std::size_t out_dim() const { return kernel.dim(1); }
  bool has_activation() const noexcept { return kind == ModuleKind::dense; }

  /// Throws ValueError/DimensionError on malformed ids or parameter shapes.
  void validate() const;

  friend bool operator==(const ModuleDef&, const ModuleDef&) = default;
};

/// Module with all-zero parameters.
ModuleDef make_zero_module(std::string id, ModuleKind kind, std::size_t in, std::size_t out);
/// Module with He-uniform kernel and zero bias.
ModuleDef make_random_module(std::string id, ModuleKind kind, std::size_t in, std::size_t out, Rng& rng);

/// Ids are restricted to [A-Za-z0-9_.-] so they can name checkpoint blobs.
bool valid_id(std::string_view id);

struct ModuleVars {
  ad::Var kernel;
  ad::Var bias;
};

/// Records parameters on the tape: constants when frozen, trainable otherwise.
ModuleVars bind_module(ad::Tape& tape, const ModuleDef& module);
/// Records parameters as constants regardless of the frozen flag.
ModuleVars bind_constant(ad::Tape& tape, const ModuleDef& module);

ad::Var apply_module(const ModuleDef& module, const ModuleVars& vars, const ad::Var& x);

}  // namespace mpath::store

#endif  // MPATH_STORE_MODULE_HPP_
