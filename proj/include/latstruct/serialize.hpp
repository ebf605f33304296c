#pragma once

#include <memory>
#include <nlohmann/json_fwd.hpp>

#include "latstruct/domain.hpp"

namespace latstruct {

// JSON interchange schema (schema_version 1):
//   domain:    {"type": ..., <shape params>}
//   structure: {"schema_version": 1, "domain": {...}, "bits": [0,1,...]}
//   dist:      {"schema_version": 1, "domain": {...},
//               "support": [[bits...], ...], "weights": [...]}
// Domain types and params: one_of_k{k}, bit_vector{d}, chain{length,tags},
// assignment{m}, arborescence{n}, binary_tree_sr{leaves}.

nlohmann::json domain_to_json(const StructDomain& domain);
std::unique_ptr<StructDomain> domain_from_json(const nlohmann::json& j);

nlohmann::json structure_to_json(const StructDomain& domain,
                                 const Structure& z);
Structure structure_from_json(const nlohmann::json& j);

nlohmann::json dist_to_json(const StructDomain& domain, const SparseDist& d);
SparseDist dist_from_json(const nlohmann::json& j);

}  // namespace latstruct
