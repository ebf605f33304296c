#include "latstruct/serialize.hpp"

#include <nlohmann/json.hpp>
#include <stdexcept>

#include "latstruct/arborescence.hpp"
#include "latstruct/assignment.hpp"
#include "latstruct/chain.hpp"
#include "latstruct/treesr.hpp"

namespace latstruct {

using nlohmann::json;

json domain_to_json(const StructDomain& domain) {
  json j;
  j["type"] = domain.name();
  if (auto* d = dynamic_cast<const OneOfKDomain*>(&domain)) {
    j["k"] = d->part_count();
  } else if (auto* d = dynamic_cast<const BitVectorDomain*>(&domain)) {
    j["d"] = d->part_count();
  } else if (auto* d = dynamic_cast<const LinearChainDomain*>(&domain)) {
    j["length"] = d->chain_length();
    j["tags"] = d->tag_count();
  } else if (auto* d = dynamic_cast<const AssignmentDomain*>(&domain)) {
    j["m"] = d->set_size();
  } else if (auto* d = dynamic_cast<const ArborescenceDomain*>(&domain)) {
    j["n"] = d->word_count();
  } else if (auto* d = dynamic_cast<const BinaryTreeSRDomain*>(&domain)) {
    j["leaves"] = d->leaf_count();
  } else {
    throw std::invalid_argument("domain_to_json: unknown domain type");
  }
  return j;
}

std::unique_ptr<StructDomain> domain_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "one_of_k")
    return std::make_unique<OneOfKDomain>(j.at("k").get<int>());
  if (type == "bit_vector")
    return std::make_unique<BitVectorDomain>(j.at("d").get<int>());
  if (type == "chain")
    return std::make_unique<LinearChainDomain>(j.at("length").get<int>(),
                                               j.at("tags").get<int>());
  if (type == "assignment")
    return std::make_unique<AssignmentDomain>(j.at("m").get<int>());
  if (type == "arborescence")
    return std::make_unique<ArborescenceDomain>(j.at("n").get<int>());
  if (type == "binary_tree_sr")
    return std::make_unique<BinaryTreeSRDomain>(j.at("leaves").get<int>());
  throw std::invalid_argument("domain_from_json: unknown type '" + type + "'");
}

json structure_to_json(const StructDomain& domain, const Structure& z) {
  if (!domain.is_valid(z))
    throw std::invalid_argument("structure_to_json: invalid structure");
  json j;
  j["schema_version"] = 1;
  j["domain"] = domain_to_json(domain);
  j["bits"] = z.bits;
  return j;
}

Structure structure_from_json(const json& j) {
  Structure z;
  z.bits = j.at("bits").get<std::vector<std::uint8_t>>();
  auto domain = domain_from_json(j.at("domain"));
  if (!domain->is_valid(z))
    throw std::invalid_argument("structure_from_json: invalid structure");
  return z;
}

json dist_to_json(const StructDomain& domain, const SparseDist& d) {
  if (d.support.size() != d.weights.size())
    throw std::invalid_argument("dist_to_json: support/weights mismatch");
  json j;
  j["schema_version"] = 1;
  j["domain"] = domain_to_json(domain);
  j["support"] = json::array();
  for (const Structure& z : d.support) j["support"].push_back(z.bits);
  j["weights"] = d.weights;
  return j;
}

SparseDist dist_from_json(const json& j) {
  SparseDist d;
  auto domain = domain_from_json(j.at("domain"));
  for (const auto& bits : j.at("support")) {
    Structure z;
    z.bits = bits.get<std::vector<std::uint8_t>>();
    if (!domain->is_valid(z))
      throw std::invalid_argument("dist_from_json: invalid structure");
    d.support.push_back(std::move(z));
  }
  d.weights = j.at("weights").get<Vec>();
  if (d.support.size() != d.weights.size())
    throw std::invalid_argument("dist_from_json: support/weights mismatch");
  double total = 0.0;
  for (double w : d.weights) {
    if (w < 0.0) throw std::invalid_argument("dist_from_json: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("dist_from_json: weights do not sum to 1");
  return d;
}

}  // namespace latstruct
