#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdesym/infinitesimal.hpp"
#include "sdesym/sde.hpp"
#include "sdesym/transform.hpp"

namespace sdesym {

enum class EntryKind { Sde, FiniteTransformation, InfinitesimalSymmetry };

std::string to_string(EntryKind k);

using CatalogParams = std::map<std::string, std::string>;

struct CatalogEntry {
    std::string name;
    EntryKind kind = EntryKind::Sde;
    /// Effective parameters, defaults filled in.
    CatalogParams params;
    std::string note;

    std::optional<SdeSpec> sde;
    std::optional<StochTransformation> transformation;
    std::optional<sdesym::InfinitesimalSymmetry> symmetry;

    /// For finite transformations: the reference SDE (catalog ref) and the symmetry
    /// kind the entry is claimed to satisfy, or "maps-to:<ref>" for pure maps.
    std::string base_sde;
    std::string claim;
};

/// Builds an entry; throws CatalogError for unknown names or bad parameters.
CatalogEntry catalog_get(const std::string& name, const CatalogParams& params = {});

/// "name:key=value,key=value". Commas inside parentheses belong to the value.
CatalogEntry catalog_get_ref(const std::string& ref);
std::pair<std::string, CatalogParams> parse_catalog_ref(const std::string& ref);

struct CatalogInfo {
    std::string name;
    EntryKind kind;
    std::string signature;
    std::string note;
};
const std::vector<CatalogInfo>& catalog_list();

/// Replaces min/max by indicator forms a*[a<b] + b*(1-[a<b]) built from sgn and abs,
/// so that differentiation yields the one-sided convention (derivative of min(t, s) is
/// 1 for t < s and 0 for t >= s).
Expr rewrite_kinks(const Expr& e);

}  // namespace sdesym
