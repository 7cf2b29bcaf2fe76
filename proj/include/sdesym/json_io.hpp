#pragma once

#include <string>

#include <json.hpp>

#include "sdesym/catalog.hpp"
#include "sdesym/ibp.hpp"
#include "sdesym/mc.hpp"
#include "sdesym/symmetry.hpp"

namespace sdesym {

using Json = nlohmann::ordered_json;

/// Pretty JSON with every number at 17 significant digits (%.17g), so reports diff
/// cleanly and round-trip exactly. Non-finite numbers become null.
std::string dump_json(const Json& j, int indent = 2);

Json to_json(const Expr& e);
Json to_json(const Field& f);
Json to_json(const SdeSpec& sde);
Json to_json(const StochTransformation& T);
Json to_json(const InfinitesimalSymmetry& V);
Json to_json(const CatalogEntry& e);
Json to_json(const Grid& g);
Json to_json(const ResidualReport& r);
Json to_json(const McConfig& c);
Json to_json(const Estimate& e);
Json to_json(const IbpReport& r);
Json to_json(const HypothesisAReport& r);

// Readers throw ValidationError for malformed documents and ParseError for bad expressions.

/// {"phi":[..], "phi_inv":[..]?, "f":expr?, "B":[[..]]?, "h":[..]?, "n":int, "d":int?}
StochTransformation transformation_from_json(const Json& j);
/// {"mu":[..], "sigma":[[..]], "n":int?, "d":int?}
SdeSpec sde_from_json(const Json& j);
/// {"Y":[..], "m":expr?, "C":[[..]]?, "H":[..]?, "n":int?, "d":int?}
InfinitesimalSymmetry symmetry_from_json(const Json& j);
/// Overwrites only the keys present.
void update_from_json(Grid& g, const Json& j);
void update_from_json(McConfig& c, const Json& j);

}  // namespace sdesym
