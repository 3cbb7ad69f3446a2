#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nmx/inference.hpp"
#include "nmx/model.hpp"

namespace nmx {

using Json = nlohmann::json;

inline constexpr const char* kNetworkFormat = "nmx-net";
inline constexpr const char* kExpandedFormat = "nmx-expanded";

// Canonical nmx-net text: sorted keys, two-space indentation, shortest
// round-tripping doubles, trailing newline. Equal networks give equal bytes.
std::string save_network(const Network& net);

// Parses and validates. Throws ParseError (line/column), SchemaError (field
// path) or ValidationError (invariant report).
Network load_network(std::string_view text);

// Hex SHA-256 of the canonical serialization.
std::string version_id(const Network& net);
std::string sha256_hex(std::string_view data);

// Full-table exchange document for general BN engines. Throws CapacityError
// naming the node whose table exceeds `cap`.
std::string export_expanded(const Network& net, std::size_t cap = kDefaultExpansionCap);
TableNetwork load_expanded(std::string_view text);

// JSON fragments shared by the diff format, the service and the CLI.
Json network_to_json(const Network& net);
Network network_from_json(const Json& doc);  // schema checks only
Json node_to_json(const Network& net, const NodeId& id);
// Adds the node described by `payload` to `builder`; `field` prefixes schema
// error paths.
void node_from_json(const Json& payload, NetworkBuilder& builder, const std::string& field);
Json view_to_json(const ViewSpec& view);
Json provenance_to_json(const Provenance& prov);
Provenance provenance_from_json(const Json& doc, const std::string& field);
ViewSpec view_from_json(const Json& doc);
Json marginals_to_json(const MarginalTable& marginals);
Json report_to_json(const ValidationReport& report);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& doc, const std::string& field);

// Parses JSON text, converting nlohmann errors into ParseError with line and
// column.
Json parse_json(std::string_view text);

// Values are state names or decimal state indices.
Evidence parse_evidence(const Network& net, const std::map<std::string, std::string>& assignments);

// {"version", "marginals"} for the query nodes (all nodes when empty); shared
// by the CLI and the service so both answer byte-identically.
Json inference_report(const Network& net, const Evidence& evidence, const std::set<NodeId>& query,
                      std::size_t factor_cap = kFactorCap);

// Canonical text for any JSON document (same formatting as save_network).
std::string canonical_dump(const Json& doc);

}  // namespace nmx
