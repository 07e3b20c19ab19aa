#ifndef QNET_JSON_IO_HPP
#define QNET_JSON_IO_HPP

#include <string>

#include <json.hpp>

#include "qnet/model.hpp"

namespace qnet {

using json = nlohmann::ordered_json;

// Network spec files use 1-based node indices and the layout
//   {"nodes": J, "routing": [[..]], "exit": [..]?, "service": [..],
//    "kind": {"open":{"nu":[..]}} | {"closed":{"population":N}}}
// Throws SpecParseError on malformed input.
NetworkModel model_from_json(const json& doc);
NetworkModel load_model_file(const std::string& path);

// Echo of a model in the same schema the loader accepts.
json model_to_json(const NetworkModel& model);

// Serializes a json document with every finite double rendered at 17
// significant digits, so emitted reports are byte-stable and round-trip
// exactly. nlohmann's own dump() uses shortest-representation floats.
std::string dump_json(const json& doc, int indent = 2);

// Shared formatting for CSV cells and JSON numbers.
std::string format_double(double v);

}  // namespace qnet

#endif  // QNET_JSON_IO_HPP
