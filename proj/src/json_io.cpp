#include "qnet/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qnet/errors.hpp"

namespace qnet {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw SpecParseError(msg); }

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(where + " must be a number");
    return v.get<double>();
}

Eigen::VectorXd as_vector(const json& v, int expect, const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != expect)
        fail(where + " must be an array of length " + std::to_string(expect));
    Eigen::VectorXd out(expect);
    for (int i = 0; i < expect; ++i) out(i) = as_number(v[i], where);
    return out;
}

}  // namespace

NetworkModel model_from_json(const json& doc) {
    if (!doc.is_object()) fail("spec root must be an object");
    if (!doc.contains("nodes")) fail("missing \"nodes\"");
    if (!doc["nodes"].is_number_integer()) fail("\"nodes\" must be an integer");
    int j_count = doc["nodes"].get<int>();
    if (j_count < 1) fail("\"nodes\" must be >= 1");

    if (!doc.contains("routing")) fail("missing \"routing\"");
    const json& rows = doc["routing"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != j_count)
        fail("\"routing\" must be a " + std::to_string(j_count) + "-row matrix");
    Eigen::MatrixXd p(j_count, j_count);
    for (int j = 0; j < j_count; ++j) {
        p.row(j) = as_vector(rows[j], j_count, "routing row " + std::to_string(j + 1)).transpose();
    }
    NetworkModel model;
    model.routing = RoutingMatrix::from_probabilities(std::move(p));
    if (doc.contains("exit")) {
        model.routing.exit = as_vector(doc["exit"], j_count, "\"exit\"");
    }

    if (!doc.contains("service")) fail("missing \"service\"");
    const json& svc = doc["service"];
    if (!svc.is_array() || static_cast<int>(svc.size()) != j_count)
        fail("\"service\" must list one entry per node");
    for (int j = 0; j < j_count; ++j) {
        const json& s = svc[j];
        if (!s.is_object() || !s.contains("type")) fail("service entry " + std::to_string(j + 1) + " malformed");
        std::string type = s["type"].get<std::string>();
        if (type == "constant") {
            if (!s.contains("rate")) fail("constant service entry needs \"rate\"");
            model.service.push_back(ServiceRate::constant(as_number(s["rate"], "service rate")));
        } else if (type == "table") {
            if (!s.contains("rates") || !s["rates"].is_array() || s["rates"].empty())
                fail("table service entry needs non-empty \"rates\"");
            std::vector<double> rates;
            for (const auto& v : s["rates"]) rates.push_back(as_number(v, "service rate"));
            model.service.push_back(ServiceRate::table(std::move(rates)));
        } else {
            fail("unknown service type \"" + type + "\"");
        }
    }

    if (!doc.contains("kind") || !doc["kind"].is_object()) fail("missing \"kind\"");
    const json& kind = doc["kind"];
    if (kind.contains("open")) {
        if (!kind["open"].is_object() || !kind["open"].contains("nu")) fail("open kind needs \"nu\"");
        model.kind = OpenKind{as_vector(kind["open"]["nu"], j_count, "\"nu\"")};
    } else if (kind.contains("closed")) {
        if (!kind["closed"].is_object() || !kind["closed"].contains("population"))
            fail("closed kind needs \"population\"");
        const json& n = kind["closed"]["population"];
        if (!n.is_number_integer()) fail("\"population\" must be an integer");
        model.kind = ClosedKind{n.get<int>()};
    } else {
        fail("\"kind\" must contain \"open\" or \"closed\"");
    }
    return model;
}

NetworkModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open spec file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail("invalid JSON in " + path + ": " + e.what());
    }
    return model_from_json(doc);
}

json model_to_json(const NetworkModel& model) {
    json doc;
    int j_count = model.nodes();
    doc["nodes"] = j_count;
    json rows = json::array();
    for (int j = 0; j < j_count; ++j) {
        json row = json::array();
        for (int k = 0; k < j_count; ++k) row.push_back(model.routing.p(j, k));
        rows.push_back(std::move(row));
    }
    doc["routing"] = std::move(rows);
    json exits = json::array();
    for (int j = 0; j < j_count; ++j) exits.push_back(model.routing.exit(j));
    doc["exit"] = std::move(exits);
    json svc = json::array();
    for (const auto& s : model.service) {
        json entry;
        if (s.is_constant()) {
            entry["type"] = "constant";
            entry["rate"] = s.tail_rate();
        } else {
            entry["type"] = "table";
            entry["rates"] = s.table_values();
        }
        svc.push_back(std::move(entry));
    }
    doc["service"] = std::move(svc);
    if (model.is_open()) {
        json nu = json::array();
        for (int j = 0; j < j_count; ++j) nu.push_back(model.open().nu(j));
        doc["kind"] = {{"open", {{"nu", std::move(nu)}}}};
    } else {
        doc["kind"] = {{"closed", {{"population", model.closed().population}}}};
    }
    return doc;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void dump_value(const json& v, std::string& out, int indent, int depth) {
    std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
    switch (v.type()) {
        case json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                append_escaped(out, it.key());
                out += ": ";
                dump_value(it.value(), out, indent, depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            // Flat arrays of scalars stay on one line; nested ones wrap.
            bool scalars = true;
            for (const auto& e : v) {
                if (e.is_structured()) {
                    scalars = false;
                    break;
                }
            }
            if (scalars) {
                out += "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ", ";
                    dump_value(v[i], out, indent, depth + 1);
                }
                out += "]";
            } else {
                out += "[\n";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ",\n";
                    out += pad;
                    dump_value(v[i], out, indent, depth + 1);
                }
                out += "\n" + close_pad + "]";
            }
            return;
        }
        case json::value_t::string:
            append_escaped(out, v.get<std::string>());
            return;
        case json::value_t::boolean:
            out += v.get<bool>() ? "true" : "false";
            return;
        case json::value_t::number_integer:
            out += std::to_string(v.get<std::int64_t>());
            return;
        case json::value_t::number_unsigned:
            out += std::to_string(v.get<std::uint64_t>());
            return;
        case json::value_t::number_float:
            out += format_double(v.get<double>());
            return;
        default:
            out += "null";
            return;
    }
}

}  // namespace

std::string dump_json(const json& doc, int indent) {
    std::string out;
    dump_value(doc, out, indent, 0);
    out += "\n";
    return out;
}

}  // namespace qnet
