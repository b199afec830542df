#include "nete/json_writer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace nete {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_double_short(double v) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

namespace {

void write(const nlohmann::json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (j.type()) {
        case nlohmann::json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            // nlohmann::json objects are std::map backed, so items() is key-sorted.
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += inner;
                out += nlohmann::json(key).dump();
                out += ": ";
                write(value, out, indent + 1);
            }
            out += "\n" + pad + "}";
            return;
        }
        case nlohmann::json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                write(j[i], out, indent + 1);
            }
            out += "\n" + pad + "]";
            return;
        }
        case nlohmann::json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v))
                out += format_double(v);
            else
                out += "\"" + format_double(v) + "\"";
            return;
        }
        default:
            out += j.dump();
    }
}

}  // namespace

std::string write_json(const nlohmann::json& doc) {
    std::string out;
    write(doc, out, 0);
    out += '\n';
    return out;
}

}  // namespace nete
