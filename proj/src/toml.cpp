#include "fep/toml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "fep/errors.hpp"

namespace fep::toml {

const Value& Table::at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigInvalid("missing config key: " + key);
    return it->second;
}

std::string Table::get_string(const std::string& key, std::optional<std::string> fallback) const {
    if (!contains(key)) {
        if (fallback) return *fallback;
        throw ConfigInvalid("missing config key: " + key);
    }
    const Value& v = at(key);
    if (!v.is_string()) throw ConfigInvalid("config key is not a string: " + key);
    return v.as_string();
}

std::int64_t Table::get_int(const std::string& key, std::optional<std::int64_t> fallback) const {
    if (!contains(key)) {
        if (fallback) return *fallback;
        throw ConfigInvalid("missing config key: " + key);
    }
    const Value& v = at(key);
    if (!v.is_int()) throw ConfigInvalid("config key is not an integer: " + key);
    return v.as_int();
}

double Table::get_float(const std::string& key, std::optional<double> fallback) const {
    if (!contains(key)) {
        if (fallback) return *fallback;
        throw ConfigInvalid("missing config key: " + key);
    }
    const Value& v = at(key);
    if (!v.is_int() && !v.is_float()) throw ConfigInvalid("config key is not a number: " + key);
    return v.as_float();
}

bool Table::get_bool(const std::string& key, std::optional<bool> fallback) const {
    if (!contains(key)) {
        if (fallback) return *fallback;
        throw ConfigInvalid("missing config key: " + key);
    }
    const Value& v = at(key);
    if (!v.is_bool()) throw ConfigInvalid("config key is not a boolean: " + key);
    return v.as_bool();
}

std::vector<double> Table::get_float_array(const std::string& key, std::vector<double> fallback) const {
    if (!contains(key)) return fallback;
    const Value& v = at(key);
    if (!v.is_array()) throw ConfigInvalid("config key is not an array: " + key);
    std::vector<double> out;
    for (const auto& e : v.as_array()) {
        if (!e.is_int() && !e.is_float()) throw ConfigInvalid("array element is not a number: " + key);
        out.push_back(e.as_float());
    }
    return out;
}

std::vector<std::int64_t> Table::get_int_array(const std::string& key,
                                               std::vector<std::int64_t> fallback) const {
    if (!contains(key)) return fallback;
    const Value& v = at(key);
    if (!v.is_array()) throw ConfigInvalid("config key is not an array: " + key);
    std::vector<std::int64_t> out;
    for (const auto& e : v.as_array()) {
        if (!e.is_int()) throw ConfigInvalid("array element is not an integer: " + key);
        out.push_back(e.as_int());
    }
    return out;
}

namespace {

struct Cursor {
    const std::string& s;
    std::size_t i = 0;
    int line = 1;

    bool done() const { return i >= s.size(); }
    char peek() const { return s[i]; }
    char take() {
        char c = s[i++];
        if (c == '\n') ++line;
        return c;
    }
    void skip_ws() {
        while (!done() && (peek() == ' ' || peek() == '\t')) ++i;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigInvalid("config parse error at line " + std::to_string(line) + ": " + msg);
    }
};

Value parse_value(Cursor& c);

Value parse_scalar(Cursor& c) {
    c.skip_ws();
    if (c.done()) c.fail("expected a value");
    char ch = c.peek();
    if (ch == '"') {
        c.take();
        std::string out;
        while (!c.done() && c.peek() != '"') {
            char x = c.take();
            if (x == '\\' && !c.done()) {
                char e = c.take();
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: c.fail("unsupported escape");
                }
            } else {
                out += x;
            }
        }
        if (c.done()) c.fail("unterminated string");
        c.take();
        return Value{out};
    }
    std::string tok;
    while (!c.done() && c.peek() != '\n' && c.peek() != '#' && c.peek() != ',' && c.peek() != ']')
        tok += c.take();
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    if (tok == "true") return Value{true};
    if (tok == "false") return Value{false};
    if (tok.empty()) c.fail("empty value");
    bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "-inf" ||
                    tok == "nan";
    try {
        std::size_t used = 0;
        if (is_float) {
            double d = std::stod(tok, &used);
            if (used != tok.size()) c.fail("trailing characters in number: " + tok);
            return Value{d};
        }
        std::int64_t n = std::stoll(tok, &used);
        if (used != tok.size()) c.fail("trailing characters in number: " + tok);
        return Value{n};
    } catch (const std::exception&) {
        c.fail("cannot parse value: " + tok);
    }
}

Value parse_value(Cursor& c) {
    c.skip_ws();
    if (!c.done() && c.peek() == '[') {
        c.take();
        std::vector<Value> items;
        while (true) {
            c.skip_ws();
            while (!c.done() && c.peek() == '\n') {
                c.take();
                c.skip_ws();
            }
            if (c.done()) c.fail("unterminated array");
            if (c.peek() == ']') {
                c.take();
                break;
            }
            items.push_back(parse_value(c));
            c.skip_ws();
            while (!c.done() && c.peek() == '\n') {
                c.take();
                c.skip_ws();
            }
            if (!c.done() && c.peek() == ',') c.take();
        }
        return Value{items};
    }
    return parse_scalar(c);
}

}  // namespace

Table parse(const std::string& text) {
    Table table;
    Cursor c{text};
    std::string section;
    while (!c.done()) {
        c.skip_ws();
        if (c.done()) break;
        char ch = c.peek();
        if (ch == '\n') {
            c.take();
            continue;
        }
        if (ch == '#') {
            while (!c.done() && c.peek() != '\n') c.take();
            continue;
        }
        if (ch == '[') {
            c.take();
            std::string name;
            while (!c.done() && c.peek() != ']' && c.peek() != '\n') name += c.take();
            if (c.done() || c.peek() != ']') c.fail("unterminated table header");
            c.take();
            section = name;
            continue;
        }
        std::string key;
        while (!c.done() && (std::isalnum(static_cast<unsigned char>(c.peek())) || c.peek() == '_' ||
                             c.peek() == '.' || c.peek() == '-'))
            key += c.take();
        c.skip_ws();
        if (key.empty() || c.done() || c.peek() != '=') c.fail("expected key = value");
        c.take();
        Value v = parse_value(c);
        c.skip_ws();
        if (!c.done() && c.peek() == '#')
            while (!c.done() && c.peek() != '\n') c.take();
        if (!c.done() && c.peek() != '\n') c.fail("unexpected trailing content");
        table.set(section.empty() ? key : section + "." + key, std::move(v));
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace fep::toml
