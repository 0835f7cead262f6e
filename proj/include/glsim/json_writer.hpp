#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace glsim {

// minimal JSON assembly with byte-stable number formatting: doubles are
// serialized with 9 significant digits, which round-trips the values the
// pipeline reports and keeps output identical across runs and platforms.
struct json_writer {
    std::string out;

    void raw(const std::string& s) { out += s; }

    void number(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        out += buf;
    }

    void number(int v) { out += std::to_string(v); }
    void number(long long v) { out += std::to_string(v); }

    void string(const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default: out += c;
            }
        }
        out += '"';
    }

    void key(const std::string& k) {
        string(k);
        out += ':';
    }

    template <typename T>
    void number_array(const std::vector<T>& vals) {
        out += '[';
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) out += ',';
            number(vals[i]);
        }
        out += ']';
    }
};

} // namespace glsim
