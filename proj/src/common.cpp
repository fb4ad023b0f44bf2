#include "htgnn/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace htgnn {

EdgeSet make_edge_set(std::vector<Edge> edges, bool sum_duplicates) {
    for (auto& e : edges) {
        if (e.src < 0 || e.dst < 0) {
            throw ValidationError("negative edge endpoint");
        }
        if (e.src == e.dst) {
            throw ValidationError("self-loop on node " + std::to_string(e.src));
        }
        if (e.src > e.dst) std::swap(e.src, e.dst);
    }
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.src != b.src ? a.src < b.src : a.dst < b.dst;
    });
    EdgeSet out;
    out.reserve(edges.size());
    for (const auto& e : edges) {
        if (!out.empty() && out.back() == e) {
            if (sum_duplicates) out.back().weight += e.weight;
            continue;
        }
        out.push_back(e);
    }
    return out;
}

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw std::runtime_error("float formatting failed");
    return std::string(buf.data(), ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

double parse_double(std::string_view token) {
    token = trim(token);
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ValidationError("not a number: '" + std::string(token) + "'");
    }
    return value;
}

long long parse_int(std::string_view token) {
    token = trim(token);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ValidationError("not an integer: '" + std::string(token) + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace htgnn
