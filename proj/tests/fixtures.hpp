#pragma once

// Shared graph fixtures for the test suites.

#include <string>
#include <vector>

#include "camr/graph.hpp"

namespace fixtures {

using namespace camr;

// 钱塘江大潮被称为天下奇观 — the running example: a continuous multiword
// entity, an unaligned Event concept triggered at x2, a sense-normalized
// predicate, and 被 as functional word marking arg1.
inline AmrGraph qiantang_graph() {
    AmrGraph g;
    g.sentence.id = "demo-1";
    g.sentence.tokens = {
        {1, "钱塘江", false}, {2, "大潮", false}, {3, "被", true},
        {4, "称为", false},   {5, "天下", false}, {6, "奇观", false},
    };
    g.concepts = {
        {"x1_2", "钱塘江大潮", ContinuousMultiwordAlign{{1, 2}}, false},
        {"x4", "称为-01", NormalizationAlign{4, "称为"}, false},
        {"x6", "奇观", DirectAlign{6}, false},
        {"z1", "Event", NullAlign{2}, false},
    };
    g.edges = {
        {"x4", "x6", "arg0", std::nullopt},
        {"x4", "z1", "arg1", 3},
        {"x4", "x1_2", "mod", std::nullopt},
        {"z1", "x1_2", "mod", std::nullopt},
    };
    g.sort_edges();
    g.root = "x4";
    return g;
}

inline AmrGraph single_concept_graph(const std::string& label = "奇观") {
    AmrGraph g;
    g.sentence.id = "single";
    g.sentence.tokens = {{1, label, false}};
    g.concepts = {{"x1", label, DirectAlign{1}, false}};
    g.root = "x1";
    return g;
}

}  // namespace fixtures
