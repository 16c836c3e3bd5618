/* Copyright 2026 The mvsemi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/

#include "criteria.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

namespace {

using mvsemi::acceptance::Criterion;

std::set<int> parse_ids(const std::string &s)
{
    std::set<int> ids;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        ids.insert(std::stoi(item));
    return ids;
}

void usage()
{
    std::cerr << "usage: mvsemi_acceptance [--only 1,2,...] [--list]\n";
}

} // namespace

int main(int argc, char **argv)
{
    std::set<int> only;
    bool list = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            try {
                only = parse_ids(argv[++i]);
            } catch (const std::exception &) {
                usage();
                return 2;
            }
        } else if (arg == "--list") {
            list = true;
        } else {
            usage();
            return 2;
        }
    }

    std::vector<Criterion> all = mvsemi::acceptance::exact_criteria();
    for (auto &c : mvsemi::acceptance::trend_criteria())
        all.push_back(std::move(c));
    std::sort(all.begin(), all.end(), [](const Criterion &a, const Criterion &b) { return a.id < b.id; });

    if (list) {
        for (const auto &c : all)
            std::cout << fmt::format("{:>2}  {}  (budget {:.0f}s)\n", c.id, c.name, c.budget_seconds);
        return 0;
    }

    int failed = 0;
    for (const auto &c : all) {
        if (!only.empty() && !only.contains(c.id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        mvsemi::acceptance::Verdict v;
        try {
            v = c.run();
        } catch (const std::exception &e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.budget_seconds) {
            v.pass = false;
            v.detail += fmt::format("; over budget ({:.0f}s > {:.0f}s)", seconds, c.budget_seconds);
        }
        failed += v.pass ? 0 : 1;
        std::cout << fmt::format("{} criterion {:>2} [{}] {} ({:.1f}s)\n", v.pass ? "PASS" : "FAIL", c.id, c.name,
                                 v.detail, seconds)
                  << std::flush;
    }
    return failed == 0 ? 0 : 1;
}
