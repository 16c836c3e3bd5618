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

#include "mvsemi/schema.hpp"

#include <algorithm>
#include <stdexcept>

namespace mvsemi {

void DatasetSchema::validate() const
{
    if (num_views < 2)
        throw std::invalid_argument("schema: need at least 2 views, got " + std::to_string(num_views));
    if (static_cast<int>(view_shapes.size()) != num_views || static_cast<int>(view_likelihood.size()) != num_views)
        throw std::invalid_argument("schema: per-view lists must have num_views entries");
    for (const auto &s : view_shapes)
        if (s.height < 1 || s.width < 1 || s.channels < 1)
            throw std::invalid_argument("schema: every view dimension must be at least 1");
    if (num_classes < 2)
        throw std::invalid_argument("schema: need at least 2 classes, got " + std::to_string(num_classes));
}

std::string to_string(ViewLikelihood v)
{
    return v == ViewLikelihood::bernoulli ? "bernoulli" : "gaussian-unit-variance";
}

std::string to_string(SplitTag s)
{
    switch (s) {
    case SplitTag::train:
        return "train";
    case SplitTag::val:
        return "val";
    case SplitTag::test:
        return "test";
    }
    return "train";
}

ViewLikelihood parse_view_likelihood(std::string_view s)
{
    if (s == "bernoulli")
        return ViewLikelihood::bernoulli;
    if (s == "gaussian-unit-variance")
        return ViewLikelihood::gaussian_unit_variance;
    throw ConfigError("unknown view likelihood '" + std::string(s) + "'");
}

SplitTag parse_split_tag(std::string_view s)
{
    if (s == "train")
        return SplitTag::train;
    if (s == "val")
        return SplitTag::val;
    if (s == "test")
        return SplitTag::test;
    throw ConfigError("unknown split '" + std::string(s) + "'");
}

void to_json(nlohmann::json &j, const ViewShape &s)
{
    j = nlohmann::json::array({s.height, s.width, s.channels});
}

void from_json(const nlohmann::json &j, ViewShape &s)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("view shape must be [height, width, channels]");
    s = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

void to_json(nlohmann::json &j, const DatasetSchema &s)
{
    nlohmann::json lik = nlohmann::json::array();
    for (auto l : s.view_likelihood)
        lik.push_back(to_string(l));
    j = {{"num_views", s.num_views},
         {"view_shapes", s.view_shapes},
         {"num_classes", s.num_classes},
         {"view_likelihood", lik}};
}

void from_json(const nlohmann::json &j, DatasetSchema &s)
{
    reject_unknown_keys(j, {"num_views", "view_shapes", "num_classes", "view_likelihood"}, "schema");
    s.num_views = j.at("num_views").get<int>();
    s.view_shapes = j.at("view_shapes").get<std::vector<ViewShape>>();
    s.num_classes = j.at("num_classes").get<int>();
    s.view_likelihood.clear();
    for (const auto &l : j.at("view_likelihood"))
        s.view_likelihood.push_back(parse_view_likelihood(l.get<std::string>()));
}

void reject_unknown_keys(const nlohmann::json &j, std::initializer_list<std::string_view> allowed,
                         std::string_view context)
{
    if (!j.is_object())
        throw ConfigError(std::string(context) + ": expected a JSON object");
    for (const auto &item : j.items())
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError(std::string(context) + ": unknown key '" + item.key() + "'");
}

} // namespace mvsemi
