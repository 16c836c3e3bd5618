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

#ifndef MVSEMI_SCHEMA_HPP_
#define MVSEMI_SCHEMA_HPP_

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mvsemi {

enum class ViewLikelihood { gaussian_unit_variance, bernoulli };

/// Flat views use height = channels = 1.
struct ViewShape {
    int height = 1;
    int width = 1;
    int channels = 1;

    static ViewShape flat(int length) { return {1, length, 1}; }
    static ViewShape image(int side, int channels = 1) { return {side, side, channels}; }

    int size() const { return height * width * channels; }
    bool is_image() const { return height > 1; }
    bool operator==(const ViewShape &) const = default;
};

struct DatasetSchema {
    int num_views = 0;
    std::vector<ViewShape> view_shapes;
    int num_classes = 2;
    std::vector<ViewLikelihood> view_likelihood;

    /// Throws std::invalid_argument unless V >= 2, every d_v >= 1, and at
    /// least two classes.
    void validate() const;
    int view_dim(int v) const { return view_shapes.at(static_cast<std::size_t>(v)).size(); }
    bool operator==(const DatasetSchema &) const = default;
};

enum class SplitTag { train, val, test };

std::string to_string(ViewLikelihood v);
std::string to_string(SplitTag s);
ViewLikelihood parse_view_likelihood(std::string_view s);
SplitTag parse_split_tag(std::string_view s);

void to_json(nlohmann::json &j, const ViewShape &s);
void from_json(const nlohmann::json &j, ViewShape &s);
void to_json(nlohmann::json &j, const DatasetSchema &s);
void from_json(const nlohmann::json &j, DatasetSchema &s);

/// Error for malformed configuration or manifest content.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Throws ConfigError naming the first key of `j` outside `allowed`.
void reject_unknown_keys(const nlohmann::json &j, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

} // namespace mvsemi

#endif // MVSEMI_SCHEMA_HPP_
