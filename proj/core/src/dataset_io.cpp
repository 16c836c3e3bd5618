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

#include "mvsemi/dataset_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace mvsemi {

namespace {

std::string view_stem(int v)
{
    return "view_" + std::to_string(v);
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::string_view trim_cr(std::string_view s)
{
    if (!s.empty() && s.back() == '\r')
        s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view cell, const fs::path &file, std::size_t line_no)
{
    T value{};
    const auto *first = cell.data();
    const auto *last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw MalformedInput(file.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(cell) +
                             "'");
    return value;
}

std::string format_float(float f)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), f);
    return std::string(buf, ptr);
}

std::ifstream open_in(const fs::path &path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream in(path, mode);
    if (!in)
        throw MalformedInput("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path &path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

struct ViewRows {
    std::vector<std::int64_t> ids;
    std::vector<Features> rows;
};

ViewRows read_view_csv(const fs::path &path, int expected_width)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw MalformedInput(path.string() + ": missing header row");
    const auto header = split_csv_line(trim_cr(line));
    if (static_cast<int>(header.size()) - 1 != expected_width)
        throw MalformedInput(path.string() + ": header has " + std::to_string(header.size() - 1) +
                             " feature columns, schema expects " + std::to_string(expected_width));
    ViewRows out;
    std::set<std::int64_t> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim_cr(line);
        if (body.empty())
            continue;
        const auto cells = split_csv_line(body);
        if (static_cast<int>(cells.size()) - 1 != expected_width)
            throw MalformedInput(path.string() + ":" + std::to_string(line_no) + ": row has " +
                                 std::to_string(cells.size() - 1) + " features, schema expects " +
                                 std::to_string(expected_width));
        const auto id = parse_number<std::int64_t>(cells[0], path, line_no);
        if (!seen.insert(id).second)
            throw MalformedInput(path.string() + ":" + std::to_string(line_no) + ": duplicate sample_id " +
                                 std::to_string(id));
        Features f(static_cast<std::size_t>(expected_width));
        for (int k = 0; k < expected_width; ++k)
            f[static_cast<std::size_t>(k)] = parse_number<float>(cells[static_cast<std::size_t>(k) + 1], path, line_no);
        out.ids.push_back(id);
        out.rows.push_back(std::move(f));
    }
    return out;
}

struct LabelRows {
    std::vector<std::int64_t> order;
    std::map<std::int64_t, std::optional<int>> labels;
};

LabelRows read_labels_csv(const fs::path &path)
{
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line))
        throw MalformedInput(path.string() + ": missing header row");
    LabelRows out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim_cr(line);
        if (body.empty())
            continue;
        const auto cells = split_csv_line(body);
        if (cells.size() != 2)
            throw MalformedInput(path.string() + ":" + std::to_string(line_no) + ": expected sample_id,label");
        const auto id = parse_number<std::int64_t>(cells[0], path, line_no);
        if (out.labels.count(id))
            throw MalformedInput(path.string() + ":" + std::to_string(line_no) + ": duplicate sample_id " +
                                 std::to_string(id));
        std::optional<int> label;
        if (!cells[1].empty())
            label = parse_number<int>(cells[1], path, line_no);
        out.order.push_back(id);
        out.labels[id] = label;
    }
    return out;
}

ViewRows read_view_bin(const fs::path &bin_path, const fs::path &meta_path, const ViewShape &shape)
{
    nlohmann::json meta;
    {
        auto in = open_in(meta_path);
        try {
            in >> meta;
        } catch (const nlohmann::json::exception &e) {
            throw MalformedInput(meta_path.string() + ": " + e.what());
        }
    }
    const auto meta_shape = meta.at("shape").get<ViewShape>();
    if (!(meta_shape == shape))
        throw MalformedInput(meta_path.string() + ": shape differs from schema");
    if (meta.at("dtype").get<std::string>() != "float32")
        throw MalformedInput(meta_path.string() + ": unsupported dtype");
    ViewRows out;
    out.ids = meta.at("sample_ids").get<std::vector<std::int64_t>>();
    const auto count = meta.at("count").get<std::size_t>();
    if (count != out.ids.size())
        throw MalformedInput(meta_path.string() + ": count does not match sample_ids");
    if (std::set<std::int64_t>(out.ids.begin(), out.ids.end()).size() != out.ids.size())
        throw MalformedInput(meta_path.string() + ": duplicate sample_id");
    const auto width = static_cast<std::size_t>(shape.size());
    const auto expected_bytes = count * width * sizeof(float);
    if (fs::file_size(bin_path) != expected_bytes)
        throw MalformedInput(bin_path.string() + ": size does not match count x shape");
    auto in = open_in(bin_path, std::ios::binary);
    for (std::size_t i = 0; i < count; ++i) {
        Features f(width);
        in.read(reinterpret_cast<char *>(f.data()), static_cast<std::streamsize>(width * sizeof(float)));
        out.rows.push_back(std::move(f));
    }
    return out;
}

} // namespace

std::string sha256_bytes(std::string_view bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw std::runtime_error("sha256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256_file(const fs::path &path)
{
    auto in = open_in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_bytes(ss.str());
}

void write_view_csv(const Dataset &dataset, int view, const fs::path &path)
{
    auto out = open_out(path);
    const int d = dataset.schema.view_dim(view);
    out << "sample_id";
    for (int k = 0; k < d; ++k)
        out << ",f" << k;
    out << '\n';
    for (const auto &s : dataset.samples) {
        if (!s.present(view))
            continue;
        out << s.sample_id;
        for (float f : *s.views[static_cast<std::size_t>(view)])
            out << ',' << format_float(f);
        out << '\n';
    }
}

void write_labels_csv(const Dataset &dataset, const fs::path &path)
{
    auto out = open_out(path);
    out << "sample_id,label\n";
    for (const auto &s : dataset.samples) {
        out << s.sample_id << ',';
        if (s.label)
            out << *s.label;
        out << '\n';
    }
}

void write_dataset_dir(const Dataset &dataset, const fs::path &dir, const nlohmann::json &extra)
{
    dataset.validate();
    fs::create_directories(dir);
    nlohmann::json checksums = nlohmann::json::object();
    for (int v = 0; v < dataset.schema.num_views; ++v) {
        const auto &shape = dataset.schema.view_shapes[static_cast<std::size_t>(v)];
        if (!shape.is_image()) {
            const std::string name = view_stem(v) + ".csv";
            write_view_csv(dataset, v, dir / name);
            checksums[name] = sha256_file(dir / name);
            continue;
        }
        const std::string bin = view_stem(v) + ".bin";
        const std::string meta_name = view_stem(v) + ".meta.json";
        std::vector<std::int64_t> ids;
        {
            auto out = open_out(dir / bin, std::ios::binary);
            for (const auto &s : dataset.samples) {
                if (!s.present(v))
                    continue;
                ids.push_back(s.sample_id);
                const auto &f = *s.views[static_cast<std::size_t>(v)];
                out.write(reinterpret_cast<const char *>(f.data()),
                          static_cast<std::streamsize>(f.size() * sizeof(float)));
            }
        }
        nlohmann::json meta = {{"shape", shape}, {"dtype", "float32"}, {"count", ids.size()}, {"sample_ids", ids}};
        open_out(dir / meta_name) << meta.dump(2) << '\n';
        checksums[bin] = sha256_file(dir / bin);
        checksums[meta_name] = sha256_file(dir / meta_name);
    }
    write_labels_csv(dataset, dir / "labels.csv");
    checksums["labels.csv"] = sha256_file(dir / "labels.csv");

    nlohmann::json manifest = extra.is_object() ? extra : nlohmann::json::object();
    manifest["schema"] = dataset.schema;
    manifest["split"] = to_string(dataset.split);
    manifest["n_samples"] = dataset.samples.size();
    manifest["n_labeled"] = dataset.labeled_count();
    manifest["checksums"] = checksums;
    open_out(dir / "manifest.json") << manifest.dump(2) << '\n';
}

nlohmann::json read_manifest(const fs::path &dir)
{
    auto in = open_in(dir / "manifest.json");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw MalformedInput((dir / "manifest.json").string() + ": " + e.what());
    }
}

Dataset read_dataset_dir(const fs::path &dir, bool verify)
{
    const auto manifest = read_manifest(dir);
    if (verify) {
        for (const auto &[name, digest] : manifest.at("checksums").items()) {
            if (!fs::exists(dir / name))
                throw IntegrityError((dir / name).string() + ": listed in manifest but missing");
            if (sha256_file(dir / name) != digest.get<std::string>())
                throw IntegrityError((dir / name).string() + ": checksum mismatch");
        }
    }
    Dataset d;
    d.schema = manifest.at("schema").get<DatasetSchema>();
    d.schema.validate();
    d.split = parse_split_tag(manifest.at("split").get<std::string>());
    const int V = d.schema.num_views;

    const auto labels = read_labels_csv(dir / "labels.csv");
    std::map<std::int64_t, std::size_t> slot;
    d.samples.resize(labels.order.size());
    for (std::size_t i = 0; i < labels.order.size(); ++i) {
        auto &s = d.samples[i];
        s.sample_id = labels.order[i];
        s.label = labels.labels.at(s.sample_id);
        s.views.resize(static_cast<std::size_t>(V));
        slot[s.sample_id] = i;
    }
    for (int v = 0; v < V; ++v) {
        const auto &shape = d.schema.view_shapes[static_cast<std::size_t>(v)];
        ViewRows rows = shape.is_image()
                            ? read_view_bin(dir / (view_stem(v) + ".bin"), dir / (view_stem(v) + ".meta.json"), shape)
                            : read_view_csv(dir / (view_stem(v) + ".csv"), shape.size());
        for (std::size_t r = 0; r < rows.ids.size(); ++r) {
            const auto it = slot.find(rows.ids[r]);
            if (it == slot.end())
                throw MalformedInput(dir.string() + ": view " + std::to_string(v) + " lists sample " +
                                     std::to_string(rows.ids[r]) + " absent from labels.csv");
            d.samples[it->second].views[static_cast<std::size_t>(v)] = std::move(rows.rows[r]);
        }
    }
    d.validate();
    return d;
}

Dataset load_tabular_csv(const std::vector<fs::path> &view_paths, const std::optional<fs::path> &label_path,
                         const DatasetSchema &schema, SplitTag split)
{
    schema.validate();
    if (static_cast<int>(view_paths.size()) != schema.num_views)
        throw MalformedInput("load_tabular_csv: expected " + std::to_string(schema.num_views) + " view files, got " +
                             std::to_string(view_paths.size()));
    std::map<std::int64_t, MultiViewSample> by_id;
    for (int v = 0; v < schema.num_views; ++v) {
        ViewRows rows = read_view_csv(view_paths[static_cast<std::size_t>(v)], schema.view_dim(v));
        for (std::size_t r = 0; r < rows.ids.size(); ++r) {
            auto &s = by_id[rows.ids[r]];
            s.sample_id = rows.ids[r];
            s.views.resize(static_cast<std::size_t>(schema.num_views));
            s.views[static_cast<std::size_t>(v)] = std::move(rows.rows[r]);
        }
    }
    if (label_path) {
        const auto labels = read_labels_csv(*label_path);
        for (auto &[id, s] : by_id) {
            const auto it = labels.labels.find(id);
            if (it != labels.labels.end())
                s.label = it->second;
        }
    }
    Dataset d;
    d.schema = schema;
    d.split = split;
    for (auto &[id, s] : by_id)
        d.samples.push_back(std::move(s));
    try {
        d.validate();
    } catch (const std::invalid_argument &e) {
        throw MalformedInput(std::string("load_tabular_csv: ") + e.what());
    }
    return d;
}

} // namespace mvsemi
