#include "proprio/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "proprio/pnm.hpp"
#include "proprio/util.hpp"

namespace fs = std::filesystem;

namespace proprio {

namespace {

std::string frame_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu.pgm", i);
    return buf;
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void require_finite_pose(const Pose& p, const std::string& where) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw std::runtime_error(where + ": non-finite pose");
    if (p.z < 0.0) throw std::runtime_error(where + ": negative elongation");
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    std::ostringstream index;
    index << "filename,timestamp_s,x_mm,y_mm,z_mm\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const Sample& s = ds.samples[i];
        const std::string name = frame_name(i);
        write_pgm(s.image, (fs::path(dir) / name).string());
        index << name << ',' << fixed6(s.timestamp) << ',' << fixed6(s.pose.x) << ','
              << fixed6(s.pose.y) << ',' << fixed6(s.pose.z) << '\n';
    }
    write_text_file((fs::path(dir) / "index.csv").string(), index.str());

    std::ostringstream meta;
    meta << "width=" << ds.meta.width << '\n';
    meta << "height=" << ds.meta.height << '\n';
    meta << "rate_hz=" << format_double(ds.meta.rate_hz) << '\n';
    meta << "seed=" << ds.meta.seed << '\n';
    meta << "config_hash=" << ds.meta.config_hash << '\n';
    write_text_file((fs::path(dir) / "meta.txt").string(), meta.str());
}

DatasetMeta for_each_sample(const std::string& dir,
                            const std::function<void(Sample&&, std::size_t, std::size_t)>& fn) {
    DatasetMeta meta;
    const std::string meta_path = (fs::path(dir) / "meta.txt").string();
    for (const std::string& line : split(read_text_file(meta_path), '\n')) {
        if (line.empty()) continue;
        const auto pos = line.find('=');
        if (pos == std::string::npos)
            throw std::runtime_error(meta_path + ": malformed line '" + line + "'");
        const std::string key = line.substr(0, pos), value = line.substr(pos + 1);
        if (key == "width")
            meta.width = static_cast<int>(parse_double(value, meta_path + ": width"));
        else if (key == "height")
            meta.height = static_cast<int>(parse_double(value, meta_path + ": height"));
        else if (key == "rate_hz")
            meta.rate_hz = parse_double(value, meta_path + ": rate_hz");
        else if (key == "seed")
            meta.seed = std::stoull(value);
        else if (key == "config_hash")
            meta.config_hash = value;
        else
            throw std::runtime_error(meta_path + ": unknown key '" + key + "'");
    }

    const std::string index_path = (fs::path(dir) / "index.csv").string();
    const std::vector<std::string> lines = split(read_text_file(index_path), '\n');
    if (lines.empty() || trim(lines[0]) != "filename,timestamp_s,x_mm,y_mm,z_mm")
        throw std::runtime_error(index_path + ": missing or wrong header");

    struct Row {
        std::string name;
        double t, x, y, z;
    };
    std::vector<Row> rows;
    double prev_t = -1e300;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty()) continue;
        const std::vector<std::string> cols = split(line, ',');
        if (cols.size() != 5)
            throw std::runtime_error(index_path + ": expected 5 columns at line " +
                                     std::to_string(li + 1));
        Row r;
        r.name = cols[0];
        r.t = parse_double(cols[1], index_path + ": timestamp");
        r.x = parse_double(cols[2], index_path + ": x");
        r.y = parse_double(cols[3], index_path + ": y");
        r.z = parse_double(cols[4], index_path + ": z");
        if (r.t <= prev_t)
            throw std::runtime_error(index_path + ": timestamps not strictly increasing at line " +
                                     std::to_string(li + 1));
        prev_t = r.t;
        rows.push_back(std::move(r));
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        Sample s;
        const std::string img_path = (fs::path(dir) / r.name).string();
        if (!fs::exists(img_path))
            throw std::runtime_error(index_path + ": missing image file " + r.name);
        s.image = read_pgm(img_path);
        if (s.image.width != meta.width || s.image.height != meta.height)
            throw std::runtime_error(img_path + ": dimensions do not match dataset meta");
        s.timestamp = r.t;
        s.pose = {r.x, r.y, r.z};
        require_finite_pose(s.pose, img_path);
        fn(std::move(s), i, rows.size());
    }
    return meta;
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.meta = for_each_sample(dir, [&ds](Sample&& s, std::size_t, std::size_t count) {
        ds.samples.reserve(count);
        ds.samples.push_back(std::move(s));
    });
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split: train_fraction must be in (0, 1)");
    const std::size_t n = ds.samples.size();
    const auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    std::vector<int> order = shuffled_indices(n, seed);
    std::vector<int> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<int> test_idx(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    std::pair<Dataset, Dataset> out;
    out.first.meta = ds.meta;
    out.second.meta = ds.meta;
    for (int i : train_idx) out.first.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
    for (int i : test_idx) out.second.samples.push_back(ds.samples[static_cast<std::size_t>(i)]);
    return out;
}

std::uint64_t dataset_hash(const Dataset& ds) {
    Fnv1a h;
    std::ostringstream head;
    head << ds.meta.width << ',' << ds.meta.height << ',' << format_double(ds.meta.rate_hz) << ','
         << ds.meta.seed << ',' << ds.meta.config_hash << ';';
    h.update(head.str());
    for (const Sample& s : ds.samples) {
        std::ostringstream row;
        row << fixed6(s.timestamp) << ',' << fixed6(s.pose.x) << ',' << fixed6(s.pose.y) << ','
            << fixed6(s.pose.z) << ';';
        h.update(row.str());
        h.update(s.image.data.data(), s.image.data.size());
    }
    return h.digest();
}

}  // namespace proprio
