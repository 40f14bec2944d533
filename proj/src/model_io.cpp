#include "proprio/model_io.hpp"

#include <sstream>
#include <stdexcept>

#include "proprio/util.hpp"

namespace proprio {

namespace {

constexpr const char* kMagic = "proprio_model_v1";

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        case Axis::z: return "z";
    }
    return "?";
}

void write_svr(std::ostringstream& out, const SvrModel& m, Axis expect) {
    if (m.axis != expect) throw std::invalid_argument("save_model: axis order mismatch");
    const SvrHyperparams& hp = m.hyperparams;
    out << "axis " << axis_name(m.axis) << " epsilon=" << format_double(hp.epsilon)
        << " cost=" << format_double(hp.cost) << " gamma=" << format_double(hp.gamma)
        << " bias=" << format_double(m.bias) << " sv_count=" << m.dual_coefs.size() << '\n';
    for (std::size_t i = 0; i < m.dual_coefs.size(); ++i) {
        out << "sv " << format_double(m.dual_coefs[i]);
        for (double v : m.support_vectors[i]) out << ' ' << format_double(v);
        out << '\n';
    }
}

class LineReader {
  public:
    LineReader(std::string text, std::string path) : path_(std::move(path)) {
        lines_ = split(text, '\n');
    }

    std::string next() {
        while (pos_ < lines_.size()) {
            std::string line = trim(lines_[pos_++]);
            if (!line.empty()) return line;
        }
        throw std::runtime_error(path_ + ": unexpected end of file");
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(path_ + ":" + std::to_string(pos_) + ": " + what);
    }

  private:
    std::string path_;
    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
};

// "key=value" with a required key.
std::string expect_kv(LineReader& r, const std::string& line, const std::string& key) {
    const auto pos = line.find('=');
    if (pos == std::string::npos || line.substr(0, pos) != key)
        r.fail("expected '" + key + "=...', got '" + line + "'");
    return line.substr(pos + 1);
}

std::string expect_field(LineReader& r, const std::vector<std::string>& fields, std::size_t i,
                         const std::string& key) {
    if (i >= fields.size()) r.fail("missing field '" + key + "'");
    const auto pos = fields[i].find('=');
    if (pos == std::string::npos || fields[i].substr(0, pos) != key)
        r.fail("expected field '" + key + "=...', got '" + fields[i] + "'");
    return fields[i].substr(pos + 1);
}

SvrModel read_svr(LineReader& r, Axis expect, std::size_t dim, const std::string& path) {
    const std::vector<std::string> f = split(r.next(), ' ');
    if (f.size() != 7 || f[0] != "axis") r.fail("expected an 'axis' line");
    if (f[1] != axis_name(expect))
        r.fail(std::string("expected axis ") + axis_name(expect) + ", got " + f[1]);
    SvrModel m;
    m.axis = expect;
    m.hyperparams.epsilon = parse_double(expect_field(r, f, 2, "epsilon"), path + ": epsilon");
    m.hyperparams.cost = parse_double(expect_field(r, f, 3, "cost"), path + ": cost");
    m.hyperparams.gamma = parse_double(expect_field(r, f, 4, "gamma"), path + ": gamma");
    m.hyperparams.validate();
    m.bias = parse_double(expect_field(r, f, 5, "bias"), path + ": bias");
    const long count = std::stol(expect_field(r, f, 6, "sv_count"));
    if (count < 0) r.fail("negative sv_count");
    for (long i = 0; i < count; ++i) {
        const std::vector<std::string> sv = split(r.next(), ' ');
        if (sv.size() != dim + 2 || sv[0] != "sv")
            r.fail("support vector line has wrong field count");
        m.dual_coefs.push_back(parse_double(sv[1], path + ": dual coef"));
        std::vector<double> vec(dim);
        for (std::size_t k = 0; k < dim; ++k)
            vec[k] = parse_double(sv[k + 2], path + ": sv value");
        m.support_vectors.push_back(std::move(vec));
    }
    return m;
}

}  // namespace

void save_model(const PoseModel& pm, const std::string& path) {
    if (!(pm.model_x.normalizer.mean == pm.model_y.normalizer.mean &&
          pm.model_x.normalizer.mean == pm.model_z.normalizer.mean &&
          pm.model_x.normalizer.std == pm.model_y.normalizer.std &&
          pm.model_x.normalizer.std == pm.model_z.normalizer.std))
        throw std::invalid_argument("save_model: the three axis models must share a normalizer");
    const std::size_t dim = static_cast<std::size_t>(6 * pm.s * pm.s);
    if (pm.normalizer().mean.size() != dim)
        throw std::invalid_argument("save_model: normalizer length does not match 6*s^2");

    std::ostringstream out;
    out << kMagic << '\n';
    out << "s=" << pm.s << '\n';
    out << "image_width=" << pm.image_width << '\n';
    out << "image_height=" << pm.image_height << '\n';
    out << "block_order=" << pm.block_order << '\n';
    const FilterConfig& c = pm.filter_config;
    out << "filter adaptive_block_size=" << c.adaptive_block_size << " adaptive_c=" << c.adaptive_c
        << " adaptive_max_value=" << c.adaptive_max_value << " binary_offset=" << c.binary_offset
        << " canny_low=" << c.canny_low << " canny_high=" << c.canny_high
        << " canny_kernel=" << c.canny_kernel << " morph_kernel=" << c.morph_kernel << '\n';
    out << "mean";
    for (double v : pm.normalizer().mean) out << ' ' << format_double(v);
    out << "\nstd";
    for (double v : pm.normalizer().std) out << ' ' << format_double(v);
    out << '\n';
    write_svr(out, pm.model_x, Axis::x);
    write_svr(out, pm.model_y, Axis::y);
    write_svr(out, pm.model_z, Axis::z);
    out << "end\n";
    write_text_file(path, out.str());
}

PoseModel load_model(const std::string& path) {
    LineReader r(read_text_file(path), path);

    const std::string magic = r.next();
    if (magic != kMagic)
        throw std::runtime_error(path + ": unsupported model version '" + magic + "'");

    PoseModel pm;
    pm.s = static_cast<int>(std::stol(expect_kv(r, r.next(), "s")));
    if (pm.s < 1) r.fail("invalid grid side");
    pm.image_width = static_cast<int>(std::stol(expect_kv(r, r.next(), "image_width")));
    pm.image_height = static_cast<int>(std::stol(expect_kv(r, r.next(), "image_height")));
    pm.block_order = expect_kv(r, r.next(), "block_order");
    if (pm.block_order != kBlockOrder)
        throw std::runtime_error(path + ": incompatible block order '" + pm.block_order +
                                 "' (this build expects '" + kBlockOrder + "')");

    const std::vector<std::string> f = split(r.next(), ' ');
    if (f.size() != 9 || f[0] != "filter") r.fail("expected the 'filter' line");
    FilterConfig& c = pm.filter_config;
    c.adaptive_block_size = static_cast<int>(std::stol(expect_field(r, f, 1, "adaptive_block_size")));
    c.adaptive_c = static_cast<int>(std::stol(expect_field(r, f, 2, "adaptive_c")));
    c.adaptive_max_value = static_cast<int>(std::stol(expect_field(r, f, 3, "adaptive_max_value")));
    c.binary_offset = static_cast<int>(std::stol(expect_field(r, f, 4, "binary_offset")));
    c.canny_low = static_cast<int>(std::stol(expect_field(r, f, 5, "canny_low")));
    c.canny_high = static_cast<int>(std::stol(expect_field(r, f, 6, "canny_high")));
    c.canny_kernel = static_cast<int>(std::stol(expect_field(r, f, 7, "canny_kernel")));
    c.morph_kernel = static_cast<int>(std::stol(expect_field(r, f, 8, "morph_kernel")));
    c.validate();

    const std::size_t dim = static_cast<std::size_t>(6 * pm.s * pm.s);
    Normalizer norm;
    const std::vector<std::string> mean_f = split(r.next(), ' ');
    if (mean_f.size() != dim + 1 || mean_f[0] != "mean") r.fail("mean array has wrong length");
    const std::vector<std::string> std_f = split(r.next(), ' ');
    if (std_f.size() != dim + 1 || std_f[0] != "std") r.fail("std array has wrong length");
    for (std::size_t i = 0; i < dim; ++i) {
        norm.mean.push_back(parse_double(mean_f[i + 1], path + ": mean"));
        norm.std.push_back(parse_double(std_f[i + 1], path + ": std"));
    }

    pm.model_x = read_svr(r, Axis::x, dim, path);
    pm.model_y = read_svr(r, Axis::y, dim, path);
    pm.model_z = read_svr(r, Axis::z, dim, path);
    pm.model_x.normalizer = norm;
    pm.model_y.normalizer = norm;
    pm.model_z.normalizer = norm;
    if (r.next() != "end") r.fail("missing 'end' terminator");
    return pm;
}

}  // namespace proprio
