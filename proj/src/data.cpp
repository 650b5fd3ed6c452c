#include "dcmh/data.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "dcmh/rng.hpp"

namespace dcmh {

void MultiModalDataset::validate() const {
    const Index n = image.cols();
    if (text.cols() != n)
        throw std::invalid_argument("dataset: image has " + std::to_string(n) +
                                    " points, text has " + std::to_string(text.cols()));
    if (static_cast<Index>(labels.size()) != n)
        throw std::invalid_argument("dataset: " + std::to_string(labels.size()) +
                                    " label sets for " + std::to_string(n) + " points");
    if (text.size() > 0 && text.minCoeff() < 0.0)
        throw std::invalid_argument("dataset: text features must be nonnegative");
    if (!image.allFinite() || !text.allFinite())
        throw std::invalid_argument("dataset: features must be finite");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& ls = labels[i];
        if (!std::is_sorted(ls.begin(), ls.end()) ||
            std::adjacent_find(ls.begin(), ls.end()) != ls.end())
            throw std::invalid_argument("dataset: labels of point " + std::to_string(i) +
                                        " are not sorted and unique");
        for (auto l : ls)
            if (l >= label_names.size())
                throw std::invalid_argument("dataset: label id " + std::to_string(l) +
                                            " outside vocabulary");
    }
}

SimilarityMatrix build_similarity(std::span<const LabelSet> labels_a,
                                  std::span<const LabelSet> labels_b) {
    const auto na = static_cast<Index>(labels_a.size());
    const auto nb = static_cast<Index>(labels_b.size());
    SimilarityMatrix S = SimilarityMatrix::Zero(na, nb);
    for (Index i = 0; i < na; ++i) {
        const auto& a = labels_a[static_cast<std::size_t>(i)];
        for (Index j = 0; j < nb; ++j) {
            const auto& b = labels_b[static_cast<std::size_t>(j)];
            // Both sorted: linear merge.
            auto ia = a.begin();
            auto ib = b.begin();
            while (ia != a.end() && ib != b.end()) {
                if (*ia == *ib) {
                    S(i, j) = 1;
                    break;
                }
                if (*ia < *ib)
                    ++ia;
                else
                    ++ib;
            }
        }
    }
    return S;
}

Split split(Index n, const SplitSpec& spec) {
    if (spec.query_count < 0 || spec.train_count < 0)
        throw std::invalid_argument("split: counts must be nonnegative");
    if (spec.query_count + 1 > n)
        throw std::invalid_argument("split: query_count " + std::to_string(spec.query_count) +
                                    " leaves no database points out of " + std::to_string(n));
    if (spec.train_count > n - spec.query_count)
        throw std::invalid_argument("split: train_count " + std::to_string(spec.train_count) +
                                    " exceeds database size " +
                                    std::to_string(n - spec.query_count));

    Rng rng(spec.seed);
    const auto perm = rng.permutation(static_cast<std::size_t>(n));
    Split s;
    s.query.assign(perm.begin(), perm.begin() + spec.query_count);
    s.database.assign(perm.begin() + spec.query_count, perm.end());
    std::sort(s.query.begin(), s.query.end());
    std::sort(s.database.begin(), s.database.end());

    auto pick = rng.permutation(s.database.size());
    pick.resize(static_cast<std::size_t>(spec.train_count));
    for (auto p : pick) s.train.push_back(s.database[p]);
    std::sort(s.train.begin(), s.train.end());
    return s;
}

MultiModalDataset subset(const MultiModalDataset& ds, std::span<const Index> points) {
    const std::vector<Index> idx(points.begin(), points.end());
    for (Index p : idx)
        if (p < 0 || p >= ds.size())
            throw std::invalid_argument("subset: point " + std::to_string(p) + " out of range");
    MultiModalDataset out;
    out.image = ds.image(Eigen::all, idx);
    out.text = ds.text(Eigen::all, idx);
    for (Index p : idx) out.labels.push_back(ds.labels[static_cast<std::size_t>(p)]);
    out.label_names = ds.label_names;
    return out;
}

namespace {

void check_synth(const SynthSpec& s) {
    if (s.classes < 2) throw std::invalid_argument("synth: classes must be >= 2");
    if (s.per_class < 1) throw std::invalid_argument("synth: per_class must be >= 1");
    if (s.d_x < 1 || s.d_y < 1) throw std::invalid_argument("synth: dimensions must be >= 1");
    if (s.words_per_doc < 1) throw std::invalid_argument("synth: words_per_doc must be >= 1");
    if (!(s.noise >= 0.0) || !std::isfinite(s.noise))
        throw std::invalid_argument("synth: noise must be finite and >= 0");
}

DenseMatrix draw_centroids(const SynthSpec& s, Rng& rng) {
    DenseMatrix centroids(s.d_x, s.classes);
    for (Index c = 0; c < s.classes; ++c) {
        DenseVector v(s.d_x);
        for (Index k = 0; k < s.d_x; ++k) v(k) = rng.normal();
        centroids.col(c) = v.normalized();
    }
    return centroids;
}

}  // namespace

DenseMatrix synth_centroids(const SynthSpec& spec) {
    check_synth(spec);
    Rng rng(spec.seed);
    return draw_centroids(spec, rng);
}

MultiModalDataset synth_dataset(const SynthSpec& spec) {
    check_synth(spec);
    Rng rng(spec.seed);
    const DenseMatrix centroids = draw_centroids(spec, rng);

    // Cumulative word distribution per class; squared Exp(1) weights make the
    // topics peaked.
    std::vector<std::vector<double>> cdf(static_cast<std::size_t>(spec.classes));
    for (auto& c : cdf) {
        c.resize(static_cast<std::size_t>(spec.d_y));
        double acc = 0.0;
        for (auto& w : c) {
            const double e = -std::log1p(-rng.uniform());
            acc += e * e;
            w = acc;
        }
        for (auto& w : c) w /= acc;
        c.back() = 1.0;
    }

    const Index n = spec.classes * spec.per_class;
    MultiModalDataset ds;
    ds.image.resize(spec.d_x, n);
    ds.text = DenseMatrix::Zero(spec.d_y, n);
    for (Index c = 0; c < spec.classes; ++c) ds.label_names.push_back("class" + std::to_string(c));

    for (Index c = 0; c < spec.classes; ++c) {
        const auto& dist = cdf[static_cast<std::size_t>(c)];
        for (Index k = 0; k < spec.per_class; ++k) {
            const Index i = c * spec.per_class + k;
            for (Index r = 0; r < spec.d_x; ++r)
                ds.image(r, i) = centroids(r, c) + spec.noise * rng.normal();
            for (Index w = 0; w < spec.words_per_doc; ++w) {
                const double u = rng.uniform();
                const auto word = std::upper_bound(dist.begin(), dist.end(), u) - dist.begin();
                ds.text(std::min<Index>(word, spec.d_y - 1), i) += 1.0;
            }
            ds.labels.push_back({static_cast<std::uint32_t>(c)});
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// File format

namespace {

constexpr std::string_view kDataMagic = "DCMH-DATASET";
constexpr std::uint64_t kDataVersion = 1;
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 31;

/// Line-oriented reader for the text header.
class HeaderReader {
public:
    explicit HeaderReader(std::istream& in) : in_(in) {}

    std::string line(const char* expecting) {
        std::string s;
        const std::int64_t start = offset_;
        if (!std::getline(in_, s)) fail_at(std::string("unexpected end of file, expected ") +
                                               expecting, line_ + 1, start);
        if (in_.eof()) fail_at(std::string("unterminated header line, expected ") + expecting,
                               line_ + 1, start);
        ++line_;
        line_start_ = start;
        offset_ += static_cast<std::int64_t>(s.size()) + 1;
        return s;
    }

    std::uint64_t field(const std::string& key) {
        const std::string s = line(key.c_str());
        std::istringstream ss(s);
        std::string k;
        std::uint64_t v = 0;
        std::string rest;
        if (!(ss >> k) || k != key) fail("expected field '" + key + "', got '" + s + "'");
        if (!(ss >> v) || (ss >> rest)) fail("field '" + key + "' needs one unsigned integer");
        if (v > kMaxDim) fail("field '" + key + "' value " + std::to_string(v) + " too large");
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        fail_at(msg, line_, line_start_);
    }

    std::int64_t offset() const { return offset_; }

private:
    [[noreturn]] static void fail_at(const std::string& msg, std::int64_t line,
                                     std::int64_t offset) {
        throw ParseError("dataset header: " + msg, line, offset);
    }

    std::istream& in_;
    std::int64_t line_ = 0;
    std::int64_t line_start_ = 0;
    std::int64_t offset_ = 0;
};

}  // namespace

void write_dataset(std::ostream& out, const MultiModalDataset& ds) {
    ds.validate();
    for (const auto& name : ds.label_names)
        if (name.empty() || name.find('\n') != std::string::npos)
            throw std::invalid_argument("dataset: label names must be non-empty single lines");
    const Index n = ds.size();
    out << kDataMagic << ' ' << kDataVersion << '\n'
        << "n " << n << '\n'
        << "d_x " << ds.image.rows() << '\n'
        << "d_y " << ds.text.rows() << '\n'
        << "labels " << ds.label_names.size() << '\n';
    for (const auto& name : ds.label_names) out << name << '\n';
    out << "data\n";
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < ds.image.rows(); ++r) io::put_f64(out, ds.image(r, i));
    for (Index i = 0; i < n; ++i)
        for (Index r = 0; r < ds.text.rows(); ++r) io::put_f64(out, ds.text(r, i));
    for (const auto& ls : ds.labels) {
        io::put_u32(out, static_cast<std::uint32_t>(ls.size()));
        for (auto l : ls) io::put_u32(out, l);
    }
}

MultiModalDataset read_dataset(std::istream& in) {
    HeaderReader h(in);
    {
        const std::string first = h.line("magic");
        const std::string expected = std::string(kDataMagic) + ' ' + std::to_string(kDataVersion);
        if (first.rfind(std::string(kDataMagic), 0) != 0) h.fail("bad magic");
        if (first != expected) h.fail("unsupported version line '" + first + "'");
    }
    const auto n = h.field("n");
    const auto d_x = h.field("d_x");
    const auto d_y = h.field("d_y");
    const auto vocab = h.field("labels");

    MultiModalDataset ds;
    for (std::uint64_t k = 0; k < vocab; ++k) {
        std::string name = h.line("label name");
        if (name.empty()) h.fail("empty label name");
        ds.label_names.push_back(std::move(name));
    }
    if (h.line("'data'") != "data") h.fail("expected 'data' line");

    const std::string sizes = " (header declares n=" + std::to_string(n) +
                              ", d_x=" + std::to_string(d_x) + ", d_y=" + std::to_string(d_y) +
                              ")";
    io::Reader r(in, "dataset body", h.offset());
    ds.image.resize(static_cast<Index>(d_x), static_cast<Index>(n));
    ds.text.resize(static_cast<Index>(d_y), static_cast<Index>(n));
    const auto read_block = [&](DenseMatrix& m, const char* what) {
        DenseVector column(m.rows());
        for (Index i = 0; i < m.cols(); ++i) {
            r.bytes(column.data(), sizeof(double) * static_cast<std::size_t>(column.size()),
                    std::string(what) + " of point " + std::to_string(i) + sizes);
            m.col(i) = column;
        }
    };
    read_block(ds.image, "image features");
    read_block(ds.text, "text features");
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto count = r.u32("label count of point " + std::to_string(i) + sizes);
        if (count > vocab)
            r.fail("label count " + std::to_string(count) + " of point " + std::to_string(i) +
                   " exceeds vocabulary size" + sizes);
        LabelSet ls(count);
        for (auto& l : ls) {
            l = r.u32("label id of point " + std::to_string(i));
            if (l >= vocab)
                r.fail("label id " + std::to_string(l) + " of point " + std::to_string(i) +
                       " outside vocabulary" + sizes);
        }
        ds.labels.push_back(std::move(ls));
    }
    if (in.peek() != std::char_traits<char>::eof())
        r.fail("trailing bytes after the last point; check header field 'n'" + sizes);
    try {
        ds.validate();
    } catch (const std::invalid_argument& e) {
        r.fail(e.what() + sizes);
    }
    return ds;
}

void save_dataset(const MultiModalDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_dataset(out, ds);
    if (!out.flush()) throw std::runtime_error("failed writing " + path);
}

MultiModalDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_dataset(in);
}

}  // namespace dcmh
