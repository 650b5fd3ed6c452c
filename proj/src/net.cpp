#include "dcmh/net.hpp"

#include <fstream>

#include "binary_io.hpp"

namespace dcmh {

namespace {
constexpr std::string_view kNetMagic{"DCMHNET\0", 8};
constexpr std::uint32_t kNetVersion = 1;
}  // namespace

std::vector<LayerSpec> mlp_specs(Index in_dim, const std::vector<Index>& hidden, Index out_dim) {
    std::vector<LayerSpec> specs;
    Index prev = in_dim;
    for (Index h : hidden) {
        specs.push_back({prev, h, Activation::ReLU});
        prev = h;
    }
    specs.push_back({prev, out_dim, Activation::Identity});
    return specs;
}

void write_net(std::ostream& out, const FeedForwardNet& net) {
    io::put_bytes(out, kNetMagic.data(), kNetMagic.size());
    io::put_u32(out, kNetVersion);
    io::put_u32(out, static_cast<std::uint32_t>(net.depth()));
    for (const auto& l : net.layers()) {
        io::put_u64(out, static_cast<std::uint64_t>(l.in_dim()));
        io::put_u64(out, static_cast<std::uint64_t>(l.out_dim()));
        io::put_u8(out, static_cast<std::uint8_t>(l.activation));
    }
    for (const auto& l : net.layers()) {
        io::put_bytes(out, l.weights.data(), sizeof(double) * l.weights.size());
        io::put_bytes(out, l.bias.data(), sizeof(double) * l.bias.size());
    }
}

FeedForwardNet read_net(std::istream& in) {
    io::Reader r(in, "network");
    r.magic(kNetMagic);
    if (const auto v = r.u32("version"); v != kNetVersion)
        r.fail("unsupported version " + std::to_string(v));
    const std::uint32_t depth = r.u32("layer count");
    if (depth == 0 || depth > 4096) r.fail("implausible layer count " + std::to_string(depth));

    std::vector<LayerSpec> specs;
    for (std::uint32_t k = 0; k < depth; ++k) {
        LayerSpec s;
        const auto in_dim = r.u64("in_dim");
        const auto out_dim = r.u64("out_dim");
        if (in_dim == 0 || out_dim == 0 || in_dim > (1u << 24) || out_dim > (1u << 24))
            r.fail("implausible layer " + std::to_string(k) + " dimensions");
        s.in_dim = static_cast<Index>(in_dim);
        s.out_dim = static_cast<Index>(out_dim);
        const auto act = r.u8("activation");
        if (act > 1) r.fail("unknown activation code " + std::to_string(act));
        s.activation = static_cast<Activation>(act);
        specs.push_back(s);
    }

    std::vector<DenseLayer<double>> layers;
    for (const auto& s : specs) {
        DenseLayer<double> l;
        l.weights.resize(s.out_dim, s.in_dim);
        l.bias.resize(s.out_dim);
        l.activation = s.activation;
        r.bytes(l.weights.data(), sizeof(double) * l.weights.size(), "weights");
        r.bytes(l.bias.data(), sizeof(double) * l.bias.size(), "bias");
        if (!l.weights.allFinite() || !l.bias.allFinite()) r.fail("non-finite parameter");
        layers.push_back(std::move(l));
    }
    try {
        return FeedForwardNet(std::move(layers));
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
}

void save_net(const std::string& path, const FeedForwardNet& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_net(out, net);
    if (!out.flush()) throw std::runtime_error("failed writing " + path);
}

FeedForwardNet load_net(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    FeedForwardNet net = read_net(in);
    io::Reader(in, path).expect_end();
    return net;
}

}  // namespace dcmh
