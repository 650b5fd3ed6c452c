#include "dcmh/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "dcmh/retrieval.hpp"

namespace dcmh {

namespace {
constexpr std::string_view kCkptMagic = "DCMHCKPT";
constexpr std::uint32_t kCkptVersion = 1;
}  // namespace

Checkpoint make_checkpoint(const TrainState& state, std::uint64_t seed, const SplitSpec& split) {
    return {state.net_x, state.net_y, state.B, state.hyper, seed, split};
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    io::put_bytes(out, kCkptMagic.data(), kCkptMagic.size());
    io::put_u32(out, kCkptVersion);
    io::put_f64(out, ckpt.hyper.gamma);
    io::put_f64(out, ckpt.hyper.eta);
    io::put_u64(out, static_cast<std::uint64_t>(ckpt.hyper.code_length));
    io::put_u64(out, static_cast<std::uint64_t>(ckpt.hyper.batch_size));
    io::put_u64(out, static_cast<std::uint64_t>(ckpt.hyper.outer_iters));
    io::put_f64(out, ckpt.hyper.lr);
    io::put_u8(out, static_cast<std::uint8_t>(ckpt.hyper.grad_scale));
    io::put_u64(out, ckpt.seed);
    io::put_u64(out, static_cast<std::uint64_t>(ckpt.split.query_count));
    io::put_u64(out, static_cast<std::uint64_t>(ckpt.split.train_count));
    io::put_u64(out, ckpt.split.seed);
    write_net(out, ckpt.net_x);
    write_net(out, ckpt.net_y);
    write_codes(out, ckpt.B);
}

Checkpoint read_checkpoint(std::istream& in) {
    io::Reader r(in, "checkpoint");
    r.magic(kCkptMagic);
    if (const auto v = r.u32("version"); v != kCkptVersion)
        r.fail("unsupported version " + std::to_string(v));
    Checkpoint ck;
    ck.hyper.gamma = r.f64("gamma");
    ck.hyper.eta = r.f64("eta");
    ck.hyper.code_length = static_cast<Index>(r.u64("code_length"));
    ck.hyper.batch_size = static_cast<Index>(r.u64("batch_size"));
    ck.hyper.outer_iters = static_cast<Index>(r.u64("outer_iters"));
    ck.hyper.lr = r.f64("lr");
    const auto scale = r.u8("grad_scale");
    if (scale > 1) r.fail("unknown gradient scale code " + std::to_string(scale));
    ck.hyper.grad_scale = static_cast<GradientScale>(scale);
    ck.seed = r.u64("seed");
    ck.split.query_count = static_cast<Index>(r.u64("query_count"));
    ck.split.train_count = static_cast<Index>(r.u64("train_count"));
    ck.split.seed = r.u64("split_seed");
    try {
        ck.hyper.validate();
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    }
    // The nested containers report offsets relative to their own start.
    ck.net_x = read_net(in);
    ck.net_y = read_net(in);
    // read_codes insists on end-of-stream after the codes, which also
    // rejects trailing garbage here.
    ck.B = read_codes(in);
    if (ck.net_x.output_dim() != ck.hyper.code_length ||
        ck.net_y.output_dim() != ck.hyper.code_length || ck.B.rows() != ck.hyper.code_length)
        throw ParseError("checkpoint: component code lengths disagree", 0, 0);
    return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_checkpoint(out, ckpt);
    if (!out.flush()) throw std::runtime_error("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_checkpoint(in);
}

}  // namespace dcmh
