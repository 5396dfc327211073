#include "network/model.hpp"

#include <cstring>
#include <sstream>

#include "common/binary_io.hpp"

namespace cseg::net {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'E', 'G'};
constexpr std::uint32_t kVersion = 1;

// Every parameter array in its on-disk order (trainables plus BN running
// statistics); must stay stable across releases of the same format version.
std::vector<std::vector<float>*> all_arrays(NetworkParams<float>& p) {
    std::vector<std::vector<float>*> out;
    auto bn = [&out](BnParams<float>& b) {
        out.push_back(&b.gamma);
        out.push_back(&b.beta);
        out.push_back(&b.run_mean);
        out.push_back(&b.run_var);
    };
    out.push_back(&p.conv1.w);
    out.push_back(&p.conv1.b);
    bn(p.bn1);
    out.push_back(&p.conv2.w);
    out.push_back(&p.conv2.b);
    bn(p.bn2);
    out.push_back(&p.conv3.w);
    out.push_back(&p.conv3.b);
    bn(p.bn3);
    out.push_back(&p.dense1.w);
    out.push_back(&p.dense1.b);
    bn(p.bn4);
    out.push_back(&p.dense2.w);
    out.push_back(&p.dense2.b);
    return out;
}

NetworkParams<float> empty_params(const NetworkShape& shape) {
    shape.validate();
    NetworkParams<float> p;
    p.shape = shape;
    p.conv1 = ConvParams<float>::make(shape.in_channels, shape.conv1_out, shape.kernel);
    p.conv2 = ConvParams<float>::make(shape.conv1_out, shape.conv2_out, shape.kernel);
    p.conv3 = ConvParams<float>::make(shape.conv2_out, shape.conv3_out, shape.kernel);
    p.bn1 = BnParams<float>::make(shape.conv1_out);
    p.bn2 = BnParams<float>::make(shape.conv2_out);
    p.bn3 = BnParams<float>::make(shape.conv3_out);
    p.bn4 = BnParams<float>::make(shape.hidden);
    p.dense1 = DenseParams<float>::make(shape.flatten_dim(), shape.hidden);
    p.dense2 = DenseParams<float>::make(shape.hidden, shape.output_dim());
    p.input_mean.assign(shape.in_channels, 0.0f);
    return p;
}

void write_array(std::ostream& os, const std::vector<float>& a) {
    bin::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.size()));
    bin::write_le_array(os, a.data(), a.size());
}

void read_array_into(std::istream& is, std::vector<float>& a, const char* what) {
    const auto n = bin::read_le<std::uint32_t>(is);
    if (n != a.size())
        throw_format(std::string(what) + " has length " + std::to_string(n) +
                     "; the declared shape implies " + std::to_string(a.size()));
    bin::read_le_array(is, a.data(), a.size());
}

}  // namespace

void NetworkShape::validate() const {
    if (input_side <= 0 || in_channels <= 0 || conv1_out <= 0 || conv2_out <= 0 ||
        conv3_out <= 0 || hidden <= 0 || kernel <= 0)
        throw_invalid("network shape fields must be positive");
    if (input_side % 2 == 0)
        throw_invalid("network shape: input side must be odd (patches are pixel-centered), got " +
                      std::to_string(input_side));
    if (kernel % 2 == 0)
        throw_invalid("network shape: kernel must be odd, got " + std::to_string(kernel));
    if (after_conv1() <= 0 || after_pool1() <= 0 || after_conv2() <= 0 || after_pool2() <= 0 ||
        after_conv3() <= 0)
        throw_invalid("network shape collapses: side " + std::to_string(input_side) +
                      " with kernel " + std::to_string(kernel) +
                      " leaves no spatial extent after the conv/pool chain");
}

void save_model(const std::string& path, const NetworkParams<float>& params,
                const RmsProp<float>* optimizer) {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    bin::write_le<std::uint32_t>(out, kVersion);
    const NetworkShape& sh = params.shape;
    for (int field : {sh.input_side, sh.in_channels, sh.conv1_out, sh.conv2_out, sh.conv3_out,
                      sh.hidden, sh.kernel})
        bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(field));
    write_array(out, params.input_mean);
    for (const std::vector<float>* a : all_arrays(const_cast<NetworkParams<float>&>(params)))
        write_array(out, *a);

    bin::write_le<std::uint8_t>(out, optimizer ? 1 : 0);
    if (optimizer) {
        bin::write_le<float>(out, optimizer->lr);
        bin::write_le<float>(out, optimizer->decay);
        bin::write_le<float>(out, optimizer->eps);
        bin::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(optimizer->acc.size()));
        for (const auto& a : optimizer->acc) write_array(out, a);
    }
    bin::write_checksummed(path, std::move(out).str());
}

LoadedModel load_model(const std::string& path) {
    std::istringstream in(bin::read_checksummed(path), std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw_format("'" + path + "' is not a model file");
    const auto version = bin::read_le<std::uint32_t>(in);
    if (version != kVersion)
        throw_format("'" + path + "' declares format version " + std::to_string(version) +
                     "; this build reads version " + std::to_string(kVersion));

    NetworkShape sh;
    sh.input_side = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.in_channels = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.conv1_out = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.conv2_out = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.conv3_out = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.hidden = static_cast<int>(bin::read_le<std::uint32_t>(in));
    sh.kernel = static_cast<int>(bin::read_le<std::uint32_t>(in));

    LoadedModel loaded;
    loaded.params = empty_params(sh);
    read_array_into(in, loaded.params.input_mean, "input mean");
    int index = 0;
    for (std::vector<float>* a : all_arrays(loaded.params))
        read_array_into(in, *a, ("parameter array " + std::to_string(index++)).c_str());

    const auto has_optimizer = bin::read_le<std::uint8_t>(in);
    if (has_optimizer) {
        RmsProp<float> opt;
        opt.lr = bin::read_le<float>(in);
        opt.decay = bin::read_le<float>(in);
        opt.eps = bin::read_le<float>(in);
        const auto count = bin::read_le<std::uint32_t>(in);
        const auto trainables = trainable_arrays(loaded.params);
        if (count != trainables.size())
            throw_format("'" + path + "': optimizer table has " + std::to_string(count) +
                         " arrays; the model has " + std::to_string(trainables.size()));
        opt.acc.resize(count);
        for (std::uint32_t a = 0; a < count; ++a) {
            opt.acc[a].assign(trainables[a]->size(), 0.0f);
            read_array_into(in, opt.acc[a], "optimizer array");
        }
        loaded.optimizer = std::move(opt);
    }
    if (in.peek() != std::istringstream::traits_type::eof())
        throw_format("'" + path + "': trailing bytes after the model payload");
    return loaded;
}

}  // namespace cseg::net
