#include "geff/model.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "json.hpp"

namespace geff {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint code assumes a little-endian host");

GeffModel GeffModel::create(std::uint64_t seed, int latent_dim, int teacher_dim) {
    Rng rng(seed);
    GeffModel model;
    model.encoder = EncoderNet::create(latent_dim, teacher_dim, rng);
    model.decoders = FieldDecoders::create(latent_dim, teacher_dim, rng);
    return model;
}

std::vector<Tensor*> GeffModel::params() {
    std::vector<Tensor*> out;
    for (Tensor* p : encoder.net.params()) out.push_back(p);
    for (Tensor* p : decoders.params()) out.push_back(p);
    return out;
}

std::vector<const Tensor*> GeffModel::params() const {
    std::vector<const Tensor*> out;
    for (const Tensor* p : encoder.net.params()) out.push_back(p);
    for (const Tensor* p : decoders.params()) out.push_back(p);
    return out;
}

std::size_t GeffModel::param_count() const {
    std::size_t n = 0;
    for (const Tensor* p : params()) n += p->size();
    return n;
}

namespace {

json mlp_header(const Mlp& net) {
    return json{{"sizes", net.sizes}, {"output", activation_name(net.output)}};
}

Mlp mlp_from_header(const json& j) {
    Rng dummy(0);
    Mlp net = Mlp::create(j.at("sizes").get<std::vector<int>>(),
                          activation_from_name(j.at("output").get<std::string>()), dummy);
    return net;
}

}  // namespace

void GeffModel::save(const std::string& path) const {
    json header;
    header["version"] = 1;
    header["latent_dim"] = encoder.latent_dim;
    header["teacher_dim"] = encoder.teacher_dim;
    header["encoder"] = mlp_header(encoder.net);
    header["neighbor_net"] = mlp_header(decoders.neighbor_net);
    header["sdf_head"] = mlp_header(decoders.sdf_head);
    header["feature_head"] = mlp_header(decoders.feature_head);
    header["color_head"] = mlp_header(decoders.color_head);
    header["k"] = decoders.k;
    header["posenc_freqs"] = decoders.posenc_freqs;
    header["support_radius"] = decoders.support_radius;
    header["truncation"] = decoders.truncation;
    header["param_count"] = param_count();

    std::vector<double> values;
    values.reserve(param_count());
    append_params(params(), values);

    const std::string head = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    const std::uint32_t len = static_cast<std::uint32_t>(head.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

GeffModel GeffModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len == 0 || len > (1u << 20)) throw ParseError("checkpoint header corrupt");
    std::string head(len, '\0');
    in.read(head.data(), len);
    if (!in) throw ParseError("checkpoint header truncated");
    json header = json::parse(head, nullptr, false);
    if (header.is_discarded()) throw ParseError("checkpoint header is not valid JSON");
    if (!header.contains("version")) throw ParseError("checkpoint header missing version");
    if (header.at("version").get<int>() != 1)
        throw ParseError("unsupported checkpoint version");

    GeffModel model;
    model.encoder.latent_dim = header.at("latent_dim").get<int>();
    model.encoder.teacher_dim = header.at("teacher_dim").get<int>();
    model.encoder.net = mlp_from_header(header.at("encoder"));
    model.decoders.latent_dim = model.encoder.latent_dim;
    model.decoders.teacher_dim = model.encoder.teacher_dim;
    model.decoders.neighbor_net = mlp_from_header(header.at("neighbor_net"));
    model.decoders.sdf_head = mlp_from_header(header.at("sdf_head"));
    model.decoders.feature_head = mlp_from_header(header.at("feature_head"));
    model.decoders.color_head = mlp_from_header(header.at("color_head"));
    model.decoders.k = header.at("k").get<int>();
    model.decoders.posenc_freqs = header.at("posenc_freqs").get<int>();
    model.decoders.support_radius = header.at("support_radius").get<double>();
    model.decoders.truncation = header.at("truncation").get<double>();

    const std::size_t count = header.at("param_count").get<std::size_t>();
    if (count != model.param_count()) throw ParseError("checkpoint parameter count mismatch");
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ParseError("checkpoint payload truncated");
    read_params(model.params(), values, 0);
    return model;
}

}  // namespace geff
