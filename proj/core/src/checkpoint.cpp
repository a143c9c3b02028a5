#include "subsetflow/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "subsetflow/errors.hpp"

namespace subsetflow {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& o, uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& o, uint64_t v) { o.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::istream& i) {
    uint32_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 4);
    if (!i) throw DataFormatError("checkpoint truncated");
    return v;
}

uint64_t read_u64(std::istream& i) {
    uint64_t v = 0;
    i.read(reinterpret_cast<char*>(&v), 8);
    if (!i) throw DataFormatError("checkpoint truncated");
    return v;
}

void write_tensor_values(std::ostream& o, const Tensor& t) {
    o.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
}

void read_tensor_values(std::istream& i, Tensor& t) {
    i.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(sizeof(double) * t.size()));
    if (!i) throw DataFormatError("checkpoint truncated in tensor payload");
}

void write_store(std::ostream& o, const ParamStore& store) {
    write_u32(o, static_cast<uint32_t>(store.count()));
    for (int p = 0; p < store.count(); ++p) {
        const std::string& name = store.name(p);
        write_u32(o, static_cast<uint32_t>(name.size()));
        o.write(name.data(), static_cast<std::streamsize>(name.size()));
        const Tensor& t = store.value(p);
        write_u32(o, static_cast<uint32_t>(t.shape().size()));
        for (int e : t.shape()) write_u32(o, static_cast<uint32_t>(e));
        write_tensor_values(o, t);
    }
}

void read_store(std::istream& i, ParamStore& store) {
    uint32_t count = read_u32(i);
    if (count != static_cast<uint32_t>(store.count()))
        throw DataFormatError("checkpoint parameter count does not match the config");
    for (uint32_t p = 0; p < count; ++p) {
        uint32_t nlen = read_u32(i);
        std::string name(nlen, '\0');
        i.read(name.data(), nlen);
        if (!i || name != store.name(static_cast<int>(p)))
            throw DataFormatError("checkpoint parameter name mismatch: " + name);
        uint32_t ndim = read_u32(i);
        std::vector<int> shape(ndim);
        for (uint32_t e = 0; e < ndim; ++e) shape[e] = static_cast<int>(read_u32(i));
        Tensor& t = store.value(static_cast<int>(p));
        if (shape != t.shape())
            throw DataFormatError("checkpoint parameter shape mismatch: " + name);
        read_tensor_values(i, t);
    }
}

}  // namespace

Checkpoint init_checkpoint(const RunConfig& cfg) {
    validate_run_config(cfg);
    Checkpoint ck;
    ck.config = cfg;
    ck.model = std::make_unique<SubsetFlowModel>(cfg.model, cfg.seed);
    if (cfg.objective == Objective::ElboVariational)
        ck.dequantizer = std::make_unique<Dequantizer>(Dequantizer::variational(
            cfg.model.D, cfg.model.K, cfg.dequant_hidden, cfg.seed ^ 0xDE0AA17BULL));
    ck.opt.m.clear();
    ck.opt.v.clear();
    auto add_store = [&](const ParamStore& s) {
        for (int p = 0; p < s.count(); ++p) {
            ck.opt.m.emplace_back(s.value(p).shape());
            ck.opt.v.emplace_back(s.value(p).shape());
        }
    };
    add_store(ck.model->params());
    if (ck.dequantizer) add_store(ck.dequantizer->params());
    ck.opt.step = 0;
    Rng rng(cfg.seed);
    ck.rng_key = rng.key();
    ck.rng_counter = rng.counter();
    return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) throw DataFormatError("cannot write checkpoint file: " + path);
    o.write(kMagic, 4);
    write_u32(o, kVersion);
    std::string cfg = run_config_to_json(ck.config);
    write_u64(o, cfg.size());
    o.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    write_u64(o, ck.steps);
    write_u32(o, static_cast<uint32_t>(ck.epochs_done));
    write_u64(o, ck.rng_key);
    write_u64(o, ck.rng_counter);
    o.put(ck.dequantizer ? 1 : 0);
    write_store(o, ck.model->params());
    if (ck.dequantizer) write_store(o, ck.dequantizer->params());
    write_u64(o, static_cast<uint64_t>(ck.opt.step));
    write_u32(o, static_cast<uint32_t>(ck.opt.m.size()));
    for (const Tensor& t : ck.opt.m) write_tensor_values(o, t);
    for (const Tensor& t : ck.opt.v) write_tensor_values(o, t);
    if (!o) throw DataFormatError("write failure: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) throw DataFormatError("cannot open checkpoint file: " + path);
    char magic[4];
    i.read(magic, 4);
    if (!i || std::memcmp(magic, kMagic, 4) != 0)
        throw DataFormatError("bad checkpoint magic (expected SFCK): " + path);
    if (read_u32(i) != kVersion) throw DataFormatError("unsupported checkpoint version");
    uint64_t cfg_len = read_u64(i);
    std::string cfg_text(cfg_len, '\0');
    i.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
    if (!i) throw DataFormatError("checkpoint truncated in config");
    RunConfig cfg = parse_run_config(cfg_text);
    validate_run_config(cfg);

    Checkpoint ck = init_checkpoint(cfg);
    ck.steps = read_u64(i);
    ck.epochs_done = static_cast<int>(read_u32(i));
    ck.rng_key = read_u64(i);
    ck.rng_counter = read_u64(i);
    int has_deq = i.get();
    if (has_deq < 0) throw DataFormatError("checkpoint truncated");
    if ((has_deq != 0) != (ck.dequantizer != nullptr))
        throw DataFormatError("checkpoint dequantizer flag does not match the config");
    read_store(i, ck.model->params());
    if (ck.dequantizer) read_store(i, ck.dequantizer->params());
    ck.opt.step = static_cast<long>(read_u64(i));
    uint32_t nmom = read_u32(i);
    if (nmom != ck.opt.m.size())
        throw DataFormatError("checkpoint optimizer moment count mismatch");
    for (Tensor& t : ck.opt.m) read_tensor_values(i, t);
    for (Tensor& t : ck.opt.v) read_tensor_values(i, t);
    i.peek();
    if (!i.eof()) throw DataFormatError("trailing bytes after checkpoint payload");
    return ck;
}

}  // namespace subsetflow
