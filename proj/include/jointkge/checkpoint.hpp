#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "jointkge/model.hpp"
#include "jointkge/params.hpp"

// Versioned binary checkpoint: header (format version, dimension, encoder
// kind, vocab sizes), then each named slot as `name, shape, row-major 64-bit
// floats`, then the id<->string vocab maps. Round-trips bit-exactly.

namespace jointkge {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[8] = {'J', 'K', 'G', 'E', 'C', 'K', 'P', 'T'};

namespace io {

inline void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline uint32_t read_u32(std::istream& in) {
    uint32_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline uint64_t read_u64(std::istream& in) {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline double read_f64(std::istream& in) {
    double v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline std::string read_string(std::istream& in) {
    const uint64_t n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

inline void write_vocab(std::ostream& out, const Vocab& v) {
    write_u64(out, v.size());
    for (const auto& s : v.strings()) write_string(out, s);
}
inline Vocab read_vocab(std::istream& in) {
    Vocab v;
    const uint64_t n = read_u64(in);
    for (uint64_t i = 0; i < n; ++i) v.add_or_get(read_string(in));
    v.freeze();
    return v;
}

}  // namespace io

struct Checkpoint {
    ModelConfig config;
    ParameterStore store;
    Vocab entities, relations, words;
};

inline void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                            const ParameterStore& store, const Vocab& entities,
                            const Vocab& relations, const Vocab& words) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        io::write_u32(out, kCheckpointVersion);
        io::write_u64(out, cfg.d);
        io::write_u32(out, static_cast<uint32_t>(cfg.encoder));
        io::write_u32(out, static_cast<uint32_t>(cfg.dissim));
        io::write_u32(out, cfg.use_text ? 1 : 0);
        io::write_f64(out, cfg.margin);
        io::write_f64(out, cfg.l2_weight);
        io::write_f64(out, cfg.lr_structure);
        io::write_f64(out, cfg.lr_text);
        io::write_u64(out, entities.size());
        io::write_u64(out, relations.size());
        io::write_u64(out, words.size());

        io::write_u64(out, store.slots().size());
        for (const auto& [name, s] : store.slots()) {
            io::write_string(out, name);
            io::write_u32(out, static_cast<uint32_t>(s.group));
            io::write_u64(out, s.rows);
            io::write_u64(out, s.cols);
            out.write(reinterpret_cast<const char*>(s.value.data()),
                      static_cast<std::streamsize>(s.value.size() * sizeof(double)));
        }
        io::write_vocab(out, entities);
        io::write_vocab(out, relations);
        io::write_vocab(out, words);
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
        throw std::runtime_error("not a checkpoint file: " + path);
    const uint32_t version = io::read_u32(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.config.d = io::read_u64(in);
    ck.config.encoder = static_cast<EncoderKind>(io::read_u32(in));
    ck.config.dissim = static_cast<Dissim>(io::read_u32(in));
    ck.config.use_text = io::read_u32(in) != 0;
    ck.config.margin = io::read_f64(in);
    ck.config.l2_weight = io::read_f64(in);
    ck.config.lr_structure = io::read_f64(in);
    ck.config.lr_text = io::read_f64(in);
    const uint64_t ne = io::read_u64(in);
    const uint64_t nr = io::read_u64(in);
    const uint64_t nw = io::read_u64(in);

    const uint64_t nslots = io::read_u64(in);
    for (uint64_t i = 0; i < nslots; ++i) {
        const std::string name = io::read_string(in);
        const auto group = static_cast<LrGroup>(io::read_u32(in));
        const uint64_t rows = io::read_u64(in);
        const uint64_t cols = io::read_u64(in);
        auto& slot = ck.store.add(name, rows, cols, group);
        in.read(reinterpret_cast<char*>(slot.value.data()),
                static_cast<std::streamsize>(slot.value.size() * sizeof(double)));
    }
    ck.entities = io::read_vocab(in);
    ck.relations = io::read_vocab(in);
    ck.words = io::read_vocab(in);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    if (ck.entities.size() != ne || ck.relations.size() != nr || ck.words.size() != nw)
        throw std::runtime_error("checkpoint vocab sizes disagree with header: " + path);
    return ck;
}

// Serialized prepared dataset (vocabs, splits, descriptions, stats).
constexpr uint32_t kBundleVersion = 1;
constexpr char kBundleMagic[8] = {'J', 'K', 'G', 'E', 'B', 'N', 'D', 'L'};

inline void save_bundle(const std::string& path, const Dataset& ds) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write bundle: " + tmp);
        out.write(kBundleMagic, sizeof(kBundleMagic));
        io::write_u32(out, kBundleVersion);
        io::write_vocab(out, ds.entities);
        io::write_vocab(out, ds.relations);
        io::write_vocab(out, ds.words);
        for (const auto* split : {&ds.triples.train, &ds.triples.valid, &ds.triples.test}) {
            io::write_u64(out, split->size());
            for (const auto& t : *split) {
                io::write_u32(out, static_cast<uint32_t>(t.head));
                io::write_u32(out, static_cast<uint32_t>(t.relation));
                io::write_u32(out, static_cast<uint32_t>(t.tail));
            }
        }
        io::write_u64(out, ds.descriptions.tokens.size());
        for (size_t e = 0; e < ds.descriptions.tokens.size(); ++e) {
            io::write_u32(out, ds.descriptions.covered[e] ? 1 : 0);
            io::write_u64(out, ds.descriptions.tokens[e].size());
            for (WordId w : ds.descriptions.tokens[e]) io::write_u32(out, static_cast<uint32_t>(w));
        }
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline Dataset load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bundle: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kBundleMagic, 8))
        throw std::runtime_error("not a dataset bundle: " + path);
    const uint32_t version = io::read_u32(in);
    if (version != kBundleVersion)
        throw std::runtime_error("unsupported bundle version " + std::to_string(version));

    Dataset ds;
    ds.entities = io::read_vocab(in);
    ds.relations = io::read_vocab(in);
    ds.words = io::read_vocab(in);
    for (auto* split : {&ds.triples.train, &ds.triples.valid, &ds.triples.test}) {
        const uint64_t n = io::read_u64(in);
        split->reserve(n);
        for (uint64_t i = 0; i < n; ++i) {
            Triple t;
            t.head = static_cast<EntityId>(io::read_u32(in));
            t.relation = static_cast<RelationId>(io::read_u32(in));
            t.tail = static_cast<EntityId>(io::read_u32(in));
            split->push_back(t);
        }
    }
    const uint64_t ne = io::read_u64(in);
    ds.descriptions.tokens.resize(ne);
    ds.descriptions.covered.resize(ne);
    for (uint64_t e = 0; e < ne; ++e) {
        ds.descriptions.covered[e] = io::read_u32(in) != 0;
        const uint64_t len = io::read_u64(in);
        ds.descriptions.tokens[e].resize(len);
        for (uint64_t k = 0; k < len; ++k)
            ds.descriptions.tokens[e][k] = static_cast<WordId>(io::read_u32(in));
    }
    if (!in) throw std::runtime_error("truncated bundle: " + path);
    ds.triples.build_filter_index();
    ds.stats = compute_bernoulli_stats(ds.triples.train, ds.num_relations());
    ds.categories = categorize_relations(ds.stats);
    return ds;
}

}  // namespace jointkge
