#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace jointkge {

using EntityId = int32_t;
using RelationId = int32_t;
using WordId = int32_t;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;
    bool operator==(const Triple&) const = default;
};

// String <-> dense id map, ids assigned in first-seen order.
class Vocab {
public:
    int32_t add_or_get(const std::string& s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        if (frozen_) throw std::runtime_error("unknown token in frozen vocab: " + s);
        const int32_t id = static_cast<int32_t>(strings_.size());
        strings_.push_back(s);
        index_.emplace(s, id);
        return id;
    }
    int32_t get(const std::string& s) const {
        auto it = index_.find(s);
        if (it == index_.end()) throw std::runtime_error("unknown token: " + s);
        return it->second;
    }
    bool contains(const std::string& s) const { return index_.count(s) != 0; }
    const std::string& str(int32_t id) const { return strings_.at(id); }
    size_t size() const { return strings_.size(); }
    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    const std::vector<std::string>& strings() const { return strings_; }

private:
    std::vector<std::string> strings_;
    std::unordered_map<std::string, int32_t> index_;
    bool frozen_ = false;
};

// Packed triple key; ids must fit in 21 bits each (covers FB15k/WN18 with room).
inline uint64_t triple_key(const Triple& t) {
    return (uint64_t(t.head) << 42) | (uint64_t(t.relation) << 21) | uint64_t(t.tail);
}

class FilterIndex {
public:
    void insert(const Triple& t) { set_.insert(triple_key(t)); }
    bool contains(const Triple& t) const { return set_.count(triple_key(t)) != 0; }
    size_t size() const { return set_.size(); }

private:
    std::unordered_set<uint64_t> set_;
};

struct TripleStore {
    std::vector<Triple> train, valid, test;
    FilterIndex all_known;

    void build_filter_index() {
        all_known = FilterIndex{};
        for (const auto* split : {&train, &valid, &test})
            for (const auto& t : *split) all_known.insert(t);
    }
};

// Reads `head<TAB>relation<TAB>tail` lines. When the vocabs are frozen an
// unseen entity/relation is an error (valid/test must not extend the vocab).
inline std::vector<Triple> load_triples(const std::string& path, Vocab& entities,
                                        Vocab& relations) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open triple file: " + path);
    std::vector<Triple> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const size_t t1 = line.find('\t');
        const size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected head<TAB>relation<TAB>tail");
        const std::string h = line.substr(0, t1);
        const std::string r = line.substr(t1 + 1, t2 - t1 - 1);
        const std::string t = line.substr(t2 + 1);
        if (h.empty() || r.empty() || t.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty field");
        out.push_back({entities.add_or_get(h), relations.add_or_get(r), entities.add_or_get(t)});
    }
    return out;
}

constexpr WordId kUnkWord = 0;

struct DescriptionTable {
    // one word-id sequence per entity; empty means structure-only
    std::vector<std::vector<WordId>> tokens;
    std::vector<bool> covered;  // entity appeared in the descriptions file

    bool structure_only(EntityId e) const { return tokens[e].empty(); }
};

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Reads `entity<TAB>free text` lines, builds the word vocabulary (id 0 is the
// reserved UNK for words below min_word_freq), truncates to max_len tokens.
// Entities absent from the file fall back to their tokenized name; if that is
// empty too they stay structure-only.
inline DescriptionTable load_descriptions(const std::string& path, const Vocab& entities,
                                          Vocab& words, size_t max_len = 128,
                                          size_t min_word_freq = 2) {
    if (!entities.frozen()) throw std::runtime_error("entity vocab must be frozen");
    if (words.size() == 0) words.add_or_get("<unk>");

    std::vector<std::vector<std::string>> raw(entities.size());
    std::vector<bool> covered(entities.size(), false);

    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open descriptions file: " + path);
    std::string line;
    size_t lineno = 0;
    std::unordered_map<std::string, size_t> freq;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.back() == '\r') line.pop_back();
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected entity<TAB>text");
        const std::string ent = line.substr(0, tab);
        if (!entities.contains(ent)) {
            std::cerr << "warning: " << path << ":" << lineno << ": unknown entity '" << ent
                      << "', skipped\n";
            continue;
        }
        const EntityId e = entities.get(ent);
        auto toks = tokenize(line.substr(tab + 1));
        if (toks.size() > max_len) toks.resize(max_len);
        for (const auto& w : toks) ++freq[w];
        raw[e] = std::move(toks);
        covered[e] = true;
    }

    // uncovered entities: tokenized entity name as fallback text
    for (size_t e = 0; e < entities.size(); ++e) {
        if (covered[e]) continue;
        auto toks = tokenize(entities.str(static_cast<int32_t>(e)));
        if (toks.size() > max_len) toks.resize(max_len);
        raw[e] = std::move(toks);
    }

    DescriptionTable table;
    table.covered = std::move(covered);
    table.tokens.resize(entities.size());
    for (size_t e = 0; e < entities.size(); ++e) {
        table.tokens[e].reserve(raw[e].size());
        for (const auto& w : raw[e]) {
            auto it = freq.find(w);
            if (it != freq.end() && it->second >= min_word_freq)
                table.tokens[e].push_back(words.add_or_get(w));
            else
                table.tokens[e].push_back(kUnkWord);
        }
    }
    return table;
}

// Bernoulli negative-sampling statistics: mean tails per head and mean heads
// per tail of each relation over the training triples.
struct BernoulliStats {
    std::vector<double> tph, hpt;  // indexed by relation

    bool covers(RelationId r) const {
        return r >= 0 && size_t(r) < tph.size() && tph[r] > 0.0;
    }
};

inline BernoulliStats compute_bernoulli_stats(const std::vector<Triple>& train,
                                              size_t num_relations) {
    if (train.empty()) throw std::runtime_error("compute_bernoulli_stats: empty train split");
    std::vector<size_t> count(num_relations, 0);
    std::vector<std::unordered_set<EntityId>> heads(num_relations), tails(num_relations);
    for (const auto& t : train) {
        ++count[t.relation];
        heads[t.relation].insert(t.head);
        tails[t.relation].insert(t.tail);
    }
    BernoulliStats stats;
    stats.tph.assign(num_relations, 0.0);
    stats.hpt.assign(num_relations, 0.0);
    for (size_t r = 0; r < num_relations; ++r) {
        if (count[r] == 0) continue;
        stats.tph[r] = double(count[r]) / double(heads[r].size());
        stats.hpt[r] = double(count[r]) / double(tails[r].size());
    }
    return stats;
}

enum class RelationCategory : uint8_t { OneToOne = 0, OneToMany = 1, ManyToOne = 2, ManyToMany = 3 };

inline const char* category_name(RelationCategory c) {
    switch (c) {
        case RelationCategory::OneToOne: return "1-to-1";
        case RelationCategory::OneToMany: return "1-to-N";
        case RelationCategory::ManyToOne: return "N-to-1";
        case RelationCategory::ManyToMany: return "N-to-N";
    }
    return "?";
}

// "many" on the tail side iff tph > 1.5, on the head side iff hpt > 1.5.
inline RelationCategory categorize(double tph, double hpt) {
    const bool many_tail = tph > 1.5;
    const bool many_head = hpt > 1.5;
    if (many_head && many_tail) return RelationCategory::ManyToMany;
    if (many_tail) return RelationCategory::OneToMany;
    if (many_head) return RelationCategory::ManyToOne;
    return RelationCategory::OneToOne;
}

inline std::vector<RelationCategory> categorize_relations(const BernoulliStats& stats) {
    std::vector<RelationCategory> out(stats.tph.size());
    for (size_t r = 0; r < out.size(); ++r) out[r] = categorize(stats.tph[r], stats.hpt[r]);
    return out;
}

// Everything the training and evaluation stages need, prepared once.
struct Dataset {
    Vocab entities, relations, words;
    TripleStore triples;
    DescriptionTable descriptions;
    BernoulliStats stats;
    std::vector<RelationCategory> categories;

    size_t num_entities() const { return entities.size(); }
    size_t num_relations() const { return relations.size(); }
};

inline Dataset prepare_dataset(const std::string& train_path, const std::string& valid_path,
                               const std::string& test_path, const std::string& desc_path,
                               size_t max_len = 128, size_t min_word_freq = 2) {
    Dataset ds;
    ds.triples.train = load_triples(train_path, ds.entities, ds.relations);
    ds.triples.valid = load_triples(valid_path, ds.entities, ds.relations);
    ds.triples.test = load_triples(test_path, ds.entities, ds.relations);
    ds.entities.freeze();
    ds.relations.freeze();
    ds.triples.build_filter_index();
    if (!desc_path.empty()) {
        ds.descriptions = load_descriptions(desc_path, ds.entities, ds.words, max_len, min_word_freq);
    } else {
        // no text at all: every entity is structure-only
        ds.descriptions.tokens.resize(ds.entities.size());
        ds.descriptions.covered.assign(ds.entities.size(), false);
        std::cerr << "warning: no descriptions file, all entities are structure-only\n";
    }
    ds.stats = compute_bernoulli_stats(ds.triples.train, ds.num_relations());
    ds.categories = categorize_relations(ds.stats);
    return ds;
}

}  // namespace jointkge
