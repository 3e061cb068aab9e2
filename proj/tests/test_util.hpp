#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "jointkge/dataset.hpp"

namespace testutil {

using namespace jointkge;

inline std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

// In-memory toy dataset; entity/relation names e0..eN, r0..rM. Descriptions
// are word-id sequences over a synthetic word vocab w0..wK (id 0 is UNK).
inline Dataset make_toy_dataset(size_t num_entities, size_t num_relations,
                                const std::vector<Triple>& train,
                                const std::vector<Triple>& valid = {},
                                const std::vector<Triple>& test = {},
                                size_t num_words = 0,
                                const std::vector<std::vector<WordId>>& descriptions = {}) {
    Dataset ds;
    for (size_t e = 0; e < num_entities; ++e) ds.entities.add_or_get("e" + std::to_string(e));
    for (size_t r = 0; r < num_relations; ++r) ds.relations.add_or_get("r" + std::to_string(r));
    ds.entities.freeze();
    ds.relations.freeze();
    ds.words.add_or_get("<unk>");
    for (size_t w = 1; w < num_words; ++w) ds.words.add_or_get("w" + std::to_string(w));
    ds.words.freeze();

    ds.triples.train = train;
    ds.triples.valid = valid;
    ds.triples.test = test;
    ds.triples.build_filter_index();

    ds.descriptions.tokens.resize(num_entities);
    ds.descriptions.covered.assign(num_entities, false);
    for (size_t e = 0; e < descriptions.size() && e < num_entities; ++e) {
        ds.descriptions.tokens[e] = descriptions[e];
        ds.descriptions.covered[e] = !descriptions[e].empty();
    }

    if (!train.empty()) {
        ds.stats = compute_bernoulli_stats(ds.triples.train, num_relations);
        ds.categories = categorize_relations(ds.stats);
    } else {
        ds.stats.tph.assign(num_relations, 0.0);
        ds.stats.hpt.assign(num_relations, 0.0);
        ds.categories.assign(num_relations, RelationCategory::OneToOne);
    }
    return ds;
}

// Random KG with descriptions for most entities.
inline Dataset random_toy_dataset(std::mt19937_64& rng, size_t max_entities = 10,
                                  size_t max_relations = 4, size_t max_triples = 40,
                                  size_t num_words = 8, size_t valid_triples = 4,
                                  size_t test_triples = 6) {
    std::uniform_int_distribution<size_t> ne_dist(3, max_entities);
    std::uniform_int_distribution<size_t> nr_dist(1, max_relations);
    const size_t ne = ne_dist(rng);
    const size_t nr = nr_dist(rng);
    std::uniform_int_distribution<size_t> nt_dist(nr + 2, max_triples);
    const size_t nt = nt_dist(rng);

    std::uniform_int_distribution<size_t> pe(0, ne - 1), pr(0, nr - 1);
    std::vector<Triple> all;
    std::unordered_set<uint64_t> seen;
    // ensure every relation occurs in train at least once
    size_t guard = 0;
    while (all.size() < nt + valid_triples + test_triples && guard++ < 10000) {
        Triple t{EntityId(pe(rng)),
                 RelationId(all.size() < nr ? all.size() : pr(rng)),
                 EntityId(pe(rng))};
        if (!seen.insert(triple_key(t)).second) continue;
        all.push_back(t);
    }
    const size_t train_n = std::min(all.size(), nt);
    std::vector<Triple> train(all.begin(), all.begin() + train_n);
    std::vector<Triple> valid, test;
    for (size_t i = train_n; i < all.size(); ++i) {
        if (valid.size() < valid_triples)
            valid.push_back(all[i]);
        else
            test.push_back(all[i]);
    }
    // only keep valid/test triples whose relation occurs in train
    std::vector<bool> in_train(4 + max_relations, false);
    for (const auto& t : train) in_train[t.relation] = true;
    auto prune = [&](std::vector<Triple>& v) {
        std::erase_if(v, [&](const Triple& t) { return !in_train[t.relation]; });
    };
    prune(valid);
    prune(test);

    std::uniform_int_distribution<size_t> len_dist(1, 5), wd(0, num_words - 1);
    std::vector<std::vector<WordId>> desc(ne);
    for (size_t e = 0; e < ne; ++e) {
        if (e % 5 == 4) continue;  // leave some entities structure-only
        const size_t len = len_dist(rng);
        for (size_t k = 0; k < len; ++k) desc[e].push_back(WordId(wd(rng)));
    }
    return make_toy_dataset(ne, nr, train, valid, test, num_words, desc);
}

}  // namespace testutil
