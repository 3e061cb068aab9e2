#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "jointkge/checkpoint.hpp"
#include "jointkge/dataset.hpp"
#include "test_util.hpp"

using namespace jointkge;
using testutil::write_temp;

TEST_CASE("load_triples assigns first-seen ids") {
    const auto path = write_temp("jkge_triples.tsv",
                                 "a\tlikes\tb\n"
                                 "b\tlikes\ta\n"
                                 "a\tknows\ta\n");
    Vocab ents, rels;
    const auto triples = load_triples(path.string(), ents, rels);
    REQUIRE(triples.size() == 3);
    REQUIRE(ents.size() == 2);
    REQUIRE(rels.size() == 2);
    REQUIRE(triples[0] == Triple{0, 0, 1});
    REQUIRE(triples[1] == Triple{1, 0, 0});
    REQUIRE(triples[2] == Triple{0, 1, 0});

    SECTION("round-trip id -> string -> id") {
        for (size_t i = 0; i < ents.size(); ++i)
            REQUIRE(ents.get(ents.str(int32_t(i))) == int32_t(i));
        for (size_t i = 0; i < rels.size(); ++i)
            REQUIRE(rels.get(rels.str(int32_t(i))) == int32_t(i));
    }
}

TEST_CASE("load_triples edge cases") {
    SECTION("empty file: empty split, vocab unchanged") {
        const auto path = write_temp("jkge_empty.tsv", "");
        Vocab ents, rels;
        REQUIRE(load_triples(path.string(), ents, rels).empty());
        REQUIRE(ents.size() == 0);
    }
    SECTION("malformed line reports the line number") {
        const auto path = write_temp("jkge_bad.tsv", "a\tlikes\tb\nmissing fields\n");
        Vocab ents, rels;
        REQUIRE_THROWS_WITH(load_triples(path.string(), ents, rels),
                            Catch::Matchers::ContainsSubstring(":2"));
    }
    SECTION("unknown entity under frozen vocab is an error") {
        const auto train = write_temp("jkge_train.tsv", "a\tlikes\tb\n");
        const auto valid = write_temp("jkge_valid.tsv", "a\tlikes\tnew_entity\n");
        Vocab ents, rels;
        load_triples(train.string(), ents, rels);
        ents.freeze();
        rels.freeze();
        REQUIRE_THROWS(load_triples(valid.string(), ents, rels));
    }
    SECTION("missing file") {
        Vocab ents, rels;
        REQUIRE_THROWS(load_triples("/nonexistent/path.tsv", ents, rels));
    }
}

TEST_CASE("load_descriptions") {
    const auto triples = write_temp("jkge_d_triples.tsv", "a\tlikes\tb\nc\tlikes\ta\n");
    Vocab ents, rels;
    load_triples(triples.string(), ents, rels);
    ents.freeze();

    SECTION("tokenization, lowercase, UNK below min freq") {
        const auto desc = write_temp("jkge_desc.tsv",
                                     "a\tThe Cat sat the cat\n"
                                     "b\tthe dog\n");
        Vocab words;
        const auto table = load_descriptions(desc.string(), ents, words, 128, 2);
        // "the" x3, "cat" x2 are kept; "sat", "dog" fall to UNK
        REQUIRE(table.tokens[ents.get("a")].size() == 5);
        const WordId the = words.get("the");
        const WordId cat = words.get("cat");
        REQUIRE(table.tokens[ents.get("a")] ==
                std::vector<WordId>{the, cat, kUnkWord, the, cat});
        REQUIRE(table.tokens[ents.get("b")] == std::vector<WordId>{the, kUnkWord});
        REQUIRE_FALSE(words.contains("sat"));
    }
    SECTION("uncovered entity falls back to tokenized name") {
        const auto desc = write_temp("jkge_desc2.tsv", "a\tsome words here\n");
        Vocab words;
        const auto table = load_descriptions(desc.string(), ents, words, 128, 1);
        REQUIRE_FALSE(table.covered[ents.get("c")]);
        // name "c" tokenizes to one token, unseen in corpus -> UNK
        REQUIRE(table.tokens[ents.get("c")] == std::vector<WordId>{kUnkWord});
        REQUIRE_FALSE(table.structure_only(ents.get("c")));
    }
    SECTION("unknown entity line warns and skips") {
        const auto desc = write_temp("jkge_desc3.tsv", "nosuch\ttext body\na\treal text\n");
        Vocab words;
        const auto table = load_descriptions(desc.string(), ents, words, 128, 1);
        REQUIRE(table.covered[ents.get("a")]);
    }
    SECTION("truncation to max_len") {
        const auto desc = write_temp("jkge_desc4.tsv", "a\tw w w w w w w w\n");
        Vocab words;
        const auto table = load_descriptions(desc.string(), ents, words, 3, 1);
        REQUIRE(table.tokens[ents.get("a")].size() == 3);
    }
}

TEST_CASE("compute_bernoulli_stats") {
    SECTION("two tails per head") {
        const auto stats = compute_bernoulli_stats({{0, 0, 1}, {0, 0, 2}}, 1);
        REQUIRE(stats.tph[0] == 2.0);
        REQUIRE(stats.hpt[0] == 1.0);
    }
    SECTION("single triple") {
        const auto stats = compute_bernoulli_stats({{0, 0, 1}}, 1);
        REQUIRE(stats.tph[0] == 1.0);
        REQUIRE(stats.hpt[0] == 1.0);
    }
    SECTION("two heads per tail") {
        const auto stats = compute_bernoulli_stats({{0, 0, 1}, {2, 0, 1}}, 1);
        REQUIRE(stats.tph[0] == 1.0);
        REQUIRE(stats.hpt[0] == 2.0);
    }
    SECTION("tph * distinct heads equals relation triple count, exactly") {
        std::mt19937_64 rng(3);
        const auto ds = testutil::random_toy_dataset(rng);
        std::vector<size_t> count(ds.num_relations(), 0);
        std::vector<std::unordered_set<EntityId>> heads(ds.num_relations());
        for (const auto& t : ds.triples.train) {
            ++count[t.relation];
            heads[t.relation].insert(t.head);
        }
        for (size_t r = 0; r < ds.num_relations(); ++r) {
            if (count[r] == 0) continue;
            REQUIRE(ds.stats.tph[r] * double(heads[r].size()) == double(count[r]));
        }
    }
}

TEST_CASE("categorize_relations thresholds") {
    REQUIRE(categorize(1.0, 1.0) == RelationCategory::OneToOne);
    REQUIRE(categorize(2.0, 1.0) == RelationCategory::OneToMany);
    REQUIRE(categorize(1.0, 2.0) == RelationCategory::ManyToOne);
    REQUIRE(categorize(2.0, 2.0) == RelationCategory::ManyToMany);
    REQUIRE(categorize(1.5, 1.5) == RelationCategory::OneToOne);  // strict >
}

TEST_CASE("filter index") {
    TripleStore ts;
    ts.train = {{0, 0, 1}};
    ts.valid = {{0, 0, 2}, {0, 0, 1}};  // duplicate across splits
    ts.test = {{1, 0, 0}};
    ts.build_filter_index();
    REQUIRE(ts.all_known.contains({0, 0, 1}));
    REQUIRE_FALSE(ts.all_known.contains({0, 0, 3}));
    REQUIRE(ts.all_known.size() == 3);  // set semantics

    SECTION("contains every split triple and nothing else") {
        std::unordered_set<uint64_t> expect;
        for (const auto* split : {&ts.train, &ts.valid, &ts.test})
            for (const auto& t : *split) expect.insert(triple_key(t));
        REQUIRE(ts.all_known.size() == expect.size());
        for (const auto* split : {&ts.train, &ts.valid, &ts.test})
            for (const auto& t : *split) REQUIRE(ts.all_known.contains(t));
    }
}

TEST_CASE("dataset bundle round-trip") {
    std::mt19937_64 rng(5);
    const auto ds = testutil::random_toy_dataset(rng);
    const auto path = (std::filesystem::temp_directory_path() / "jkge_bundle_test.bin").string();
    save_bundle(path, ds);
    const Dataset back = load_bundle(path);
    REQUIRE(back.num_entities() == ds.num_entities());
    REQUIRE(back.num_relations() == ds.num_relations());
    REQUIRE(back.triples.train == ds.triples.train);
    REQUIRE(back.triples.valid == ds.triples.valid);
    REQUIRE(back.triples.test == ds.triples.test);
    REQUIRE(back.descriptions.tokens == ds.descriptions.tokens);
    REQUIRE(back.stats.tph == ds.stats.tph);

    SECTION("re-saving yields a byte-identical bundle") {
        const auto path2 = (std::filesystem::temp_directory_path() / "jkge_bundle2.bin").string();
        save_bundle(path2, back);
        std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {});
        const std::string sb((std::istreambuf_iterator<char>(b)), {});
        REQUIRE(sa == sb);
        std::filesystem::remove(path2);
    }
    std::filesystem::remove(path);
}
