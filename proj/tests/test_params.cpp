#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "jointkge/checkpoint.hpp"
#include "jointkge/params.hpp"

using namespace jointkge;

TEST_CASE("sgd_step arithmetic") {
    ParameterStore store;
    store.add("p", 1, 1, LrGroup::Structure);
    store.row("p", 0)[0] = 1.0;

    SECTION("zero gradient, no regularization: unchanged") {
        store.grad_row("p", 0);  // touch with zero grad
        store.sgd_step(0.1, 0.1, 0.0);
        REQUIRE(store.row("p", 0)[0] == 1.0);
    }
    SECTION("p=1, grad=1, lr=0.1 -> 0.9") {
        store.grad_row("p", 0)[0] = 1.0;
        store.sgd_step(0.1, 0.1, 0.0);
        REQUIRE(store.row("p", 0)[0] == Catch::Approx(0.9));
    }
    SECTION("p=1, grad=0, lr=0.1, l2=0.5 -> 0.9 (regularizer 2*0.5*1)") {
        store.grad_row("p", 0);
        store.sgd_step(0.1, 0.1, 0.5);
        REQUIRE(store.row("p", 0)[0] == Catch::Approx(0.9));
    }
    SECTION("non-finite gradient aborts naming the slot") {
        store.grad_row("p", 0)[0] = std::numeric_limits<double>::quiet_NaN();
        REQUIRE_THROWS_WITH(store.sgd_step(0.1, 0.1, 0.0),
                            Catch::Matchers::ContainsSubstring("p"));
    }
}

TEST_CASE("sgd_step only touches looked-up rows") {
    ParameterStore store;
    store.add("table", 4, 2, LrGroup::Text);
    for (size_t i = 0; i < 4; ++i)
        for (size_t k = 0; k < 2; ++k) store.row("table", i)[k] = 1.0;
    store.grad_row("table", 1)[0] = 1.0;
    store.sgd_step(0.0, 0.5, 0.25);  // rows with no lookup must not see lazy L2
    REQUIRE(store.row("table", 0)[0] == 1.0);
    REQUIRE(store.row("table", 1)[0] == Catch::Approx(1.0 - 0.5 * (1.0 + 0.5)));
    REQUIRE(store.row("table", 1)[1] == Catch::Approx(1.0 - 0.5 * 0.5));
    REQUIRE(store.row("table", 2)[0] == 1.0);
}

TEST_CASE("learning-rate groups") {
    ParameterStore store;
    store.add("s", 1, 1, LrGroup::Structure);
    store.add("t", 1, 1, LrGroup::Text);
    store.grad_row("s", 0)[0] = 1.0;
    store.grad_row("t", 0)[0] = 1.0;
    store.sgd_step(0.1, 0.01, 0.0);
    REQUIRE(store.row("s", 0)[0] == Catch::Approx(-0.1));
    REQUIRE(store.row("t", 0)[0] == Catch::Approx(-0.01));
}

TEST_CASE("renormalize_rows") {
    ParameterStore store;
    store.add("e", 3, 2, LrGroup::Structure);
    auto r0 = store.row("e", 0);
    r0[0] = 3.0;
    r0[1] = 4.0;
    auto r1 = store.row("e", 1);
    r1[0] = 1.0;
    r1[1] = 0.0;
    // row 2 stays zero
    store.renormalize_rows("e", {0, 1, 2});
    REQUIRE(store.row("e", 0)[0] == Catch::Approx(0.6));
    REQUIRE(store.row("e", 0)[1] == Catch::Approx(0.8));
    REQUIRE(store.row("e", 1)[0] == 1.0);
    REQUIRE(store.row("e", 2)[0] == 0.0);

    SECTION("idempotent") {
        const Vec before = store.row_vec("e", 0);
        store.renormalize_rows("e", {0});
        REQUIRE(store.row_vec("e", 0) == before);
    }
}

TEST_CASE("check_gradients") {
    ParameterStore store;
    store.add("w", 1, 3, LrGroup::Structure);
    auto w = store.row("w", 0);
    w[0] = 0.3;
    w[1] = -0.7;
    w[2] = 1.1;
    const Vec coef{2.0, -1.0, 0.5};

    SECTION("linear loss: error at machine precision") {
        auto loss = [&] {
            double s = 0.0;
            auto wv = store.row("w", 0);
            for (size_t k = 0; k < 3; ++k) s += coef[k] * wv[k];
            auto g = store.grad_row("w", 0);
            for (size_t k = 0; k < 3; ++k) g[k] += coef[k];
            return s;
        };
        const auto report = check_gradients(store, loss, 1e-5);
        REQUIRE(report.overall < 1e-9);
    }

    SECTION("corrupted backward is detected") {
        auto bad_loss = [&] {
            double s = 0.0;
            auto wv = store.row("w", 0);
            for (size_t k = 0; k < 3; ++k) s += coef[k] * wv[k];
            auto g = store.grad_row("w", 0);
            for (size_t k = 0; k < 3; ++k) g[k] += coef[k] * 1.5;  // wrong scale
            return s;
        };
        const auto report = check_gradients(store, bad_loss, 1e-5);
        REQUIRE(report.overall > 1e-2);
    }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    ParameterStore store;
    store.add("entity_struct", 3, 4, LrGroup::Structure);
    store.add("relation", 2, 4, LrGroup::Structure);
    std::mt19937_64 rng(11);
    store.init_uniform("entity_struct", -1.0, 1.0, rng);
    store.init_uniform("relation", -1.0, 1.0, rng);

    Vocab ents, rels, words;
    ents.add_or_get("a");
    ents.add_or_get("b");
    ents.add_or_get("c");
    rels.add_or_get("likes");
    rels.add_or_get("knows");
    words.add_or_get("<unk>");

    ModelConfig cfg;
    cfg.d = 4;
    cfg.use_text = false;
    const auto path = (std::filesystem::temp_directory_path() / "jkge_ckpt_test.bin").string();
    save_checkpoint(path, cfg, store, ents, rels, words);
    const Checkpoint ck = load_checkpoint(path);

    REQUIRE(ck.config.d == 4);
    REQUIRE(ck.config.use_text == false);
    REQUIRE(ck.store.slot("entity_struct").value == store.slot("entity_struct").value);
    REQUIRE(ck.store.slot("relation").value == store.slot("relation").value);
    REQUIRE(ck.entities.str(1) == "b");
    REQUIRE(ck.relations.str(0) == "likes");
    std::filesystem::remove(path);
}
