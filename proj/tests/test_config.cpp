#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "ldu/config.hpp"

using namespace ldu;

namespace {

ExperimentSpec parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config_stream(in, "<test>");
}

}  // namespace

TEST_CASE("a minimal config fills the documented defaults") {
    auto spec = parse_text("dataset = two_moons\n");
    REQUIRE(spec.lambda == 0.1);
    REQUIRE(spec.prototypes == 16);
    REQUIRE(spec.ece_bins == 15);
    REQUIRE(spec.ause_steps == 100);
    REQUIRE(spec.widths == std::vector<std::size_t>{2, 17, 17});
    REQUIRE(spec.seeds == 3);
    REQUIRE(spec.optimizer == OptimizerKind::kAdam);
    REQUIRE(spec.lambda_values == std::vector<double>{0.01, 0.1, 0.5, 1.0, 2.0});
    REQUIRE(spec.prototype_values == std::vector<std::size_t>{16, 32, 64, 128});
}

TEST_CASE("unknown keys are fatal and name the key") {
    REQUIRE_THROWS_WITH(parse_text("lamda = 0.1\n"),
                        Catch::Matchers::ContainsSubstring("unknown key 'lamda'"));
    REQUIRE_THROWS_WITH(parse_text("\n\nprototypes = 8\nbogus = 1\n"),
                        Catch::Matchers::ContainsSubstring(":4"));
}

TEST_CASE("duplicate keys and malformed lines report the line number") {
    REQUIRE_THROWS_WITH(parse_text("lambda = 0.1\nlambda = 0.2\n"),
                        Catch::Matchers::ContainsSubstring("duplicate key 'lambda'"));
    REQUIRE_THROWS_WITH(parse_text("lambda\n"),
                        Catch::Matchers::ContainsSubstring("key = value"));
    REQUIRE_THROWS_WITH(parse_text("epochs = twelve\n"),
                        Catch::Matchers::ContainsSubstring("epochs"));
    REQUIRE_THROWS_WITH(parse_text("task = classify\n"),
                        Catch::Matchers::ContainsSubstring("expected one of"));
}

TEST_CASE("comments and spacing are ignored") {
    auto spec = parse_text("# two-moons run\n  lambda = 0.5   # weight\n\nepochs = 10\n");
    REQUIRE(spec.lambda == 0.5);
    REQUIRE(spec.epochs == 10);
}

TEST_CASE("configs round-trip through serialization") {
    auto spec = parse_text(
        "name = roundtrip\n"
        "task = regression\n"
        "dataset = sinusoid\n"
        "outputs = 1\n"
        "widths = 1,24,24\n"
        "prototypes = 15\n"
        "lambda = 0.25\n"
        "stage2 = true\n"
        "noise_mode = constant\n"
        "epistemic_mode = max_embed\n"
        "lambda_values = 0.5,1.5\n"
        "seed = 99\n");
    const std::string text = serialize_config(spec);
    std::istringstream in(text);
    auto back = parse_config_stream(in, "<roundtrip>");
    REQUIRE(serialize_config(back) == text);
    REQUIRE(back.prototypes == 15);
    REQUIRE(back.task == Task::kRegression);
    REQUIRE(back.epistemic_mode == EpistemicMode::kMaxEmbed);
    REQUIRE(back.lambda_values == std::vector<double>{0.5, 1.5});
    REQUIRE(back.seed == 99);
}

TEST_CASE("cross-field validation catches inconsistent specs") {
    REQUIRE_THROWS_WITH(parse_text("lambda = -1\n"),
                        Catch::Matchers::ContainsSubstring("lambda"));
    REQUIRE_THROWS_WITH(parse_text("dataset = sinusoid\ntask = classification\n"),
                        Catch::Matchers::ContainsSubstring("regression"));
    REQUIRE_THROWS_WITH(parse_text("task = regression\ndataset = sinusoid\noutputs = 3\n"),
                        Catch::Matchers::ContainsSubstring("outputs"));
    REQUIRE_THROWS_WITH(parse_text("dataset = csv\n"),
                        Catch::Matchers::ContainsSubstring("train_csv"));
    REQUIRE_THROWS_WITH(parse_text("stage2 = true\nmodel = plain\n"),
                        Catch::Matchers::ContainsSubstring("stage2"));
}

TEST_CASE("spec converts into model and train configurations") {
    auto spec = parse_text(
        "lambda = 0.3\n"
        "epochs = 42\n"
        "batch_size = 16\n"
        "optimizer = sgd_momentum\n"
        "learning_rate = 0.05\n"
        "stage2 = true\n"
        "stage2_steps = 77\n"
        "loss_entrop = false\n");
    auto tc = spec.train_config(7);
    REQUIRE(tc.lambda == 0.3);
    REQUIRE(tc.epochs == 42);
    REQUIRE(tc.batch_size == 16);
    REQUIRE(tc.optimizer.kind == OptimizerKind::kSgdMomentum);
    REQUIRE(tc.optimizer.learning_rate == 0.05);
    REQUIRE(tc.toggles.entrop == false);
    REQUIRE(tc.toggles.dis == true);
    REQUIRE(tc.stage2.has_value());
    REQUIRE(tc.stage2->steps == 77);
    auto ms = spec.model_spec(9);
    REQUIRE(ms.widths == spec.widths);
    REQUIRE(ms.seed == 9);
}
