#include <gtest/gtest.h>

#include <sstream>

#include "stc/config.hpp"

using namespace stc;

TEST(Config, DefaultsEchoRoundTrip) {
    StcConfig a;
    std::istringstream in(format_config(a, true));
    StcConfig b;
    b.train.epochs = 3;
    b.train.loss.tau = 0.9;
    apply_config(b, in);
    EXPECT_EQ(config_pairs(a), config_pairs(b));
}

TEST(Config, ParsesKeysCommentsAndLists) {
    std::istringstream in(
        "# comment\n"
        "loss.tau = 0.5   # trailing\n"
        "\n"
        "model.hidden = 64, 32\n"
        "loss.denominator_mode = negatives_only\n"
        "train.seed = 12345678901234\n");
    StcConfig c;
    apply_config(c, in);
    EXPECT_EQ(c.train.loss.tau, 0.5);
    EXPECT_EQ(c.train.encoder_hidden, (std::vector<std::size_t>{64, 32}));
    EXPECT_EQ(c.train.loss.mode, DenominatorMode::negatives_only);
    EXPECT_EQ(c.train.seed, 12345678901234u);
}

TEST(Config, Errors) {
    StcConfig c;
    EXPECT_THROW(set_config_value(c, "loss.temperature", "1"), UsageError);
    EXPECT_THROW(set_config_value(c, "loss.tau", "abc"), UsageError);
    EXPECT_THROW(set_config_value(c, "train.epochs", "-3"), UsageError);
    std::istringstream no_eq("loss.tau 0.5\n");
    EXPECT_THROW(apply_config(c, no_eq), UsageError);
    EXPECT_THROW(apply_config_file(c, "/nonexistent/stc.cfg"), UsageError);
}

TEST(Config, LaterOverridesWin) {
    StcConfig c;
    std::istringstream in("train.epochs = 5\ntrain.epochs = 7\n");
    apply_config(c, in);
    EXPECT_EQ(c.train.epochs, 7u);
    set_config_value(c, "train.epochs", "9");
    EXPECT_EQ(c.train.epochs, 9u);
}

TEST(Config, EchoIsExactForReals) {
    StcConfig c;
    set_config_value(c, "train.lr", "0.1");
    std::string lr;
    for (const auto& [k, v] : config_pairs(c)) {
        if (k == "train.lr") lr = v;
    }
    EXPECT_EQ(lr, "0.1");
}
