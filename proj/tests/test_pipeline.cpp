#include "mixscape/errors.hpp"
#include "mixscape/pipeline.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace mixscape;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("mixscape_test_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RunConfig small_config(const fs::path& root)
{
    RunConfig c;
    c.per_combo = 10;
    c.output_dir = root;
    return c;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(MIXSCAPE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(RunConfigTest, DefaultsValidate)
{
    const RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(c.modes.size(), 3u);
    EXPECT_EQ(c.hash().size(), 16u);
}

TEST(RunConfigTest, SetParsesEveryKind)
{
    RunConfig c;
    c.set("epochs", " 7 ");
    c.set("learning_rate", "2e-3");
    c.set("modes", "a2v, A2A+A2V");
    c.set("seeds", "4,5,6");
    c.set("cross_half_negatives", "true");
    EXPECT_EQ(c.epochs, 7u);
    EXPECT_DOUBLE_EQ(c.learning_rate, 2e-3);
    EXPECT_EQ(c.modes, (std::vector<AlignmentMode>{AlignmentMode::A2V, AlignmentMode::A2APlusA2V}));
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5, 6}));
    EXPECT_TRUE(c.cross_half_negatives);
    EXPECT_TRUE(c.alignment(AlignmentMode::A2A).cross_half_negatives);
}

TEST(RunConfigTest, BadValuesAreConfigErrors)
{
    RunConfig c;
    EXPECT_THROW(c.set("no_such_key", "1"), ConfigError);
    EXPECT_THROW(c.set("epochs", "-3"), ConfigError);
    EXPECT_THROW(c.set("lambda", "abc"), ConfigError);
    EXPECT_THROW(c.set("png", "maybe"), ConfigError);
    EXPECT_THROW(c.set("modes", "A2X"), ConfigError);
    c.set("lambda", "1.5");
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.set("seeds", "1,1,2");
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.set("batch_size", "1");
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.set("unrealistic_test_only", "true");
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RunConfigTest, HashIgnoresOutputLocationOnly)
{
    RunConfig a, b;
    b.output_dir = "/elsewhere";
    b.png = true;
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.canonical().find("output_dir"), std::string::npos);
    b.tau = 0.4;
    EXPECT_NE(a.hash(), b.hash());
}

TEST(RunConfigTest, FileLoadingWithComments)
{
    const fs::path dir = scratch("cfg");
    {
        std::ofstream os(dir / "run.cfg");
        os << "# desk run\nepochs = 4   # short\n\nseeds = 9,10,11\n";
    }
    const RunConfig c = load_config(dir / "run.cfg");
    EXPECT_EQ(c.epochs, 4u);
    EXPECT_EQ(c.seeds.front(), 9u);
    {
        std::ofstream os(dir / "bad.cfg");
        os << "epochs 4\n";
    }
    EXPECT_THROW(load_config(dir / "bad.cfg"), ConfigError);
    EXPECT_THROW(load_config(dir / "absent.cfg"), ConfigError);
    fs::remove_all(dir);
}

TEST(Layout, PathsAndEnvironmentOverride)
{
    RunConfig c;
    c.output_dir = "base";
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(resolve_layout(c).root, fs::path("base"));
    ::setenv(kOutputRootEnv, "/tmp/override", 1);
    const RunLayout l = resolve_layout(c);
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(l.root, fs::path("/tmp/override"));
    EXPECT_EQ(l.run_dir(2, AlignmentMode::A2APlusA2V), fs::path("/tmp/override/seed_2/a2a_a2v"));
}

TEST(Stages, DatasetIsBoundToItsConfig)
{
    const fs::path root = scratch("data");
    RunConfig c = small_config(root);
    const RunLayout layout{root};
    make_data(c, layout);
    EXPECT_TRUE(fs::exists(layout.config_file()));
    const StoredDataset d = load_run_dataset(c, layout);
    EXPECT_EQ(d.tuples.size(), 12u * 10u);

    RunConfig other = c;
    other.noise_level = 0.2;
    EXPECT_THROW(load_run_dataset(other, layout), ConfigError);

    EXPECT_THROW(load_seed_artifacts(c, layout, 1), DataError);
    EXPECT_THROW(evaluate_stage(c, layout, d), DataError);
    fs::remove_all(root);
}

TEST(Cli, ExitCodes)
{
    const fs::path root = scratch("cli");
    const std::string out = " -o " + root.string() + " -s per_combo=10";
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("no-such-command"), 1);
    EXPECT_EQ(run_cli("make-data -s bogus=1" + out), 1);
    EXPECT_EQ(run_cli("make-data -s lambda=2" + out), 1);
    EXPECT_EQ(run_cli("make-data" + out), 0);
    EXPECT_TRUE(fs::exists(root / "config.txt"));
    // Training before pretraining lacks the encoders.
    EXPECT_EQ(run_cli("train --seed 1 --mode A2A" + out), 2);
    EXPECT_EQ(run_cli("generate --seed 1" + out), 1);
    fs::remove_all(root);
}
