#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "crumbs/io.hpp"
#include "helpers.hpp"

using namespace crumbs;
using namespace crumbs::testing;

namespace {

std::string cli() {
    const char* p = std::getenv("CRUMBS_CLI");
    REQUIRE_MESSAGE(p != nullptr, "CRUMBS_CLI must point at the crumbs binary");
    return p;
}

int run(const std::string& args, const std::filesystem::path& log) {
    std::string cmd = cli() + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("diff + merge + inspect round trip") {
    TempDir dir("cli_flow");
    Checkpoint base = random_checkpoint(300, 6);
    Checkpoint ft1 = perturb(base, 301);
    Checkpoint ft2 = perturb(base, 302);
    write_checkpoint(base, dir.path / "base.mbc");
    write_checkpoint(ft1, dir.path / "ft1.mbc");
    write_checkpoint(ft2, dir.path / "ft2.mbc");
    auto log = dir.path / "log.txt";

    CHECK(run("diff --base " + (dir.path / "base.mbc").string() + " --finetuned " +
                  (dir.path / "ft1.mbc").string() + " --task-id t1 --out " +
                  (dir.path / "t1.mbc").string(),
              log) == 0);
    CHECK(run("diff --base " + (dir.path / "base.mbc").string() + " --finetuned " +
                  (dir.path / "ft2.mbc").string() + " --task-id t2 --out " +
                  (dir.path / "t2.mbc").string(),
              log) == 0);

    std::string merge_args = "merge --method breadcrumbs --base " +
                             (dir.path / "base.mbc").string() + " --vectors " +
                             (dir.path / "t1.mbc").string() + " " + (dir.path / "t2.mbc").string() +
                             " --alpha 0.3 --beta 0.90 --gamma 0.99 --out " +
                             (dir.path / "merged.mbc").string();
    CHECK(run(merge_args, log) == 0);

    Checkpoint merged = read_checkpoint(dir.path / "merged.mbc");
    CHECK(merged.metadata().at("method") == "breadcrumbs");
    CHECK(merged.metadata().at("alpha") == "0.3");
    CHECK(merged.metadata().at("task_ids") == "t1,t2");
    CHECK(std::filesystem::exists(dir.path / "merged.mbc.recipe.json"));

    // re-running the same recipe reproduces the output bitwise
    std::string first = file_bytes(dir.path / "merged.mbc");
    CHECK(run(merge_args, log) == 0);
    CHECK(file_bytes(dir.path / "merged.mbc") == first);

    CHECK(run("inspect " + (dir.path / "merged.mbc").string(), log) == 0);
    std::string out = slurp(log);
    CHECK(out.find("total params") != std::string::npos);
    CHECK(run("inspect " + (dir.path / "merged.mbc").string() + " --json", log) == 0);
}

TEST_CASE("beta > gamma is a usage error and leaves no output file") {
    TempDir dir("cli_badspec");
    Checkpoint base = random_checkpoint(310, 3);
    write_checkpoint(base, dir.path / "base.mbc");
    Checkpoint ft = perturb(base, 311);
    write_checkpoint(ft, dir.path / "ft.mbc");
    auto log = dir.path / "log.txt";
    REQUIRE(run("diff --base " + (dir.path / "base.mbc").string() + " --finetuned " +
                    (dir.path / "ft.mbc").string() + " --task-id t --out " +
                    (dir.path / "t.mbc").string(),
                log) == 0);

    int rc = run("merge --method breadcrumbs --base " + (dir.path / "base.mbc").string() +
                     " --vectors " + (dir.path / "t.mbc").string() +
                     " --alpha 0.3 --beta 0.9 --gamma 0.5 --out " + (dir.path / "out.mbc").string(),
                 log);
    CHECK(rc == 1);
    CHECK(slurp(log).find("beta") != std::string::npos);
    CHECK(!std::filesystem::exists(dir.path / "out.mbc"));
    CHECK(!std::filesystem::exists(dir.path / "out.mbc.tmp"));
}

TEST_CASE("data errors exit 2") {
    TempDir dir("cli_data");
    auto log = dir.path / "log.txt";
    std::ofstream(dir.path / "junk.mbc") << "not a checkpoint";
    CHECK(run("inspect " + (dir.path / "junk.mbc").string(), log) == 2);

    // mismatched shapes between base and vector
    Checkpoint base = random_checkpoint(320, 3);
    write_checkpoint(base, dir.path / "base.mbc");
    Checkpoint other = random_checkpoint(321, 4);
    write_checkpoint(other, dir.path / "other.mbc");
    Checkpoint other_ft = perturb(other, 322);
    write_checkpoint(other_ft, dir.path / "other_ft.mbc");
    REQUIRE(run("diff --base " + (dir.path / "other.mbc").string() + " --finetuned " +
                    (dir.path / "other_ft.mbc").string() + " --task-id t --out " +
                    (dir.path / "t.mbc").string(),
                log) == 0);
    CHECK(run("merge --base " + (dir.path / "base.mbc").string() + " --vectors " +
                  (dir.path / "t.mbc").string() + " --alpha 0.3 --out " +
                  (dir.path / "m.mbc").string(),
              log) == 2);
}

TEST_CASE("usage errors exit 1") {
    TempDir dir("cli_usage");
    auto log = dir.path / "log.txt";
    CHECK(run("merge", log) == 1);              // missing required flags
    CHECK(run("frobnicate", log) == 1);         // unknown subcommand
}

TEST_CASE("mask and cosine commands") {
    TempDir dir("cli_mask");
    auto log = dir.path / "log.txt";
    Checkpoint base = random_checkpoint(330, 4, 12);
    write_checkpoint(base, dir.path / "base.mbc");
    for (int t = 0; t < 2; ++t) {
        write_checkpoint(perturb(base, 331 + static_cast<uint64_t>(t)),
                         dir.path / ("ft" + std::to_string(t) + ".mbc"));
        REQUIRE(run("diff --base " + (dir.path / "base.mbc").string() + " --finetuned " +
                        (dir.path / ("ft" + std::to_string(t) + ".mbc")).string() +
                        " --task-id t" + std::to_string(t) + " --out " +
                        (dir.path / ("t" + std::to_string(t) + ".mbc")).string(),
                    log) == 0);
    }
    CHECK(run("mask --vector " + (dir.path / "t0.mbc").string() +
                  " --beta 0.5 --gamma 0.95 --out " + (dir.path / "m.mbc").string(),
              log) == 0);
    CHECK(slurp(log).find("total kept fraction") != std::string::npos);
    Checkpoint m = read_checkpoint(dir.path / "m.mbc");
    CHECK(m.metadata().at("kind") == "mask");

    CHECK(run("cosine --vectors " + (dir.path / "t0.mbc").string() + " " +
                  (dir.path / "t1.mbc").string() + " --csv " + (dir.path / "cos.csv").string(),
              log) == 0);
    CHECK(slurp(dir.path / "cos.csv").find("task_id,t0,t1") != std::string::npos);
    CHECK(run("cosine --vectors " + (dir.path / "t0.mbc").string() + " " +
                  (dir.path / "t1.mbc").string() + " --masked --beta 0.9 --gamma 0.99 --json",
              log) == 0);
}

TEST_CASE("fixtures + sweep + subsets pipeline (small)") {
    TempDir dir("cli_pipeline");
    auto log = dir.path / "log.txt";
    std::string fx = (dir.path / "fx").string();
    CHECK(run("fixtures --out " + fx + " --seed 1 --num-tasks 2 --input-dim 8 --num-classes 3"
              " --train-size 96 --val-size 48 --test-size 48"
              " --pretrain-epochs 3 --finetune-epochs 2",
              log) == 0);
    CHECK(std::filesystem::exists(fx + "/base.mbc"));
    CHECK(std::filesystem::exists(fx + "/recipe.resolved.json"));
    CHECK(std::filesystem::exists(fx + "/vectors/task0.mbc"));
    CHECK(std::filesystem::exists(fx + "/accuracies.json"));

    CHECK(run("sweep --fixtures " + fx + " --method breadcrumbs --alphas 0.3,0.6 --betas 0,0.9"
              " --gammas 0.99,1.0 --out " + (dir.path / "sweep").string(),
              log) == 0);
    CHECK(std::filesystem::exists(dir.path / "sweep" / "entries.csv"));
    CHECK(std::filesystem::exists(dir.path / "sweep" / "sweep.json"));
    CHECK(std::filesystem::exists(dir.path / "sweep" / "recipe.resolved.json"));

    CHECK(run("sweep --fixtures " + fx + " --method task_arithmetic --alphas 0.3,0.6"
              " --validation-free-k 1 --out " + (dir.path / "vf").string(),
              log) == 0);
    CHECK(std::filesystem::exists(dir.path / "vf" / "validation_free.json"));

    CHECK(run("subsets --fixtures " + fx + " --method task_arithmetic --alpha 0.4 --out " +
                  (dir.path / "subs").string(),
              log) == 0);
    std::string subs = slurp(dir.path / "subs" / "subsets.csv");
    CHECK(subs.find("task0+task1") != std::string::npos);
    CHECK(std::filesystem::exists(dir.path / "subs" / "mean_by_size.csv"));
}
