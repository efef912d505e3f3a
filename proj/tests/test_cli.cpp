#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gssl/cli.hpp"
#include "gssl/experiments.hpp"
#include "gssl/io.hpp"

using namespace gssl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "gssl_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
    const fs::path path = dir / "config.json";
    std::ofstream out(path);
    out << text;
    return path.string();
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kTinyConfig = R"({
  "dataset": {"builtin": "two_means", "p": 48},
  "layout": {"n_l": [4, 4], "n_u": [20, 20]},
  "kernel": "gaussian{1}",
  "alpha": {"value": -1.0},
  "trials": 3,
  "seed": 11
})";

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(buf), 4);
}

void write_idx_pair(const fs::path& dir, int count, bool only_one_class) {
    std::ofstream img(dir / "imgs", std::ios::binary);
    write_be32(img, 0x00000803);
    write_be32(img, count);
    write_be32(img, 4);
    write_be32(img, 4);
    for (int i = 0; i < count; ++i)
        for (int px = 0; px < 16; ++px) img.put(static_cast<char>((i + px) % 251));
    std::ofstream lab(dir / "labs", std::ios::binary);
    write_be32(lab, 0x00000801);
    write_be32(lab, count);
    for (int i = 0; i < count; ++i)
        lab.put(static_cast<char>(only_one_class ? 8 : (i % 2 ? 9 : 8)));
}

} // namespace

TEST_CASE("kernel spec strings") {
    const KernelConfig g = KernelConfig::parse("gaussian{0.5}");
    CHECK(g.type == KernelConfig::Type::gaussian);
    CHECK(g.sigma2 == 0.5);
    CHECK_FALSE(g.needs_tau());
    const KernelConfig q = KernelConfig::parse("quad{1,-0.5,1}");
    CHECK(q.type == KernelConfig::Type::quadratic);
    CHECK(q.needs_tau());
    CHECK(q.f1 == -0.5);
    CHECK(q.make(2.0).f(2.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(KernelConfig::parse("gaussian{}"), input_error);
    CHECK_THROWS_AS(KernelConfig::parse("gaussian{-1}"), input_error);
    CHECK_THROWS_AS(KernelConfig::parse("rbf{1}"), input_error);
    CHECK_THROWS_AS(KernelConfig::parse("quad{1,2}"), input_error);
}

TEST_CASE("config parsing and validation") {
    const ExperimentConfig cfg = ExperimentConfig::from_json_text(kTinyConfig);
    CHECK(cfg.dataset.is_builtin());
    CHECK(cfg.dataset.p == 48);
    CHECK(cfg.trials == 3);
    CHECK(cfg.alpha.mode == AlphaMode::fixed_value);
    CHECK_FALSE(cfg.config_hash.empty());

    SUBCASE("alpha variants") {
        auto with_alpha = [&](const std::string& alpha) {
            std::string text = kTinyConfig;
            const auto pos = text.find("{\"value\": -1.0}");
            text.replace(pos, std::string("{\"value\": -1.0}").size(), alpha);
            return ExperimentConfig::from_json_text(text);
        };
        CHECK(with_alpha("-0.5").alpha.mode == AlphaMode::fixed_value);
        CHECK(with_alpha("{\"beta\": 2.0}").alpha.mode == AlphaMode::beta_value);
        CHECK(with_alpha("\"algorithm1\"").alpha.mode == AlphaMode::algorithm1);
        CHECK(with_alpha("{\"grid\": [-1.0, -0.5]}").alpha.grid.size() == 2);
        CHECK_THROWS_AS(with_alpha("{\"grid\": []}"), input_error);
        CHECK_THROWS_AS(with_alpha("\"magic\""), input_error);
    }
    SUBCASE("bad JSON and bad layouts are input errors") {
        CHECK_THROWS_AS(ExperimentConfig::from_json_text("{nope"), input_error);
        CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({
            "dataset": {"builtin": "two_means", "p": 48},
            "layout": {"n_l": [4, 0], "n_u": [20, 20]},
            "kernel": "gaussian{1}"
        })"),
                        std::invalid_argument);
        CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({
            "dataset": {"builtin": "banana", "p": 48},
            "layout": {"n_l": [4, 4], "n_u": [20, 20]},
            "kernel": "gaussian{1}"
        })"),
                        std::invalid_argument);
    }
}

TEST_CASE("simulate runs are byte-identical across reruns and thread counts") {
    const fs::path base = fresh_dir("determinism");
    const std::string cfg_path = write_config(base, kTinyConfig);

    auto run_into = [&](const std::string& sub, int threads) {
        ExperimentConfig cfg = ExperimentConfig::from_json_file(cfg_path);
        cfg.out_dir = (base / sub).string();
        cfg.threads = threads;
        return cmd_simulate(cfg);
    };
    const auto files_a = run_into("a", 1);
    const auto files_b = run_into("b", 2);
    REQUIRE(files_a.size() == files_b.size());
    for (std::size_t i = 0; i < files_a.size(); ++i)
        CHECK(slurp(files_a[i]) == slurp(files_b[i]));

    // rerunning into the same directory leaves identical bytes
    const auto files_c = run_into("a", 2);
    for (std::size_t i = 0; i < files_a.size(); ++i)
        CHECK(slurp(files_a[i]) == slurp(files_c[i]));

    // stamped header carries the config hash and the seed
    const std::string scores = slurp(files_a[0]);
    CHECK(scores.find("config_hash=") != std::string::npos);
    CHECK(scores.find("seed=11") != std::string::npos);
}

TEST_CASE("simulate can drive alpha from the balance estimator") {
    const fs::path base = fresh_dir("algorithm1");
    const std::string cfg_path = write_config(base, R"({
      "dataset": {"builtin": "two_means", "p": 64},
      "layout": {"n_l": [9, 3], "n_u": [30, 30]},
      "kernel": "gaussian{1}",
      "alpha": "algorithm1",
      "trials": 1,
      "seed": 13
    })");
    ExperimentConfig cfg = ExperimentConfig::from_json_file(cfg_path);
    cfg.out_dir = (base / "out").string();
    const auto files = cmd_simulate(cfg);
    CHECK(fs::exists(base / "out" / "metrics_alpha_hat0.csv"));
    const std::string metrics_text = slurp(files[2]);
    // the alpha column records the estimated value, not the PageRank default
    CHECK(metrics_text.find("\n0,-1,") == std::string::npos);
}

TEST_CASE("sweep-alpha emits one row per grid point with a theory column") {
    const fs::path base = fresh_dir("sweep");
    const std::string cfg_path = write_config(base, R"({
      "dataset": {"builtin": "two_means", "p": 48},
      "layout": {"n_l": [4, 4], "n_u": [20, 20]},
      "kernel": "gaussian{1}",
      "alpha": {"grid": [-1.0]},
      "trials": 2,
      "seed": 3
    })");
    ExperimentConfig cfg = ExperimentConfig::from_json_file(cfg_path);
    cfg.out_dir = (base / "out").string();
    const auto files = cmd_sweep_alpha(cfg);
    REQUIRE(files.size() == 1);
    const std::string text = slurp(files[0]);
    // two comment lines + header + exactly one data row
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("alpha,empirical_accuracy") != std::string::npos);
}

TEST_CASE("tune on a balanced layout recovers alpha close to -1") {
    const fs::path base = fresh_dir("tune");
    const std::string cfg_path = write_config(base, R"({
      "dataset": {"builtin": "two_means", "p": 64},
      "layout": {"n_l": [6, 6], "n_u": [30, 30]},
      "kernel": "gaussian{1}",
      "trials": 2,
      "seed": 5
    })");
    ExperimentConfig cfg = ExperimentConfig::from_json_file(cfg_path);
    cfg.out_dir = (base / "out").string();
    const auto files = cmd_tune(cfg);
    REQUIRE(files.size() == 2);
    const std::string summary = slurp(files[1]);
    // balanced labels: the estimate is exactly beta = 0, alpha = -1
    CHECK(summary.find(",-1,") != std::string::npos);
}

TEST_CASE("expansion-check writes the decay table with a slope footer") {
    const fs::path base = fresh_dir("expansion");
    const std::string cfg_path = write_config(base, R"({
      "dataset": {"builtin": "two_means", "p": 48},
      "layout": {"n_l": [4, 4], "n_u": [20, 20]},
      "kernel": "gaussian{1}",
      "n_list": [64, 128],
      "expansion_seeds": 2,
      "seed": 9
    })");
    ExperimentConfig cfg = ExperimentConfig::from_json_file(cfg_path);
    cfg.out_dir = (base / "out").string();
    const auto files = cmd_expansion_check(cfg);
    REQUIRE(files.size() == 1);
    const std::string text = slurp(files[0]);
    CHECK(text.find("n,norm_Wn,norm_Wsqrt,norm_Wone,norm_residual") !=
          std::string::npos);
    CHECK(text.find("\n64,") != std::string::npos);
    CHECK(text.find("\n128,") != std::string::npos);
    CHECK(text.find("residual_loglog_slope=") != std::string::npos);
}

TEST_CASE("exit codes through the command line entry point") {
    const fs::path base = fresh_dir("exitcodes");
    SUBCASE("missing config file") {
        CHECK(run_cli({"simulate", "--config", (base / "nope.json").string()}) == 2);
    }
    SUBCASE("numeric failure maps to exit 3") {
        // constant negative kernel: every degree is negative
        const std::string cfg_path = write_config(base, R"({
          "dataset": {"builtin": "two_means", "p": 48},
          "layout": {"n_l": [4, 4], "n_u": [20, 20]},
          "kernel": "quad{-1,0,0}",
          "alpha": {"value": -1.0},
          "trials": 1,
          "seed": 2
        })");
        CHECK(run_cli({"simulate", "--config", cfg_path, "--out",
                       (base / "out").string()}) == 3);
    }
    SUBCASE("successful tiny run") {
        const std::string cfg_path = write_config(base, kTinyConfig);
        CHECK(run_cli({"simulate", "--config", cfg_path, "--out",
                       (base / "ok").string(), "--trials", "1"}) == 0);
        CHECK(fs::exists(base / "ok" / "scores_alpha_m1.csv"));
    }
    SUBCASE("unknown subcommand") {
        CHECK(run_cli({"frobnicate"}) == 2);
    }
}

TEST_CASE("mnist-prepare emits manifest and selection") {
    const fs::path base = fresh_dir("prepare");
    write_idx_pair(base, 30, false);
    std::ostringstream cfg_text;
    cfg_text << R"({
      "dataset": {"images": ")" << (base / "imgs").string()
             << R"(", "labels": ")" << (base / "labs").string()
             << R"(", "classes": [8, 9]},
      "layout": {"n_l": [2, 2], "n_u": [5, 5]},
      "kernel": "gaussian{1}",
      "seed": 4
    })";
    const std::string cfg_path = write_config(base, cfg_text.str());
    CHECK(run_cli({"mnist-prepare", "--config", cfg_path, "--out",
                   (base / "out").string()}) == 0);
    CHECK(fs::exists(base / "out" / "manifest.json"));
    CHECK(fs::exists(base / "out" / "selection.csv"));
    const std::string manifest = slurp(base / "out" / "manifest.json");
    CHECK(manifest.find("\"seed\": 4") != std::string::npos);

    SUBCASE("a class missing from the labels is a config error") {
        write_idx_pair(base, 30, true); // only label 8 present
        CHECK(run_cli({"mnist-prepare", "--config", cfg_path, "--out",
                       (base / "out2").string()}) == 2);
    }
}
