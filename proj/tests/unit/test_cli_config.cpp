#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>

#include "ncmd/config.hpp"
#include "ncmd/experiments.hpp"
#include "ncmd/report.hpp"

using namespace ncmd;

namespace {

ConfigError config_error(const std::string& text, bool run = true) {
  try {
    const auto cfg = parse_config(text, "test.yaml");
    if (run) run_experiment(cfg, RunOptions{.validate_only = true});
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError for:\n" << text);
  return ConfigError("", 0, "", "");
}

// Replaces the top-level entry `key` (with any indented block under it).
std::string replace_line(std::string text, const std::string& key, const std::string& line) {
  std::istringstream in(text);
  std::string out, l;
  bool skipping = false;
  while (std::getline(in, l)) {
    if (skipping && !l.empty() && (l[0] == ' ' || l[0] == '-')) continue;
    skipping = false;
    if (l.rfind(key + ":", 0) == 0) {
      out += line + "\n";
      skipping = true;
    } else {
      out += l + "\n";
    }
  }
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ncmd-unit-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("nu outside (0,1) names the field and the constraint") {
    const auto text = replace_line(template_config("imm-md"), "nu", "nu: 1.5");
    const auto e = config_error(text);
    CHECK(e.field() == "nu");
    CHECK(e.line() == 4);
    const std::string msg = e.what();
    CHECK(msg.find("nu") != std::string::npos);
    CHECK(msg.find("(0,1)") != std::string::npos);
    CHECK(msg.find("test.yaml:4") != std::string::npos);
  }

  TEST_CASE("header diagnostics") {
    CHECK(config_error("id: a\nfamily: imm-ld\n").field() == "seed");
    CHECK(config_error("id: a\nfamily: imm-ld\nseed: -3\n").field() == "seed");
    CHECK(config_error("id: a\nfamily: imm-ld\nseed: 1.5\n").field() == "seed");
    CHECK(config_error("id: 'a b'\nfamily: imm-ld\nseed: 1\n").field() == "id");
    const auto unknown = config_error("id: a\nfamily: nope\nseed: 1\n");
    CHECK(unknown.field() == "family");
    CHECK(std::string(unknown.what()).find("imm-ld") != std::string::npos);
    CHECK(config_error("- 1\n- 2\n").line() >= 1);
    const auto syntax = config_error("id: a\nfamily: [imm-ld\nseed: 1\n");
    CHECK(syntax.line() > 0);
  }

  TEST_CASE("unknown and malformed family fields") {
    const auto base = template_config("poisson-inequality");
    const auto extra = config_error(base + "bogus: 3\n");
    CHECK(extra.field() == "bogus");
    CHECK(std::string(extra.what()).find("unknown field") != std::string::npos);
    CHECK(config_error(replace_line(base, "p", "p: 0")).field() == "p");
    CHECK(config_error(replace_line(base, "p", "p: abc")).field() == "p");
    CHECK(config_error(replace_line(base, "p", "p: .nan")).field() == "p");
    const auto weak = template_config("imm-weak");
    CHECK(config_error(replace_line(weak, "samples", "samples: 100")).field() == "samples");
    const auto nested = config_error(replace_line(template_config("levy-ld"), "clock", "clock: {kind: gamma, shape: -1, rate: 1}"));
    CHECK(nested.field() == "clock.shape");
  }

  TEST_CASE("seed override and output field") {
    const auto cfg = parse_config(template_config("poisson-inequality") + "output: some/dir\n");
    CHECK(cfg.output.value() == "some/dir");
    CHECK(cfg.seed == 20240101);
    const auto rep = run_experiment(cfg, RunOptions{.seed_override = 7});
    CHECK(rep.seed == 7);
    CHECK(parse_config("id: a\nfamily: imm-ld\nseed: 18446744073709551615\n").seed == 18446744073709551615ull);
  }
}

TEST_SUITE("experiments") {
  TEST_CASE("catalog lists the 17 families") {
    const std::set<std::string> want = {"imm-ld",          "imm-weak",          "imm-md",          "imm-explicit-cases",
                                        "levy-ld",         "levy-weak",         "levy-md",         "levy-inequality",
                                        "poisson-ld",      "poisson-weak",      "poisson-md",      "poisson-inequality",
                                        "contraction-ld",  "contraction-weak",  "contraction-md",  "logistic-example",
                                        "skew-example"};
    std::set<std::string> got;
    for (const auto& f : catalog()) {
      got.insert(f.id);
      CHECK_FALSE(f.summary.empty());
      CHECK_FALSE(f.statement.empty());
      CHECK_FALSE(f.required.empty());
    }
    CHECK(catalog().size() == 17);
    CHECK(got == want);
    REQUIRE(find_family("imm-md") != nullptr);
    CHECK(find_family("imm-md")->statement.find("with speed 1/a_t") != std::string::npos);
    CHECK(find_family("nope") == nullptr);
    CHECK_THROWS_AS(template_config("nope"), std::invalid_argument);
  }

  TEST_CASE("every template validates and lists its required fields") {
    for (const auto& f : catalog()) {
      CAPTURE(f.id);
      const auto text = template_config(f.id);
      const auto cfg = parse_config(text, f.id + ".yaml");
      CHECK(cfg.family == f.id);
      CHECK_NOTHROW(run_experiment(cfg, RunOptions{.validate_only = true}));
      for (const auto& r : f.required) {
        CAPTURE(r);
        CHECK(text.find("\n" + r + ":") != std::string::npos);
        const auto missing = replace_line(text, r, "");
        CHECK(config_error(missing).field().rfind(r, 0) == 0);
      }
    }
  }

  TEST_CASE("poisson-inequality table") {
    const auto rep = run_experiment(parse_config(template_config("poisson-inequality")));
    CHECK(rep.pass());
    const Table* rates = nullptr;
    for (const auto& t : rep.tables)
      if (t.name == "rates") rates = &t;
    REQUIRE(rates != nullptr);
    CHECK(rates->columns == std::vector<std::string>{"x", "I_LD", "I_MD", "diff"});
    REQUIRE(rates->rows.size() == 101);
    double min_diff = 1e300, at = -1.0;
    for (const auto& row : rates->rows) {
      const double d = std::get<double>(row[3]);
      if (d < min_diff) min_diff = d, at = std::get<double>(row[0]);
    }
    CHECK(std::abs(min_diff) <= 1e-9);
    CHECK(at == doctest::Approx(0.5));
  }

  TEST_CASE("skew example without skewness is the quadratic") {
    auto text = replace_line(template_config("skew-example"), "delta", "delta: [0]");
    const auto rep = run_experiment(parse_config(text));
    CHECK(rep.pass());
    bool saw_check = false;
    for (const auto& v : rep.verdicts) saw_check = saw_check || (v.check == "zero-skew-quadratic" && v.pass);
    CHECK(saw_check);
    for (const auto& t : rep.tables) {
      if (t.name != "rates") continue;
      const auto col = std::find(t.columns.begin(), t.columns.end(), "I_MD") - t.columns.begin();
      for (const auto& row : t.rows) {
        const double y = std::get<double>(row[0]);
        CHECK(std::get<double>(row[static_cast<std::size_t>(col)]) == doctest::Approx(0.5 * y * y).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("runs are deterministic and seeds are per check") {
    const auto cfg = parse_config(template_config("levy-weak"));
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    REQUIRE(a.tables.size() == b.tables.size());
    for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(to_csv(a.tables[i]) == to_csv(b.tables[i]));
    const auto c = run_experiment(cfg, RunOptions{.seed_override = 12345});
    bool differs = false;
    for (std::size_t i = 0; i < a.tables.size(); ++i) differs = differs || to_csv(a.tables[i]) != to_csv(c.tables[i]);
    CHECK(differs);
    CHECK(check_seed(1, "weak-limit") == check_seed(1, "weak-limit"));
    CHECK(check_seed(1, "weak-limit") != check_seed(1, "tail-decay"));
    CHECK(check_seed(1, "weak-limit") != check_seed(2, "weak-limit"));
  }

  TEST_CASE("a failing verdict is reported, not thrown") {
    auto text = replace_line(template_config("imm-md"), "tolerance", "tolerance: 1e-9");
    const auto rep = run_experiment(parse_config(text));
    CHECK_FALSE(rep.pass());
  }
}

TEST_SUITE("report") {
  TEST_CASE("number formatting") {
    CHECK(format_number(1e308 * 10) == "inf");
    CHECK(format_number(-1e308 * 10) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_cell(Cell{std::string("-")}) == "-");
  }

  TEST_CASE("csv layout") {
    Table t{"demo", {"x", "y"}, {}};
    t.add_row({1.5, std::string("a")});
    t.add_row({1e308 * 10, 2.0});
    CHECK(to_csv(t) == "x,y\n1.5,a\ninf,2\n");
    CHECK_THROWS(t.add_row({1.0}));
  }

  TEST_CASE("report files") {
    const auto rep = run_experiment(parse_config(template_config("poisson-inequality")));
    const auto dir = temp_dir("report");
    const auto paths = write_report(rep, dir);
    CHECK(std::filesystem::exists(dir / "poisson-inequality.report.json"));
    CHECK(std::filesystem::exists(dir / "poisson-inequality.rates.csv"));
    CHECK(paths.size() == 1 + rep.tables.size());
    const auto json = nlohmann::json::parse(slurp(dir / "poisson-inequality.report.json"));
    CHECK(json["id"] == "poisson-inequality");
    CHECK(json["family"] == "poisson-inequality");
    CHECK(json["pass"] == true);
    CHECK(json["config"]["p"] == "0.5");
    CHECK(json["verdicts"].size() == rep.verdicts.size());
    for (const auto& v : json["verdicts"]) CHECK_FALSE(v["table"].get<std::string>().empty());
    CHECK(json.contains("versions"));
    CHECK(json["timing"].contains("seconds"));
    const auto csv = slurp(dir / "poisson-inequality.rates.csv");
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.rfind("x,I_LD,I_MD,diff\n", 0) == 0);
    std::filesystem::remove_all(dir);
  }
}
