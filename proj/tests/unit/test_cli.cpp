#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ssd/cli/commands.hpp"
#include "ssd/cli/config.hpp"
#include "ssd/cli/dump.hpp"
#include "ssd/cli/report.hpp"
#include "ssd/decode.hpp"
#include "ssd/toyfsm.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ssd;
using namespace ssd::cli;
using testing::error_of;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome lab(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const char* env = std::getenv("SSD_TMP");
  fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "ssd_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string header(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  REQUIRE(it != t.columns.end());
  return static_cast<std::size_t>(it - t.columns.begin());
}

double number(const Table& t, std::size_t row, const std::string& name) {
  const Cell& c = t.rows[row][column(t, name)];
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  return std::get<double>(c);
}

}  // namespace

TEST_CASE("documented schemas") {
  CHECK(header(lab({"toy-sweep", "--t-grid", "0.5,1"}).out) == "temperature,top_p,teacher_success,student_success,gap");
  CHECK(header(lab({"decompose", "--probs", "0.5,0.5"}).out) ==
        "step,total,gate,reshape,align,on_support_tv,off_support_mass");
  CHECK(header(lab({"train-student", "--probs", "0.5,0.5"}).out) ==
        "step,total,gate,reshape,align,on_support_tv,off_support_mass");

  const fs::path dump = scratch() / "schema.jsonl";
  write(dump, R"({"context_id": "a", "probs": [0.5, 0.5], "label": "fork"})"
              "\n");
  CHECK(header(lab({"analyze-dump", "--dump", dump.string()}).out) ==
        "context_id,label,kept_count,kept_mass,head_entropy,total_entropy,top20_mass");
}

TEST_CASE("json output carries the same keys") {
  const Outcome r = lab({"toy-sweep", "--t-grid", "0.5,1", "--format", "json"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::ordered_json::parse(r.out);
  REQUIRE(j.size() == 2);
  std::vector<std::string> keys;
  for (auto it = j[0].begin(); it != j[0].end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"temperature", "top_p", "teacher_success", "student_success", "gap"});
}

TEST_CASE("empty reports are refused and nothing is written") {
  const fs::path target = scratch() / "empty.csv";
  fs::remove(target);
  CHECK(error_of([&] { emit_report(Table{kSweepColumns, {}}, Format::Csv, target.string()); }) ==
        ErrorCode::EmptyReport);
  CHECK_FALSE(fs::exists(target));
}

TEST_CASE("csv round trip") {
  // Sweep rows hold probabilities and short grid values, so nine significant
  // digits reproduce them within 1e-9.
  const toy::Fsm teacher = toy::build_toy_fsm();
  const toy::Fsm student = toy::distill_fsm(teacher, toy::kTrainTemperature, toy::kTrainTopP);
  std::vector<double> grid;
  for (int i = 0; i < 60; ++i) grid.push_back(0.05 + 0.05 * i);
  Table source{kSweepColumns, {}};
  for (const toy::SweepRow& r : toy::temperature_sweep(teacher, student, grid, 0.8)) {
    source.rows.push_back({r.temperature, r.top_p, r.teacher_success, r.student_success, r.gap});
  }
  const Table parsed = parse_csv(render(source, Format::Csv));
  CHECK(parsed.columns == source.columns);
  REQUIRE(parsed.rows.size() == source.rows.size());
  for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
    for (std::size_t c = 0; c < source.columns.size(); ++c) {
      CHECK(std::abs(std::get<double>(parsed.rows[i][c]) - std::get<double>(source.rows[i][c])) <= 1e-9);
    }
  }

  // In general the text keeps nine significant digits: relative error <= 5e-9.
  testing::Rng rng(61);
  Table wide{{"x", "label"}, {}};
  for (int i = 0; i < 500; ++i) {
    wide.rows.push_back({std::exp(testing::uniform(rng, -30.0, 30.0)) * (i % 2 ? 1 : -1), std::string("a,\"b\"")});
  }
  const Table back = parse_csv(render(wide, Format::Csv));
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    const double x = std::get<double>(wide.rows[i][0]);
    CHECK(std::abs(std::get<double>(back.rows[i][0]) - x) <= 5e-9 * std::abs(x));
    CHECK(std::get<std::string>(back.rows[i][1]) == "a,\"b\"");
  }
}

TEST_CASE("dump ingestion") {
  const fs::path dir = scratch();

  std::string uniform = R"({"context_id": "u", "probs": [)";
  for (int i = 0; i < 16; ++i) uniform += std::string(i ? "," : "") + "0.0625";
  uniform += "]}\n";
  write(dir / "uniform.jsonl", uniform);
  const DumpLoad u = ingest_dump((dir / "uniform.jsonl").string());
  REQUIRE(u.records.size() == 1);
  CHECK(entropy(u.records[0].probs) == doctest::Approx(std::log(16.0)).epsilon(1e-14));
  CHECK_FALSE(u.records[0].label.has_value());

  std::istringstream logits(R"({"context_id": "l", "logits": [0, 0], "label": "lock"})");
  const DumpLoad l = parse_dump(logits);
  REQUIRE(l.records.size() == 1);
  CHECK(l.records[0].probs.vector() == std::vector<double>{0.5, 0.5});
  CHECK(l.records[0].label == "lock");

  const std::string bad = R"({"context_id": "ok", "probs": [0.5, 0.5]})"
                          "\n"
                          R"({"context_id": "neg", "probs": [1.5, -0.5]})"
                          "\n\n"
                          R"({"context_id": "sum", "probs": [0.5, 0.6]})"
                          "\n"
                          "not json\n";
  try {
    std::istringstream in(bad);
    parse_dump(in);
    FAIL("strict mode accepted malformed lines");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("line 4") != std::string::npos);
    CHECK(what.find("line 5") != std::string::npos);
  }
  {
    std::istringstream in(R"({"context_id": "sum", "probs": [0.5, 0.6]})");
    CHECK(error_of([&] { parse_dump(in); }) == ErrorCode::InvalidDistribution);
  }
  std::istringstream lenient(bad);
  const DumpLoad skipped = parse_dump(lenient, true);
  CHECK(skipped.records.size() == 1);
  REQUIRE(skipped.skipped.size() == 3);
  CHECK(skipped.skipped[0].line == 2);
  CHECK(skipped.skipped[1].line == 4);
  CHECK(skipped.skipped[2].line == 5);

  CHECK(error_of([&] { ingest_dump((dir / "missing.jsonl").string()); }) == ErrorCode::FileNotFound);
}

TEST_CASE("dump analysis matches direct computation") {
  testing::Rng rng(62);
  std::ostringstream text;
  std::vector<Categorical> ps;
  for (int i = 0; i < 50; ++i) {
    const Categorical p = testing::random_categorical(rng, testing::pick(rng, 1, 40), 0.1);
    ps.push_back(p);
    nlohmann::json j;
    j["context_id"] = "ctx" + std::to_string(i);
    j["probs"] = p.vector();
    if (i % 3 == 0) j["label"] = "fork";
    text << j.dump() << '\n';
  }
  std::istringstream in(text.str());
  const DumpLoad load = parse_dump(in);
  const DecodeConfig cfg{0.8, 10, 0.9};
  const Table t = dump_table(load.records, cfg);
  REQUIRE(t.rows.size() == ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const RetainedSupport rs = retained_support(load.records[i].probs, cfg);
    CHECK(std::get<std::string>(t.rows[i][column(t, "context_id")]) == "ctx" + std::to_string(i));
    CHECK(number(t, i, "kept_count") == static_cast<double>(rs.support.size()));
    CHECK(std::abs(number(t, i, "kept_mass") - mass(ps[i], rs.support)) <= 1e-12);
    CHECK(std::abs(number(t, i, "head_entropy") - entropy(restrict(temper(ps[i], 0.8), rs.support))) <= 1e-12);
    CHECK(std::abs(number(t, i, "total_entropy") - entropy(ps[i])) <= 1e-12);
    std::vector<double> s = ps[i].vector();
    std::sort(s.rbegin(), s.rend());
    double top = 0.0;
    for (std::size_t k = 0; k < std::min<std::size_t>(20, s.size()); ++k) top += s[k];
    CHECK(std::abs(number(t, i, "top20_mass") - std::min(top, 1.0)) <= 1e-12);
  }
}

TEST_CASE("documented command examples") {
  const fs::path out = scratch() / "teacher_opt.csv";
  REQUIRE(lab({"toy-optimize", "--role", "teacher", "--top-p", "0.80", "--output", out.string()}).code == 0);
  const Table opt = parse_csv(slurp(out));
  REQUIRE(opt.rows.size() == 1);
  CHECK(std::abs(number(opt, 0, "t_star") - 0.639) <= 0.01);
  CHECK(std::abs(number(opt, 0, "p_star") - 0.0832) <= 0.001);

  const Table fixed = parse_csv(lab({"decompose", "--archetype", "fork"}).out);
  CHECK(number(fixed, 0, "gate") == 0.0);
  CHECK(number(fixed, 0, "reshape") == 0.0);
  CHECK(number(fixed, 0, "align") == 0.0);

  const Table grid = parse_csv(lab({"toy-grid", "--top-p", "0.65,0.70,0.75,0.80,0.85,0.90"}).out);
  REQUIRE(grid.rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(number(grid, i, "gap_pp") >= 1.2);
    CHECK(number(grid, i, "gap_pp") <= 5.6);
  }
}

TEST_CASE("exit codes") {
  const fs::path out = scratch() / "never.csv";
  fs::remove(out);
  const std::vector<std::vector<std::string>> usage = {
      {},
      {"no-such-command"},
      {"decode", "--probs", "0.5,0.5", "--temperature", "0"},
      {"decode", "--probs", "0.5,0.5", "--temperature", "-1"},
      {"decode", "--probs", "0.5,0.5", "--top-p", "0"},
      {"decode", "--probs", "0.5,0.5", "--top-p", "1.5"},
      {"decode", "--probs", "0.5,0.5", "--top-k", "-1"},
      {"decode", "--probs", "0.5,0.6"},
      {"decode", "--probs", "0.5,0.5", "--logits", "0,0"},
      {"decode", "--probs", "0.5,0.5", "--unknown", "1"},
      {"decode", "--probs", "0.5,0.5", "--format", "xml"},
      {"decode", "--probs", "0.5,0.5", "--order", "temper,top_k"},
      {"toy-sweep", "--t-grid", "0:0.1:1"},
      {"toy-optimize", "--t-lo", "2", "--t-hi", "1"},
      {"toy-mc", "--n", "0"},
      {"toy-mc", "--role", "nobody"},
      {"analyze-dump"},
      {"analyze-dump", "--dump", (scratch() / "missing.jsonl").string()},
      {"decode", "--probs", "0.5,0.5", "--config", (scratch() / "missing.cfg").string()},
  };
  for (std::vector<std::string> args : usage) {
    args.push_back("--output=" + out.string());
    const Outcome r = lab(args);
    const std::string shown = args.size() > 1 ? args[0] + " " + args[1] : "(none)";
    CHECK_MESSAGE(r.code == kExitUsage, shown);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(out));
  }

  // The retained support {0} carries no student mass: a computation failure.
  CHECK(lab({"decompose", "--probs", "0.6,0.4", "--top-k", "1", "--student-probs", "0,1"}).code == kExitCompute);
  CHECK(lab({"decode", "--probs", "0.5,0.5", "--output", "/nonexistent-dir/x.csv"}).code == kExitCompute);
  CHECK(lab({"decode", "--help"}).code == kExitOk);
}

TEST_CASE("config files with flags taking precedence") {
  const fs::path cfg = scratch() / "decode.cfg";
  write(cfg, "# decode settings\ntemperature = 0.5\ntop_p=0.9\n\nprobs = 0.5,0.3,0.2\n");
  const Outcome from_file = lab({"decode", "--config", cfg.string()});
  const Outcome explicit_flags = lab({"decode", "--probs", "0.5,0.3,0.2", "--temperature", "0.5", "--top-p", "0.9"});
  REQUIRE(from_file.code == 0);
  CHECK(from_file.out == explicit_flags.out);

  const Outcome overridden = lab({"decode", "--config=" + cfg.string(), "--temperature", "2"});
  const Outcome direct = lab({"decode", "--probs", "0.5,0.3,0.2", "--temperature", "2", "--top-p", "0.9"});
  CHECK(overridden.out == direct.out);
  CHECK(overridden.out != from_file.out);

  write(cfg, "temperature = 0.5\nbogus_key = 3\nprobs = 0.5,0.5\n");
  CHECK(lab({"decode", "--config", cfg.string()}).code == kExitUsage);
  write(cfg, "temperature 0.5\n");
  CHECK(lab({"decode", "--config", cfg.string()}).code == kExitUsage);
  CHECK(error_of([] { parse_config("a = 1\nbroken\n"); }) == ErrorCode::ParseError);
  CHECK(parse_config("top_p = 0.8\n# c\n").at("top-p") == "0.8");
}

TEST_CASE("identical inputs give byte-identical files") {
  const fs::path dir = scratch();
  const std::vector<std::vector<std::string>> runs = {
      {"toy-mc", "--n", "20000", "--seed", "7", "--threads", "1"},
      {"decode", "--archetype", "fork", "--temperature", "0.9", "--top-p", "0.85", "--samples", "50000", "--seed", "3"},
      {"toy-sweep", "--t-grid", "0.2:0.2:3", "--format", "json"},
      {"sensitivity", "--archetype", "lock", "--mode", "prefix"},
  };
  int idx = 0;
  for (const auto& base : runs) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path path = dir / ("det" + std::to_string(idx) + "_" + std::to_string(rep) + ".out");
      std::vector<std::string> args = base;
      args.push_back("--output");
      args.push_back(path.string());
      REQUIRE(lab(args).code == 0);
      if (rep == 0) first = slurp(path);
      else CHECK(slurp(path) == first);
    }
    CHECK_FALSE(first.empty());
    ++idx;
  }
  // Thread count does not change Monte Carlo output.
  CHECK(lab({"toy-mc", "--n", "20000", "--seed", "7", "--threads", "1"}).out ==
        lab({"toy-mc", "--n", "20000", "--seed", "7", "--threads", "4"}).out);
}

TEST_CASE("executable end to end") {
  const char* exe = std::getenv("SSD_LAB");
  if (!exe) {
    MESSAGE("SSD_LAB not set; skipping the process-level check");
    return;
  }
  const fs::path dir = scratch();
  const fs::path cfg = dir / "sweep.cfg";
  write(cfg, "t_grid = 0.5:0.25:2.5\ntop_p = 0.8\n");
  for (int rep = 0; rep < 2; ++rep) {
    const std::string cmd = std::string(exe) + " toy-sweep --config " + cfg.string() + " --output " +
                            (dir / ("exe" + std::to_string(rep) + ".csv")).string();
    CHECK(std::system(cmd.c_str()) == 0);
  }
  CHECK(slurp(dir / "exe0.csv") == slurp(dir / "exe1.csv"));
  CHECK(header(slurp(dir / "exe0.csv")) == "temperature,top_p,teacher_success,student_success,gap");
  const std::string bad = std::string(exe) + " decode --probs 0.5,0.5 --temperature 0 2>/dev/null";
  const int status = std::system(bad.c_str());
  CHECK(WEXITSTATUS(status) == 1);
}
