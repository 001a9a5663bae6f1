#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "spectralopt/config.hpp"

using spectralopt::config::Config;
using spectralopt::config::ConfigError;

namespace {

Config parse_text(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.ini");
}

// Returns the error text of a call expected to throw ConfigError.
template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected a ConfigError");
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("sections, comments and whitespace") {
  Config cfg = parse_text(
      "# leading comment\n"
      "\n"
      "[run]\n"
      "  seed = 42   # inline comment\n"
      "name= sweep\n"
      "[ verify ]\n"
      "tol =1e-9\n");
  CHECK(cfg.get_int("run", "seed", 0) == 42);
  CHECK(cfg.get_string("run", "name", "") == "sweep");
  CHECK(cfg.get_double("verify", "tol", 0.0) == 1e-9);
  CHECK_NOTHROW(cfg.reject_unknown());
}

TEST_CASE("getters fall back to defaults for absent keys") {
  Config cfg = parse_text("[run]\nseed = 1\n");
  CHECK(cfg.get_int("run", "absent", 7) == 7);
  CHECK(cfg.get_double("run", "absent", 2.5) == 2.5);
  CHECK(cfg.get_bool("run", "absent", true) == true);
  CHECK(cfg.get_string("other", "absent", "dflt") == "dflt");
  CHECK(cfg.get_double_list("run", "absent", {1.0}) == std::vector<double>{1.0});
  CHECK(cfg.has("run", "seed"));
  CHECK_FALSE(cfg.has("run", "absent"));
}

TEST_CASE("boolean token forms") {
  Config cfg = parse_text(
      "[f]\na=true\nb=1\nc=yes\nd=on\ne=false\nf=0\ng=no\nh=off\nbad=maybe\n");
  for (const char* key : {"a", "b", "c", "d"}) CHECK(cfg.get_bool("f", key, false));
  for (const char* key : {"e", "f", "g", "h"}) CHECK_FALSE(cfg.get_bool("f", key, true));
  const std::string err = error_of([&] { cfg.get_bool("f", "bad", false); });
  CHECK(err.find("expected a boolean") != std::string::npos);
  CHECK(err.find("maybe") != std::string::npos);
}

TEST_CASE("malformed numbers name the origin and key") {
  Config cfg = parse_text("[run]\nseed = 12px\neta = fast\n");
  const std::string ierr = error_of([&] { cfg.get_int("run", "seed", 0); });
  CHECK(ierr.find("test.ini") != std::string::npos);
  CHECK(ierr.find("seed") != std::string::npos);
  const std::string derr = error_of([&] { cfg.get_double("run", "eta", 0.0); });
  CHECK(derr.find("eta") != std::string::npos);
  CHECK(derr.find("fast") != std::string::npos);
}

TEST_CASE("numeric and shape lists") {
  Config cfg = parse_text(
      "[sweep]\n"
      "etas = 0.5, 0.25 ,0.125\n"
      "seeds = 1,2,3\n"
      "none =\n"
      "sizes = 2x2, 4x6 ,8x8\n"
      "badsize = 2x2,oops\n");
  CHECK(cfg.get_double_list("sweep", "etas", {}) ==
        std::vector<double>{0.5, 0.25, 0.125});
  CHECK(cfg.get_int_list("sweep", "seeds", {}) == std::vector<int>{1, 2, 3});
  CHECK(cfg.get_double_list("sweep", "none", {9.0}).empty());
  auto sizes = cfg.get_size_list("sweep", "sizes", {});
  REQUIRE(sizes.size() == 3);
  CHECK(sizes[0] == std::pair<int, int>{2, 2});
  CHECK(sizes[1] == std::pair<int, int>{4, 6});
  CHECK(sizes[2] == std::pair<int, int>{8, 8});
  const std::string err = error_of([&] { cfg.get_size_list("sweep", "badsize", {}); });
  CHECK(err.find("RxC") != std::string::npos);
}

TEST_CASE("parse errors carry line numbers") {
  const std::string dup = error_of([] {
    parse_text("[a]\nk = 1\nk = 2\n");
  });
  CHECK(dup.find("test.ini:3") != std::string::npos);
  CHECK(dup.find("duplicate key 'a.k'") != std::string::npos);

  const std::string early = error_of([] { parse_text("k = 1\n"); });
  CHECK(early.find("before any [section]") != std::string::npos);

  const std::string noeq = error_of([] { parse_text("[a]\njust words\n"); });
  CHECK(noeq.find("expected key = value") != std::string::npos);

  const std::string unterminated = error_of([] { parse_text("[a\n"); });
  CHECK(unterminated.find("unterminated") != std::string::npos);

  const std::string empty_section = error_of([] { parse_text("[ ]\nk=1\n"); });
  CHECK(empty_section.find("empty section") != std::string::npos);

  const std::string empty_key = error_of([] { parse_text("[a]\n= 1\n"); });
  CHECK(empty_key.find("empty key") != std::string::npos);
}

TEST_CASE("strict checking names stray keys") {
  Config cfg = parse_text("[run]\nseed = 1\ntypo_key = 2\n");
  CHECK(cfg.get_int("run", "seed", 0) == 1);
  const std::string err = error_of([&] { cfg.reject_unknown(); });
  CHECK(err.find("unknown config key 'run.typo_key'") != std::string::npos);

  // consuming the key clears the complaint
  CHECK(cfg.get_int("run", "typo_key", 0) == 2);
  CHECK_NOTHROW(cfg.reject_unknown());
}

TEST_CASE("missing config files are reported by path") {
  const std::string err =
      error_of([] { Config::parse_file("/nonexistent/path.ini"); });
  CHECK(err.find("cannot open config file") != std::string::npos);
  CHECK(err.find("/nonexistent/path.ini") != std::string::npos);
}

TEST_CASE("default-constructed config serves only defaults") {
  Config cfg;
  CHECK(cfg.get_int("any", "key", 3) == 3);
  CHECK_NOTHROW(cfg.reject_unknown());
}

}  // TEST_SUITE
