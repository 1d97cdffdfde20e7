#include <sstream>
#include <vector>

#include "doctest.h"
#include "rvol/cli.hpp"
#include "rvol/errors.hpp"

using namespace rvol;

namespace {

int dispatch(std::vector<const char*> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "rvol");
  std::ostringstream o, e;
  const int code = cli_dispatch(static_cast<int>(args.size()), args.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

ErrorKind kind_of(const std::string& text) {
  try {
    RunConfig::parse(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error");
  return ErrorKind::ConfigInvalid;
}

}  // namespace

TEST_CASE("config round trip and validation") {
  const std::string text =
      "# sweep\ncommand = signtable\nnmax = 6\nnmin=3   # inclusive\n\nperiods = 1.0, 2.5 ,3\ntol = 1e-6\n";
  RunConfig c = RunConfig::parse(text);
  CHECK(c.command == "signtable");
  CHECK(c.get_int("nmin", 0) == 3);
  CHECK(c.get_reals("periods", {}) == std::vector<double>{1.0, 2.5, 3.0});
  const std::string canon = c.canonical();
  CHECK(canon.find("nmin = 3\nnmax = 6\n") != std::string::npos);
  CHECK(canon.find("periods = 1,2.5,3  # [length]") != std::string::npos);
  RunConfig d = RunConfig::parse(canon);
  CHECK(d == c);
  CHECK(d.canonical() == canon);
  CHECK(d.hash() == c.hash());
  CHECK(c.hash().size() == 16);

  CHECK(kind_of("nmin = 3\nfoo = 1\n") == ErrorKind::ConfigInvalid);
  CHECK(kind_of("command = nope\n") == ErrorKind::UnknownCommand);
  CHECK(kind_of("n = 3.5\n") == ErrorKind::ConfigInvalid);
  CHECK(kind_of("n = 3\nn = 4\n") == ErrorKind::ConfigInvalid);
  CHECK(kind_of("tol = inf\n") == ErrorKind::ConfigInvalid);
  CHECK(kind_of("model sphere\n") == ErrorKind::ConfigInvalid);
  try {
    RunConfig::parse("n = 3\n\nfoo = 1\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("'foo'") != std::string::npos);
  }
}

TEST_CASE("records, CSV and reports") {
  RunConfig c = RunConfig::parse("command = vk\nmodel = sphere\nn = 5\nkmax = 5\n");
  ResultRecord r = run_command(c);
  REQUIRE(r.table_rows.size() == 6);
  for (int k = 0; k <= 5; ++k) {
    const double expected = std::pow(0.5, k) * (k == 0 ? 1 : k == 1 ? 5 : k == 2 ? 10 : k == 3 ? 10 : k == 4 ? 5 : 1);
    CHECK(r.table_rows[static_cast<std::size_t>(k)][1].get<double>() == doctest::Approx(expected).epsilon(1e-12));
  }
  // Payload and config hash reproduce exactly.
  ResultRecord r2 = run_command(c);
  CHECK(r.payload.dump() == r2.payload.dump());
  CHECK(r.config_hash == r2.config_hash);
  // JSON round trip.
  ResultRecord back = ResultRecord::from_json(nlohmann::ordered_json::parse(r.to_json().dump()));
  CHECK(back.to_json().dump() == r.to_json().dump());
  CHECK(r.csv().rfind("k,v_k,expected,direct,residual\n0,1,1,1,0\n", 0) == 0);

  const std::string a = emit_report({r});
  CHECK(a == emit_report({back}));
  CHECK(a.find("== Coefficients and tensors ==") != std::string::npos);
  CHECK(a.find("Sign tables") == std::string::npos);
  CHECK_THROWS_AS(emit_report({}), Error);

  // Long tables are downsampled to 200 rows, keeping the last.
  ResultRecord f;
  f.command = "flow";
  f.table_header = {"step"};
  for (int i = 0; i < 1000; ++i) f.table_rows.push_back({i});
  const std::string rep = emit_report({f});
  CHECK(rep.find("(200 of 1000 rows)") != std::string::npos);
  CHECK(rep.find("| 999 |") != std::string::npos);
  CHECK(rep.find("Flow histories") != std::string::npos);
}

TEST_CASE("dispatch exit codes") {
  std::string out, err;
  CHECK(dispatch({"vk", "--model", "sphere", "--n", "5", "--kmax", "5"}, &out) == 0);
  CHECK(nlohmann::json::parse(out)["payload"]["v"][5].get<double>() == doctest::Approx(1.0 / 32));
  CHECK(dispatch({"bogus"}, nullptr, &err) == 1);
  CHECK(err.find("UnknownCommand") != std::string::npos);
  CHECK(dispatch({"vk", "--n", "x"}, nullptr, &err) == 1);
  CHECK(err.find("ConfigInvalid") != std::string::npos);
  CHECK(dispatch({"hessian", "--model", "sphere", "--n", "4", "--k", "2"}) == 1);
  CHECK(dispatch({"rv", "--model", "hyperbolic", "--n", "4", "--geodcomp", "1"}) == 1);
  // A flow that cannot converge in the step budget is a numerical failure.
  CHECK(dispatch({"flow", "--max_steps", "3"}, &out, &err) == 2);
  CHECK(nlohmann::json::parse(out)["status"] == "NoConvergence");
  CHECK(dispatch({"rv", "--model", "hyperbolic4"}, &out) == 0);
  CHECK(nlohmann::json::parse(out)["payload"]["geodcomp"]["status"] == "PASS");
}
