#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "asgt/trace_io.hpp"
#include "helpers.hpp"

using namespace asgt;
using asgt::testing::thrown_kind;

TEST_SUITE("trace_io") {
  TEST_CASE("schedule traces round-trip through text and files") {
    const Digraph g = generate_ring_plus_random(5, 2, 1);
    const auto trace = generate_trace(g, {ActivationMode::random_coverage, 10, 2, {}}, {DelayMode::uniform, 3, 2}, 500);
    std::stringstream buffer;
    write_schedule_trace(buffer, trace);
    CHECK(read_schedule_trace(buffer) == trace);

    const auto path = (std::filesystem::temp_directory_path() / "asgt_trace_test.jsonl").string();
    write_schedule_trace_file(path, trace);
    CHECK(read_schedule_trace_file(path) == trace);
    std::filesystem::remove(path);
  }

  TEST_CASE("line format") {
    const std::vector<ScheduleEvent> one{{3, 1, {{0, 2}, {2, 0}}}};
    std::ostringstream out;
    write_schedule_trace(out, one);
    CHECK(out.str() == "{\"agent\":1,\"delays\":[[0,2],[2,0]],\"k\":3}\n");
  }

  TEST_CASE("event records carry stamps, step and residual") {
    const ActivationRecord r{7, 2, 0.25, {{0, 1, 5}, {1, 0, 7}}};
    std::stringstream buffer;
    write_event_record(buffer, r, 1.5e-15);
    const auto records = read_event_records(buffer);
    REQUIRE(records.size() == 1);
    CHECK(records[0].event == ScheduleEvent{7, 2, {{0, 1}, {1, 0}}});
    CHECK(records[0].gamma == 0.25);
    CHECK(records[0].tau == std::vector<Stamp>{5, 7});
    CHECK(records[0].residual == 1.5e-15);
  }

  TEST_CASE("blank lines are skipped; malformed lines name their position") {
    std::istringstream ok("{\"k\":0,\"agent\":0,\"delays\":[]}\n\n");
    CHECK(read_schedule_trace(ok).size() == 1);
    std::istringstream bad("{\"k\":0,\"agent\":0,\"delays\":[]}\n{\"k\":1}\n");
    try {
      read_schedule_trace(bad);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::parse_error);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(thrown_kind([] { read_schedule_trace_file("/nonexistent/trace.jsonl"); }) == ErrorKind::parse_error);
  }
}
