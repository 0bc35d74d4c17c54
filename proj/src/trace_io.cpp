#include "asgt/trace_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "asgt/error.hpp"

namespace asgt {

namespace {

using nlohmann::json;

json delays_json(const ScheduleEvent& e) {
  json delays = json::array();
  for (const auto& d : e.delays) delays.push_back({d.from, d.delay});
  return delays;
}

EventRecord parse_record(const std::string& line, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    EventRecord r;
    r.event.k = j.at("k").get<Stamp>();
    r.event.agent = j.at("agent").get<AgentId>();
    for (const auto& d : j.at("delays")) {
      r.event.delays.push_back({d.at(0).get<AgentId>(), d.at(1).get<std::size_t>()});
    }
    if (j.contains("gamma")) r.gamma = j["gamma"].get<double>();
    if (j.contains("tau")) r.tau = j["tau"].get<std::vector<Stamp>>();
    if (j.contains("residual")) r.residual = j["residual"].get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, "trace line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace

void write_schedule_trace(std::ostream& out, std::span<const ScheduleEvent> trace) {
  for (const auto& e : trace) {
    json j{{"k", e.k}, {"agent", e.agent}, {"delays", delays_json(e)}};
    out << j.dump() << '\n';
  }
}

std::vector<EventRecord> read_event_records(std::istream& in) {
  std::vector<EventRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_record(line, line_no));
  }
  return records;
}

std::vector<ScheduleEvent> read_schedule_trace(std::istream& in) {
  std::vector<ScheduleEvent> events;
  for (auto& r : read_event_records(in)) events.push_back(std::move(r.event));
  return events;
}

std::vector<ScheduleEvent> read_schedule_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse_error, "cannot open trace " + path);
  return read_schedule_trace(in);
}

void write_schedule_trace_file(const std::string& path, std::span<const ScheduleEvent> trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::invalid_argument, "cannot write trace " + path);
  write_schedule_trace(out, trace);
}

void write_event_record(std::ostream& out, const ActivationRecord& record, double residual) {
  json delays = json::array();
  json tau = json::array();
  for (const auto& r : record.reads) {
    delays.push_back({r.from, r.delay});
    tau.push_back(r.tau);
  }
  json j{{"k", record.k}, {"agent", record.agent}, {"delays", delays}, {"tau", tau}};
  j["gamma"] = record.gamma;
  j["residual"] = residual;
  out << j.dump() << '\n';
}

}  // namespace asgt
