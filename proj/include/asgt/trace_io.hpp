#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "asgt/protocol.hpp"
#include "asgt/scheduler.hpp"

namespace asgt {

// Line-delimited JSON, one record per event:
//   {"k":3,"agent":1,"delays":[[0,2],[2,0]]}
// Event dumps from a run add "gamma", "tau" (aligned with delays) and the
// post-event conservation "residual"; readers ignore fields they do not need.

void write_schedule_trace(std::ostream& out, std::span<const ScheduleEvent> trace);
std::vector<ScheduleEvent> read_schedule_trace(std::istream& in);
std::vector<ScheduleEvent> read_schedule_trace_file(const std::string& path);
void write_schedule_trace_file(const std::string& path, std::span<const ScheduleEvent> trace);

struct EventRecord {
  ScheduleEvent event;
  double gamma = 0.0;
  std::vector<Stamp> tau;
  double residual = 0.0;
};

void write_event_record(std::ostream& out, const ActivationRecord& record, double residual);
std::vector<EventRecord> read_event_records(std::istream& in);

}  // namespace asgt
