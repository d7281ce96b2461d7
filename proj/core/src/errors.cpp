#include "msa/errors.hpp"

#include <iostream>
#include <mutex>

#include "msa/types.hpp"

namespace msa {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler handler = [](std::string_view message) {
    std::cerr << "msa: warning: " << message << '\n';
  };
  return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

std::string_view to_string(Task task) {
  return task == Task::regression ? "regression" : "classification";
}

Task parse_task(std::string_view name) {
  if (name == "regression") return Task::regression;
  if (name == "classification") return Task::classification;
  throw ValidationError("unknown task '" + std::string(name) +
                        "' (expected regression or classification)");
}

}  // namespace msa
