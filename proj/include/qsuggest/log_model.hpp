#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qsuggest {

using Timestamp = std::chrono::sys_seconds;

enum class EventType { kQuery, kClick };

struct LogEvent {
  std::string session_id;
  EventType type = EventType::kQuery;
  std::int64_t seq_id = 0;
  std::string content;  // query text or clicked document id
  Timestamp timestamp{};

  bool operator==(const LogEvent&) const = default;
};

/// Parses `YYYY-MM-DDTHH:MM:SSZ` (or an explicit `+hh:mm`/`-hh:mm` offset).
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Either an event or the reason the line was rejected.
struct LineParseResult {
  std::optional<LogEvent> event;
  std::string error;

  explicit operator bool() const { return event.has_value(); }
};

/// One tab-separated record: session_id, Q|C, seq_id, content, timestamp.
LineParseResult parse_log_line(std::string_view line);
std::string format_log_line(const LogEvent& event);

struct LogReadResult {
  std::vector<LogEvent> events;
  std::size_t lines_read = 0;
  std::size_t rejected = 0;
  /// "line N: reason" for the first few rejections.
  std::vector<std::string> rejections;
};

/// Reads a whole log. Blank lines and '#' comments are skipped; malformed
/// lines are counted and skipped.
LogReadResult read_log(std::istream& in);
void write_log(std::ostream& out, std::span<const LogEvent> events);

struct SearchSession {
  std::string session_id;
  std::vector<LogEvent> events;  // sorted by seq_id
  bool non_monotone_timestamps = false;

  std::size_t num_queries() const;
  std::size_t num_clicks() const;
  Timestamp start() const { return events.front().timestamp; }

  bool operator==(const SearchSession&) const = default;
};

/// Groups events by session id and orders each session by seq_id. Sessions are
/// ordered by (first timestamp, session id), so the result does not depend on
/// input order. Throws DataError on a duplicate (session_id, seq_id).
std::vector<SearchSession> assemble_sessions(std::vector<LogEvent> events);

/// Drops sessions with a single event.
std::vector<SearchSession> preprocess_sessions(std::vector<SearchSession> sessions);

struct QueryImpression {
  std::string session_id;
  std::size_t event_index = 0;  // index of the query event in the session
  std::int64_t seq_id = 0;
  std::string query_text;
  int position = 1;  // 1-based order of this query in the session
  Timestamp timestamp{};
  std::vector<std::string> prior_clicks;   // most recent first
  std::vector<std::string> prior_queries;  // most recent first, excludes this one

  std::string id() const;
};

/// One impression per query event, in session order.
std::vector<QueryImpression> query_impressions(const SearchSession& session);

/// The normalized next query after `impression` if at least one click follows
/// it before the subsequent query (or the end of the session).
std::optional<std::string> click_validated_refinement(const SearchSession& session,
                                                      const QueryImpression& impression);

struct LabeledImpression {
  QueryImpression impression;
  std::vector<std::string> suggestions;
  std::vector<int> labels;  // 1 = relevant
};

/// AutoEval labelling: a suggestion is positive iff it equals the
/// click-validated refinement after normalization. Returns nullopt when no
/// suggestion is positive or no refinement exists.
std::optional<LabeledImpression> label_suggestions(const SearchSession& session,
                                                   const QueryImpression& impression,
                                                   std::vector<std::string> suggestions);

struct LogStats {
  std::size_t sessions = 0;
  std::size_t events = 0;
  std::size_t queries = 0;
  std::size_t clicks = 0;
  double events_per_session = 0.0;
  double queries_per_session = 0.0;
  double clicks_per_session = 0.0;
};

LogStats compute_log_stats(std::span<const SearchSession> sessions);

/// Table layout with the usual row labels (#search sessions, #events, ...).
void write_log_stats(std::ostream& out, const LogStats& stats);

}  // namespace qsuggest
