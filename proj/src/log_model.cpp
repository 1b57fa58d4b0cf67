#include "qsuggest/log_model.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "qsuggest/error.hpp"
#include "qsuggest/text.hpp"

namespace qsuggest {

namespace {

constexpr std::size_t kMaxRecordedRejections = 20;

std::optional<int> parse_digits(std::string_view s) {
  int value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  if (text.size() < 20) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    return std::nullopt;
  }
  const auto y = parse_digits(text.substr(0, 4));
  const auto mo = parse_digits(text.substr(5, 2));
  const auto d = parse_digits(text.substr(8, 2));
  const auto h = parse_digits(text.substr(11, 2));
  const auto mi = parse_digits(text.substr(14, 2));
  const auto s = parse_digits(text.substr(17, 2));
  if (!y || !mo || !d || !h || !mi || !s) return std::nullopt;
  if (*h > 23 || *mi > 59 || *s > 60) return std::nullopt;
  const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;

  int offset_minutes = 0;
  const auto zone = text.substr(19);
  if (zone == "Z") {
    offset_minutes = 0;
  } else if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && zone[3] == ':') {
    const auto oh = parse_digits(zone.substr(1, 2));
    const auto om = parse_digits(zone.substr(4, 2));
    if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
    offset_minutes = (*oh * 60 + *om) * (zone[0] == '-' ? -1 : 1);
  } else {
    return std::nullopt;
  }
  const auto local = sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{*s};
  return time_point_cast<seconds>(local - minutes{offset_minutes});
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     hms.hours().count(), hms.minutes().count(), hms.seconds().count());
}

LineParseResult parse_log_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto fields = split_tabs(line);
  if (fields.size() != 5) {
    return {std::nullopt, fmt::format("expected 5 tab-separated fields, got {}", fields.size())};
  }
  LogEvent event;
  if (fields[0].empty()) return {std::nullopt, "empty session id"};
  event.session_id = std::string(fields[0]);

  if (fields[1] == "Q") {
    event.type = EventType::kQuery;
  } else if (fields[1] == "C") {
    event.type = EventType::kClick;
  } else {
    return {std::nullopt, fmt::format("unknown event code '{}'", fields[1])};
  }

  std::int64_t seq = 0;
  const auto* first = fields[2].data();
  const auto* last = first + fields[2].size();
  const auto [ptr, ec] = std::from_chars(first, last, seq);
  if (ec != std::errc{} || ptr != last) {
    return {std::nullopt, fmt::format("unparseable seq_id '{}'", fields[2])};
  }
  if (seq <= 0) return {std::nullopt, fmt::format("non-positive seq_id {}", seq)};
  event.seq_id = seq;

  if (fields[3].empty()) return {std::nullopt, "empty content"};
  event.content = std::string(fields[3]);

  const auto ts = parse_timestamp(fields[4]);
  if (!ts) return {std::nullopt, fmt::format("unparseable timestamp '{}'", fields[4])};
  event.timestamp = *ts;
  return {std::move(event), {}};
}

std::string format_log_line(const LogEvent& event) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", event.session_id,
                     event.type == EventType::kQuery ? "Q" : "C", event.seq_id,
                     event.content, format_timestamp(event.timestamp));
}

LogReadResult read_log(std::istream& in) {
  LogReadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    ++result.lines_read;
    auto parsed = parse_log_line(line);
    if (parsed) {
      result.events.push_back(std::move(*parsed.event));
    } else {
      ++result.rejected;
      if (result.rejections.size() < kMaxRecordedRejections) {
        result.rejections.push_back(fmt::format("line {}: {}", line_no, parsed.error));
      }
    }
  }
  return result;
}

void write_log(std::ostream& out, std::span<const LogEvent> events) {
  for (const auto& e : events) out << format_log_line(e) << '\n';
}

std::size_t SearchSession::num_queries() const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const LogEvent& e) {
    return e.type == EventType::kQuery;
  }));
}

std::size_t SearchSession::num_clicks() const { return events.size() - num_queries(); }

std::vector<SearchSession> assemble_sessions(std::vector<LogEvent> events) {
  std::map<std::string, SearchSession> by_id;
  for (auto& e : events) {
    auto& session = by_id[e.session_id];
    session.session_id = e.session_id;
    session.events.push_back(std::move(e));
  }
  std::vector<SearchSession> sessions;
  sessions.reserve(by_id.size());
  for (auto& [id, session] : by_id) {
    std::sort(session.events.begin(), session.events.end(),
              [](const LogEvent& a, const LogEvent& b) { return a.seq_id < b.seq_id; });
    for (std::size_t i = 1; i < session.events.size(); ++i) {
      if (session.events[i].seq_id == session.events[i - 1].seq_id) {
        throw DataError(fmt::format("duplicate event (session '{}', seq_id {})", id,
                                    session.events[i].seq_id));
      }
      if (session.events[i].timestamp < session.events[i - 1].timestamp) {
        session.non_monotone_timestamps = true;
      }
    }
    sessions.push_back(std::move(session));
  }
  std::sort(sessions.begin(), sessions.end(), [](const SearchSession& a, const SearchSession& b) {
    if (a.start() != b.start()) return a.start() < b.start();
    return a.session_id < b.session_id;
  });
  return sessions;
}

std::vector<SearchSession> preprocess_sessions(std::vector<SearchSession> sessions) {
  std::erase_if(sessions, [](const SearchSession& s) { return s.events.size() == 1; });
  return sessions;
}

std::string QueryImpression::id() const { return fmt::format("{}#{}", session_id, seq_id); }

std::vector<QueryImpression> query_impressions(const SearchSession& session) {
  std::vector<QueryImpression> out;
  std::vector<std::string> clicks;   // chronological
  std::vector<std::string> queries;  // chronological
  for (std::size_t i = 0; i < session.events.size(); ++i) {
    const auto& e = session.events[i];
    if (e.type == EventType::kClick) {
      clicks.push_back(e.content);
      continue;
    }
    QueryImpression imp;
    imp.session_id = session.session_id;
    imp.event_index = i;
    imp.seq_id = e.seq_id;
    imp.query_text = e.content;
    imp.position = static_cast<int>(queries.size()) + 1;
    imp.timestamp = e.timestamp;
    imp.prior_clicks.assign(clicks.rbegin(), clicks.rend());
    imp.prior_queries.assign(queries.rbegin(), queries.rend());
    out.push_back(std::move(imp));
    queries.push_back(e.content);
  }
  return out;
}

std::optional<std::string> click_validated_refinement(const SearchSession& session,
                                                      const QueryImpression& impression) {
  const auto& events = session.events;
  std::size_t i = impression.event_index + 1;
  while (i < events.size() && events[i].type != EventType::kQuery) ++i;
  if (i >= events.size()) return std::nullopt;
  const std::size_t next_query = i;
  for (std::size_t j = next_query + 1; j < events.size(); ++j) {
    if (events[j].type == EventType::kQuery) break;
    return normalize_query(events[next_query].content);
  }
  return std::nullopt;
}

std::optional<LabeledImpression> label_suggestions(const SearchSession& session,
                                                   const QueryImpression& impression,
                                                   std::vector<std::string> suggestions) {
  if (impression.session_id != session.session_id) {
    throw std::invalid_argument("impression does not belong to session");
  }
  if (suggestions.empty()) throw std::invalid_argument("empty suggestion list");
  const auto refinement = click_validated_refinement(session, impression);
  if (!refinement || refinement->empty()) return std::nullopt;

  LabeledImpression labeled;
  labeled.impression = impression;
  labeled.labels.reserve(suggestions.size());
  bool any_positive = false;
  for (const auto& s : suggestions) {
    const bool positive = normalize_query(s) == *refinement;
    labeled.labels.push_back(positive ? 1 : 0);
    any_positive = any_positive || positive;
  }
  if (!any_positive) return std::nullopt;
  labeled.suggestions = std::move(suggestions);
  return labeled;
}

LogStats compute_log_stats(std::span<const SearchSession> sessions) {
  LogStats stats;
  stats.sessions = sessions.size();
  for (const auto& s : sessions) {
    stats.events += s.events.size();
    stats.queries += s.num_queries();
  }
  stats.clicks = stats.events - stats.queries;
  if (stats.sessions > 0) {
    const auto n = static_cast<double>(stats.sessions);
    stats.events_per_session = static_cast<double>(stats.events) / n;
    stats.queries_per_session = static_cast<double>(stats.queries) / n;
    stats.clicks_per_session = static_cast<double>(stats.clicks) / n;
  }
  return stats;
}

void write_log_stats(std::ostream& out, const LogStats& stats) {
  out << fmt::format("{:<20}{:>12}\n", "Item", "Total");
  out << fmt::format("{:<20}{:>12}\n", "#search sessions", stats.sessions);
  out << fmt::format("{:<20}{:>12}\n", "#events", stats.events);
  out << fmt::format("{:<20}{:>12.2f}\n", "#events/session", stats.events_per_session);
  out << fmt::format("{:<20}{:>12}\n", "#queries", stats.queries);
  out << fmt::format("{:<20}{:>12.2f}\n", "#query/session", stats.queries_per_session);
  out << fmt::format("{:<20}{:>12}\n", "#clicked url", stats.clicks);
  out << fmt::format("{:<20}{:>12.2f}\n", "#clicks/session", stats.clicks_per_session);
}

}  // namespace qsuggest
