#include "greenrec/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace greenrec {

std::string to_string(Feedback f) {
    return f == Feedback::Explicit ? "explicit" : "implicit";
}

Feedback feedback_from_string(std::string_view s) {
    if (s == "explicit" || s == "Explicit") return Feedback::Explicit;
    if (s == "implicit" || s == "Implicit") return Feedback::Implicit;
    throw ConfigError("unknown feedback type '" + std::string(s) + "'");
}

std::uint32_t IdIndex::intern(std::string_view id) {
    auto it = lookup_.find(std::string(id));
    if (it != lookup_.end()) return it->second;
    auto index = static_cast<std::uint32_t>(ids_.size());
    ids_.emplace_back(id);
    lookup_.emplace(ids_.back(), index);
    return index;
}

std::optional<std::uint32_t> IdIndex::find(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

Dataset::Dataset(std::string name, Feedback feedback)
    : name_(std::move(name)), feedback_(feedback) {}

void Dataset::add(std::string_view user, std::string_view item,
                  std::optional<double> rating,
                  std::optional<std::int64_t> timestamp) {
    if (user.empty() || item.empty())
        throw ConfigError("user and item ids must be non-empty");
    if (feedback_ == Feedback::Implicit && rating)
        throw ConfigError("implicit dataset cannot carry ratings");
    if (rating && !std::isfinite(*rating))
        throw ConfigError("rating must be finite");
    Interaction row;
    row.user = users_.intern(user);
    row.item = items_.intern(item);
    row.rating = rating;
    row.timestamp = timestamp;
    rows_.push_back(row);
}

Dataset Dataset::from_subset(const Dataset& source,
                             const std::vector<Interaction>& rows) {
    Dataset out(source.name_, source.feedback_);
    out.rows_.reserve(rows.size());
    for (const auto& r : rows) {
        Interaction copy = r;
        copy.user = out.users_.intern(source.users_.id(r.user));
        copy.item = out.items_.intern(source.items_.id(r.item));
        out.rows_.push_back(copy);
    }
    return out;
}

std::vector<std::vector<std::uint32_t>> Dataset::rows_by_user() const {
    std::vector<std::vector<std::uint32_t>> by_user(n_users());
    for (std::uint32_t i = 0; i < rows_.size(); ++i)
        by_user[rows_[i].user].push_back(i);
    return by_user;
}

namespace {

std::string normalize_delimiter(std::string_view name) {
    if (name == "tab" || name == "\\t") return "\t";
    if (name == "comma") return ",";
    if (name == "semicolon") return ";";
    if (name == "pipe") return "|";
    if (name == "space" || name == "whitespace" || name == "ws")
        return "whitespace";
    return std::string(name);
}

int parse_column(std::string_view key, std::string_view value) {
    int col = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), col);
    if (ec != std::errc() || ptr != value.data() + value.size() || col < 0)
        throw ConfigError("schema: bad column for '" + std::string(key) + "'");
    return col;
}

}  // namespace

Schema Schema::parse(std::string_view text) {
    Schema s;
    if (text == "ml100k" || text == "movielens100k") return s;
    if (text == "ml1m" || text == "ml10m") {
        s.delimiter = "::";
        return s;
    }
    if (text == "recbole") {
        s.header = true;
        return s;
    }
    if (text == "amazon") {
        s.delimiter = ",";
        s.item_col = 0;
        s.user_col = 1;
        return s;
    }
    if (text == "gowalla") {
        s.user_col = 0;
        s.timestamp_col = 1;
        s.item_col = 4;
        s.rating_col.reset();
        return s;
    }
    if (text == "uir") {
        s.delimiter = "whitespace";
        s.timestamp_col.reset();
        return s;
    }
    if (text == "ui") {
        s.delimiter = "whitespace";
        s.rating_col.reset();
        s.timestamp_col.reset();
        return s;
    }

    s.rating_col.reset();
    s.timestamp_col.reset();
    bool saw_user = false, saw_item = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find(',', pos);
        if (end == std::string_view::npos) end = text.size();
        auto part = text.substr(pos, end - pos);
        pos = end + 1;
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("schema: expected key=value, got '" +
                              std::string(part) + "'");
        auto key = part.substr(0, eq);
        auto value = part.substr(eq + 1);
        if (key == "user") {
            s.user_col = parse_column(key, value);
            saw_user = true;
        } else if (key == "item") {
            s.item_col = parse_column(key, value);
            saw_item = true;
        } else if (key == "rating") {
            if (value == "none") s.rating_col.reset();
            else s.rating_col = parse_column(key, value);
        } else if (key == "timestamp" || key == "ts") {
            if (value == "none") s.timestamp_col.reset();
            else s.timestamp_col = parse_column(key, value);
        } else if (key == "delim" || key == "delimiter") {
            s.delimiter = normalize_delimiter(value);
        } else if (key == "header") {
            s.header = value == "1" || value == "true" || value == "yes";
        } else {
            throw ConfigError("schema: unknown key '" + std::string(key) + "'");
        }
    }
    if (!saw_user || !saw_item)
        throw ConfigError("schema '" + std::string(text) +
                          "' must name user and item columns");
    return s;
}

namespace {

void split_fields(std::string_view line, const std::string& delim,
                  std::vector<std::string_view>& out) {
    out.clear();
    if (delim == "whitespace") {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            if (i >= line.size()) break;
            auto start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
            out.push_back(line.substr(start, i - start));
        }
        return;
    }
    std::size_t pos = 0;
    while (true) {
        auto end = line.find(delim, pos);
        if (end == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return;
        }
        out.push_back(line.substr(pos, end - pos));
        pos = end + delim.size();
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '"')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_real(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
    if (auto real = parse_real(s)) return static_cast<std::int64_t>(*real);
    // ISO-8601 UTC, e.g. 2010-10-19T23:55:27Z
    std::tm tm{};
    std::string buf(s);
    if (std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d:%d", &tm.tm_year, &tm.tm_mon,
                    &tm.tm_mday, &tm.tm_hour, &tm.tm_min, &tm.tm_sec) == 6) {
        tm.tm_year -= 1900;
        tm.tm_mon -= 1;
        return static_cast<std::int64_t>(timegm(&tm));
    }
    return std::nullopt;
}

}  // namespace

Dataset parse_dataset(std::string_view text, const Schema& schema,
                      Feedback feedback, std::string name) {
    if (feedback == Feedback::Implicit && schema.rating_col)
        throw ConfigError("rating column given for an implicit-feedback dataset");
    if (feedback == Feedback::Explicit && !schema.rating_col)
        throw ConfigError("explicit-feedback dataset needs a rating column");

    int needed = std::max(schema.user_col, schema.item_col);
    if (schema.rating_col) needed = std::max(needed, *schema.rating_col);
    if (schema.timestamp_col) needed = std::max(needed, *schema.timestamp_col);

    Dataset d(std::move(name), feedback);
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool skipped_header = !schema.header;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        split_fields(line, schema.delimiter, fields);
        if (static_cast<int>(fields.size()) <= needed)
            throw ParseError("line " + std::to_string(line_no) + ": expected at least " +
                                 std::to_string(needed + 1) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        auto user = trim(fields[schema.user_col]);
        auto item = trim(fields[schema.item_col]);
        if (user.empty() || item.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty user or item id",
                             line_no);
        std::optional<double> rating;
        if (schema.rating_col) {
            rating = parse_real(trim(fields[*schema.rating_col]));
            if (!rating)
                throw ParseError("line " + std::to_string(line_no) + ": bad rating '" +
                                     std::string(fields[*schema.rating_col]) + "'",
                                 line_no);
        }
        std::optional<std::int64_t> ts;
        if (schema.timestamp_col) {
            ts = parse_timestamp(trim(fields[*schema.timestamp_col]));
            if (!ts)
                throw ParseError("line " + std::to_string(line_no) + ": bad timestamp '" +
                                     std::string(fields[*schema.timestamp_col]) + "'",
                                 line_no);
        }
        d.add(user, item, rating, ts);
    }
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                     Feedback feedback, std::string name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (name.empty()) name = path.stem().string();
    return parse_dataset(buf.str(), schema, feedback, std::move(name));
}

void write_dataset(const std::filesystem::path& path, const Dataset& d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    char num[64];
    for (const auto& r : d.interactions()) {
        out << d.users().id(r.user) << '\t' << d.items().id(r.item);
        if (r.rating) {
            auto [p, ec] = std::to_chars(num, num + sizeof num, *r.rating);
            out << '\t' << std::string_view(num, p - num);
        }
        if (r.timestamp) out << '\t' << *r.timestamp;
        out << '\n';
    }
}

double rating_entropy(const Dataset& d, EntropyBase base) {
    std::map<double, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& r : d.interactions()) {
        if (!r.rating) continue;
        ++counts[*r.rating];
        ++total;
    }
    if (total == 0) return 0.0;
    double h = 0.0;
    for (const auto& [value, n] : counts) {
        double q = static_cast<double>(n) / static_cast<double>(total);
        h -= q * std::log(q);
    }
    if (base == EntropyBase::Two) h /= std::log(2.0);
    return h == 0.0 ? 0.0 : h;  // drop the sign on -0
}

DatasetStats compute_stats(const Dataset& d, EntropyBase base) {
    DatasetStats s;
    s.n_users = d.n_users();
    s.n_items = d.n_items();
    s.n_interactions = d.size();
    if (s.n_users == 0 || s.n_items == 0) return s;
    auto n = static_cast<double>(s.n_interactions);
    s.avg_int_per_user = n / static_cast<double>(s.n_users);
    s.avg_int_per_item = n / static_cast<double>(s.n_items);
    s.sparsity_pct = 100.0 * (1.0 - n / (static_cast<double>(s.n_users) *
                                         static_cast<double>(s.n_items)));
    if (d.feedback() == Feedback::Explicit) s.entropy = rating_entropy(d, base);
    return s;
}

}  // namespace greenrec
