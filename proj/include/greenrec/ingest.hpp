#ifndef GREENREC_INGEST_HPP_
#define GREENREC_INGEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace greenrec {

using UserIndex = std::uint32_t;
using ItemIndex = std::uint32_t;

/// Base class for every error the toolkit throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or an input that cannot satisfy a precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

enum class Feedback { Explicit, Implicit };

std::string to_string(Feedback f);
Feedback feedback_from_string(std::string_view s);

/// One observed event. `user`/`item` are dense indices into the owning
/// Dataset's id tables.
struct Interaction {
    UserIndex user = 0;
    ItemIndex item = 0;
    std::optional<double> rating;
    std::optional<std::int64_t> timestamp;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Bidirectional map between opaque string ids and dense indices assigned in
/// first-occurrence order.
class IdIndex {
public:
    std::uint32_t intern(std::string_view id);
    std::optional<std::uint32_t> find(std::string_view id) const;
    const std::string& id(std::uint32_t index) const { return ids_.at(index); }
    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::uint32_t> lookup_;
};

/// Immutable interaction store. Indices are contiguous and every interaction
/// refers to a valid user and item.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, Feedback feedback);

    /// Appends an interaction keyed by string ids, interning them as needed.
    void add(std::string_view user, std::string_view item,
             std::optional<double> rating = std::nullopt,
             std::optional<std::int64_t> timestamp = std::nullopt);

    /// Builds a dataset from a subset of `source`'s interactions, re-indexing
    /// users and items in first-occurrence order of the retained rows.
    static Dataset from_subset(const Dataset& source,
                               const std::vector<Interaction>& rows);

    const std::string& name() const { return name_; }
    void set_name(std::string name) { name_ = std::move(name); }
    Feedback feedback() const { return feedback_; }
    const std::vector<Interaction>& interactions() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    std::size_t n_users() const { return users_.size(); }
    std::size_t n_items() const { return items_.size(); }
    const IdIndex& users() const { return users_; }
    const IdIndex& items() const { return items_; }

    /// Interaction indices grouped by user, each list in dataset order.
    std::vector<std::vector<std::uint32_t>> rows_by_user() const;

private:
    std::string name_;
    Feedback feedback_ = Feedback::Explicit;
    std::vector<Interaction> rows_;
    IdIndex users_;
    IdIndex items_;
};

/// Column layout of a delimited text file. Column numbers are zero based.
struct Schema {
    std::string delimiter = "\t";  // "whitespace" splits on runs of blanks
    bool header = false;
    int user_col = 0;
    int item_col = 1;
    std::optional<int> rating_col = 2;
    std::optional<int> timestamp_col = 3;

    /// Presets: ml100k, ml1m, recbole, amazon, gowalla, uir (whitespace
    /// user/item/rating), ui (whitespace user/item). Anything else is parsed
    /// as a key=value list, e.g. "user=0,item=1,rating=2,delim=comma,header=1".
    static Schema parse(std::string_view text);
};

/// Loads a delimited interaction file. Rows are kept in file order and ids
/// are interned in first-occurrence order.
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                     Feedback feedback, std::string name = {});

/// Parses rows from an in-memory buffer; used by load_dataset.
Dataset parse_dataset(std::string_view text, const Schema& schema,
                      Feedback feedback, std::string name = {});

/// Writes `d` as tab-separated user, item[, rating][, timestamp] rows using
/// the original string ids.
void write_dataset(const std::filesystem::path& path, const Dataset& d);

enum class EntropyBase { Natural, Two };

struct DatasetStats {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::size_t n_interactions = 0;
    double avg_int_per_user = 0.0;
    double avg_int_per_item = 0.0;
    std::optional<double> sparsity_pct;  // absent for empty datasets
    std::optional<double> entropy;       // absent for implicit feedback
};

DatasetStats compute_stats(const Dataset& d,
                           EntropyBase base = EntropyBase::Natural);

/// Shannon entropy of the rating-value distribution.
double rating_entropy(const Dataset& d, EntropyBase base = EntropyBase::Natural);

}  // namespace greenrec

#endif  // GREENREC_INGEST_HPP_
