#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace steerbench {

enum class Valence { positive, negative };

const char* to_string(Valence v);
Valence valence_from_string(std::string_view s);
Valence opposite(Valence v);

// One labeled persona statement. make() validates the invariants, so
// downstream code never sees an empty text, an embedded newline, or a
// confidence outside [0.5, 1].
struct PersonaStatement {
    std::string text;
    std::string dimension;
    Valence direction = Valence::positive;
    double label_confidence = 1.0;

    static PersonaStatement make(std::string text, std::string dimension,
                                 Valence direction, double label_confidence);

    bool operator==(const PersonaStatement&) const = default;
};

struct FilterPolicy {
    double min_confidence = 0.85;
    int min_count_per_direction = 300;
    int prune_to = 300;
    std::optional<std::set<std::string>> dimension_allowlist;

    void validate() const;
};

// Per-dimension steering/profiling splits, each split holding both valences.
struct DimensionDataset {
    std::string dimension;
    std::vector<PersonaStatement> steering_pos;
    std::vector<PersonaStatement> steering_neg;
    std::vector<PersonaStatement> profiling_pos;
    std::vector<PersonaStatement> profiling_neg;

    const std::vector<PersonaStatement>& steering(Valence v) const;
    const std::vector<PersonaStatement>& profiling(Valence v) const;
};

struct ParseIssue {
    int line = 0; // 1-based
    std::string message;
};

struct ParseResult {
    std::vector<PersonaStatement> statements;
    std::vector<ParseIssue> issues; // only populated in lenient mode
};

enum class ParseMode { strict, lenient };

// Line-delimited JSON, one record per line with fields "statement",
// "answer_matching_behavior" (" Yes" / " No", surrounding whitespace
// tolerated) and "label_confidence". The dimension identifier comes from
// the caller (typically the filename stem). In strict mode the first bad
// record throws; in lenient mode bad records are reported and skipped.
ParseResult parse_raw_records(std::istream& source, const std::string& dimension,
                              ParseMode mode = ParseMode::strict);

using PrunedCorpus = std::map<std::string, std::vector<PersonaStatement>>;

// A dimension survives iff, after dropping statements below min_confidence,
// each direction still has at least min_count_per_direction statements.
// Surviving directions are pruned to exactly prune_to statements, keeping
// the highest-confidence ones (ties broken by statement text). The
// allowlist, when present, is applied last.
PrunedCorpus filter_dimensions(const std::vector<PersonaStatement>& statements,
                               const FilterPolicy& policy);

// Seeded shuffle per (dimension, direction); the first steering_per_direction
// statements form the steering split, the remainder the profiling split.
std::map<std::string, DimensionDataset> split_dataset(const PrunedCorpus& pruned,
                                                      std::uint64_t seed,
                                                      int steering_per_direction = 100);

// CSV with columns statement, direction, label_confidence, persona_dim.
void write_processed_csv(std::ostream& out, const PrunedCorpus& corpus);

std::string dataset_to_json(const DimensionDataset& dataset);
DimensionDataset dataset_from_json(const std::string& json_text);

} // namespace steerbench
