#include "steerbench/persona.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steerbench/errors.hpp"
#include "steerbench/format.hpp"
#include "steerbench/rng.hpp"

namespace steerbench {

namespace {

std::string trim(std::string_view s) {
    const auto* ws = " \t\r\n\f\v";
    const auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(ws);
    return std::string(s.substr(begin, end - begin + 1));
}

bool confidence_valid(double c) { return c >= 0.5 && c <= 1.0; }

} // namespace

const char* to_string(Valence v) {
    return v == Valence::positive ? "positive" : "negative";
}

Valence valence_from_string(std::string_view s) {
    if (s == "positive") return Valence::positive;
    if (s == "negative") return Valence::negative;
    throw DataError("unknown valence: " + std::string(s));
}

Valence opposite(Valence v) {
    return v == Valence::positive ? Valence::negative : Valence::positive;
}

PersonaStatement PersonaStatement::make(std::string text, std::string dimension,
                                        Valence direction, double label_confidence) {
    std::string trimmed = trim(text);
    if (trimmed.empty()) throw DataError("statement text is empty after trimming");
    if (trimmed.find('\n') != std::string::npos || trimmed.find('\r') != std::string::npos) {
        throw DataError("statement text contains a line break: " + trimmed);
    }
    if (!confidence_valid(label_confidence)) {
        throw DataError("label_confidence outside [0.5, 1]: " + std::to_string(label_confidence));
    }
    return PersonaStatement{std::move(trimmed), std::move(dimension), direction, label_confidence};
}

void FilterPolicy::validate() const {
    if (!confidence_valid(min_confidence)) {
        throw ConfigError("min_confidence must lie in [0.5, 1]");
    }
    if (min_count_per_direction <= 0 || prune_to <= 0) {
        throw ConfigError("filter counts must be positive");
    }
}

const std::vector<PersonaStatement>& DimensionDataset::steering(Valence v) const {
    return v == Valence::positive ? steering_pos : steering_neg;
}

const std::vector<PersonaStatement>& DimensionDataset::profiling(Valence v) const {
    return v == Valence::positive ? profiling_pos : profiling_neg;
}

ParseResult parse_raw_records(std::istream& source, const std::string& dimension,
                              ParseMode mode) {
    ParseResult result;
    std::string line;
    int line_no = 0;

    auto fail = [&](const std::string& message) {
        if (mode == ParseMode::strict) {
            throw DataError(dimension + ":" + std::to_string(line_no) + ": " + message);
        }
        result.issues.push_back({line_no, message});
    };

    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) continue;

        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            fail("malformed JSON record");
            continue;
        }
        if (!record.contains("statement") || !record["statement"].is_string()) {
            fail("missing string field \"statement\"");
            continue;
        }
        if (!record.contains("answer_matching_behavior") ||
            !record["answer_matching_behavior"].is_string()) {
            fail("missing string field \"answer_matching_behavior\"");
            continue;
        }
        if (!record.contains("label_confidence") ||
            !record["label_confidence"].is_number()) {
            fail("missing numeric field \"label_confidence\"");
            continue;
        }

        const std::string marker = trim(record["answer_matching_behavior"].get<std::string>());
        Valence direction;
        if (marker == "Yes") {
            direction = Valence::positive;
        } else if (marker == "No") {
            direction = Valence::negative;
        } else {
            fail("unrecognized answer_matching_behavior: \"" + marker + "\"");
            continue;
        }

        const double confidence = record["label_confidence"].get<double>();
        if (!confidence_valid(confidence)) {
            fail("label_confidence outside [0.5, 1]");
            continue;
        }

        try {
            result.statements.push_back(PersonaStatement::make(
                record["statement"].get<std::string>(), dimension, direction, confidence));
        } catch (const DataError& e) {
            fail(e.what());
        }
    }
    return result;
}

PrunedCorpus filter_dimensions(const std::vector<PersonaStatement>& statements,
                               const FilterPolicy& policy) {
    policy.validate();

    // Group by dimension, deduplicating by text (keep max confidence;
    // equal-confidence duplicates resolve to the positive direction).
    std::map<std::string, std::map<std::string, PersonaStatement>> by_dimension;
    for (const auto& s : statements) {
        auto& slot = by_dimension[s.dimension];
        auto it = slot.find(s.text);
        if (it == slot.end()) {
            slot.emplace(s.text, s);
        } else if (s.label_confidence > it->second.label_confidence ||
                   (s.label_confidence == it->second.label_confidence &&
                    s.direction == Valence::positive)) {
            it->second = s;
        }
    }

    PrunedCorpus out;
    for (auto& [dimension, by_text] : by_dimension) {
        if (policy.dimension_allowlist && !policy.dimension_allowlist->count(dimension)) {
            continue;
        }

        std::vector<PersonaStatement> pos;
        std::vector<PersonaStatement> neg;
        for (auto& [text, statement] : by_text) {
            if (statement.label_confidence < policy.min_confidence) continue;
            (statement.direction == Valence::positive ? pos : neg).push_back(statement);
        }
        if (static_cast<int>(pos.size()) < policy.min_count_per_direction ||
            static_cast<int>(neg.size()) < policy.min_count_per_direction) {
            continue;
        }

        auto prune = [&](std::vector<PersonaStatement>& v) {
            std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
                if (a.label_confidence != b.label_confidence) {
                    return a.label_confidence > b.label_confidence;
                }
                return a.text < b.text;
            });
            if (static_cast<int>(v.size()) > policy.prune_to) {
                v.resize(static_cast<std::size_t>(policy.prune_to));
            }
        };
        prune(pos);
        prune(neg);

        std::vector<PersonaStatement> kept = std::move(pos);
        kept.insert(kept.end(), std::make_move_iterator(neg.begin()),
                    std::make_move_iterator(neg.end()));
        out.emplace(dimension, std::move(kept));
    }
    return out;
}

std::map<std::string, DimensionDataset> split_dataset(const PrunedCorpus& pruned,
                                                      std::uint64_t seed,
                                                      int steering_per_direction) {
    if (steering_per_direction < 0) {
        throw ConfigError("steering_per_direction must be non-negative");
    }

    std::map<std::string, DimensionDataset> out;
    for (const auto& [dimension, statements] : pruned) {
        DimensionDataset dataset;
        dataset.dimension = dimension;

        for (const Valence direction : {Valence::positive, Valence::negative}) {
            std::vector<PersonaStatement> pool;
            for (const auto& s : statements) {
                if (s.direction == direction) pool.push_back(s);
            }
            if (static_cast<int>(pool.size()) < steering_per_direction) {
                throw DataError("dimension " + dimension + ": direction " +
                                to_string(direction) + " has " + std::to_string(pool.size()) +
                                " statements, fewer than the steering split size " +
                                std::to_string(steering_per_direction));
            }

            Rng rng(SeedKey(seed)
                        .mix("dataset-split")
                        .mix(dimension)
                        .mix(to_string(direction))
                        .value());
            rng.shuffle(pool);

            auto& steering = direction == Valence::positive ? dataset.steering_pos
                                                            : dataset.steering_neg;
            auto& profiling = direction == Valence::positive ? dataset.profiling_pos
                                                             : dataset.profiling_neg;
            steering.assign(pool.begin(), pool.begin() + steering_per_direction);
            profiling.assign(pool.begin() + steering_per_direction, pool.end());
        }
        out.emplace(dimension, std::move(dataset));
    }
    return out;
}

namespace {

void write_csv_field(std::ostream& out, const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        out << field;
        return;
    }
    out << '"';
    for (const char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

nlohmann::json statements_to_json(const std::vector<PersonaStatement>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : v) {
        arr.push_back({{"text", s.text}, {"label_confidence", s.label_confidence}});
    }
    return arr;
}

std::vector<PersonaStatement> statements_from_json(const nlohmann::json& arr,
                                                   const std::string& dimension,
                                                   Valence direction) {
    std::vector<PersonaStatement> out;
    for (const auto& item : arr) {
        out.push_back(PersonaStatement::make(item.at("text").get<std::string>(), dimension,
                                             direction,
                                             item.at("label_confidence").get<double>()));
    }
    return out;
}

} // namespace

void write_processed_csv(std::ostream& out, const PrunedCorpus& corpus) {
    out << "statement,direction,label_confidence,persona_dim\n";
    for (const auto& [dimension, statements] : corpus) {
        for (const auto& s : statements) {
            write_csv_field(out, s.text);
            out << ',' << to_string(s.direction) << ',' << format_double(s.label_confidence)
                << ',';
            write_csv_field(out, dimension);
            out << '\n';
        }
    }
}

std::string dataset_to_json(const DimensionDataset& dataset) {
    nlohmann::json doc{
        {"schema_version", 1},
        {"dimension", dataset.dimension},
        {"steering_pos", statements_to_json(dataset.steering_pos)},
        {"steering_neg", statements_to_json(dataset.steering_neg)},
        {"profiling_pos", statements_to_json(dataset.profiling_pos)},
        {"profiling_neg", statements_to_json(dataset.profiling_neg)},
    };
    return doc.dump(2);
}

DimensionDataset dataset_from_json(const std::string& json_text) {
    const nlohmann::json doc = nlohmann::json::parse(json_text);
    DimensionDataset dataset;
    dataset.dimension = doc.at("dimension").get<std::string>();
    dataset.steering_pos =
        statements_from_json(doc.at("steering_pos"), dataset.dimension, Valence::positive);
    dataset.steering_neg =
        statements_from_json(doc.at("steering_neg"), dataset.dimension, Valence::negative);
    dataset.profiling_pos =
        statements_from_json(doc.at("profiling_pos"), dataset.dimension, Valence::positive);
    dataset.profiling_neg =
        statements_from_json(doc.at("profiling_neg"), dataset.dimension, Valence::negative);
    return dataset;
}

} // namespace steerbench
