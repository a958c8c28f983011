#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nenp/core.hpp"
#include "nenp/model.hpp"
#include "nenp/train.hpp"

namespace nenp {

/// One unvalidated line of a dataset file:
/// id TAB tokens TAB tags TAB "i,j,LABEL;..." [TAB tree]
struct DatasetRecord {
    std::string id;
    std::vector<Token> tokens;
    std::vector<RawSpan> spans;
    int line = 0;
};

std::vector<DatasetRecord> read_records(std::istream& is, std::string const& source);
std::vector<DatasetRecord> read_records(std::string const& path);

/// Sorted entity labels used anywhere in the given record lists.
LabelSet collect_labels(std::span<std::vector<DatasetRecord> const* const> record_lists);

/// Validates every record; all failures are reported together with their record ids.
std::vector<AnnotatedSentence> resolve_records(std::vector<DatasetRecord> const& records,
                                               LabelSet const& labels,
                                               DuplicatePolicy policy = DuplicatePolicy::error);

/// Sentences only (entity field ignored), for unlabeled corpora.
std::vector<Sentence> sentences_of(std::vector<DatasetRecord> const& records);

/// When `trees` is non-empty it must align with `data` and adds a bracketed fifth column.
void write_dataset(std::ostream& os, std::span<AnnotatedSentence const> data, LabelSet const& labels,
                   std::span<std::string const> trees = {});
void write_dataset(std::string const& path, std::span<AnnotatedSentence const> data,
                   LabelSet const& labels, std::span<std::string const> trees = {});

/// Model and training hyperparameters from a flat key=value file. Unknown keys are errors.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
};

RunConfig parse_run_config(std::istream& is);
RunConfig load_run_config(std::string const& path);
/// Applies one key=value assignment.
void set_config_value(RunConfig& config, std::string const& key, std::string const& value);

} // namespace nenp
