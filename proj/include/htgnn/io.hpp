#pragma once

// On-disk formats for intermediate artifacts. Floats are written in shortest
// round-trip form; files are written to a temporary and renamed into place.

#include "htgnn/common.hpp"
#include "htgnn/hetero_gcn.hpp"
#include "htgnn/tda_persistence.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace htgnn {

void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// src,dst,relation,weight (0-based node indices, relation 'q' or 'p').
std::string edges_to_csv(const EdgeSet& edges, Relation relation);
EdgeSet edges_from_csv(const std::string& text, Relation* relation = nullptr);

// dim,birth,death with "inf" for essential classes.
std::string diagram_to_csv(const std::vector<PersistencePair>& pairs);

struct DiagramRow {
    int dim = 0;
    double birth = 0.0;
    double death = 0.0;
};
std::vector<DiagramRow> diagram_from_csv(const std::string& text);

// Headerless dense matrix, one row per line.
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

// bank_id,predicted_rating,prob_1,prob_2,prob_3,prob_4
std::string predictions_to_csv(const std::vector<std::string>& bank_ids, const Prediction& prediction);

struct PredictionRows {
    std::vector<std::string> bank_ids;
    Prediction prediction;
};
PredictionRows predictions_from_csv(const std::string& text);

// Versioned text checkpoint holding layer dims, mixing weights and every
// weight matrix in row-major order.
std::string checkpoint_to_string(const GcnModel& model);
GcnModel checkpoint_from_string(const std::string& text);

}  // namespace htgnn
