#include "htgnn/io.hpp"

#include "htgnn/data_model.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace htgnn {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

void expect_header(const std::vector<std::string>& lines, const std::string& header) {
    if (lines.empty() || lines.front() != header) {
        throw ValidationError("expected header '" + header + "'");
    }
}

}  // namespace

std::string edges_to_csv(const EdgeSet& edges, Relation relation) {
    std::string out = "src,dst,relation,weight\n";
    const char tag = relation == Relation::lending ? 'q' : 'p';
    for (const auto& e : edges) {
        out += std::to_string(e.src) + ',' + std::to_string(e.dst) + ',' + tag + ',' +
               format_double(e.weight) + '\n';
    }
    return out;
}

EdgeSet edges_from_csv(const std::string& text, Relation* relation) {
    const auto lines = lines_of(text);
    expect_header(lines, "src,dst,relation,weight");
    std::vector<Edge> edges;
    char seen = 0;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != 4) throw ValidationError("edge row " + std::to_string(r) + ": expected 4 columns");
        if (cells[2] != "q" && cells[2] != "p") {
            throw ValidationError("edge row " + std::to_string(r) + ": relation must be 'q' or 'p'");
        }
        if (seen && seen != cells[2][0]) throw ValidationError("edge file mixes relations");
        seen = cells[2][0];
        edges.push_back({static_cast<int>(parse_int(cells[0])), static_cast<int>(parse_int(cells[1])),
                         parse_double(cells[3])});
    }
    if (relation && seen) *relation = seen == 'q' ? Relation::lending : Relation::persistence;
    return make_edge_set(std::move(edges));
}

std::string diagram_to_csv(const std::vector<PersistencePair>& pairs) {
    std::string out = "dim,birth,death\n";
    for (const auto& p : pairs) {
        out += std::to_string(p.dim) + ',' + format_double(p.birth) + ',' + format_double(p.death) + '\n';
    }
    return out;
}

std::vector<DiagramRow> diagram_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    expect_header(lines, "dim,birth,death");
    std::vector<DiagramRow> rows;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != 3) throw ValidationError("diagram row " + std::to_string(r) + ": expected 3 columns");
        rows.push_back({static_cast<int>(parse_int(cells[0])), parse_double(cells[1]), parse_double(cells[2])});
    }
    return rows;
}

std::string matrix_to_csv(const Matrix& m) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix matrix_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    std::vector<double> values;
    Eigen::Index cols = -1;
    for (const auto& line : lines) {
        const auto cells = split(line, ',');
        if (cols >= 0 && static_cast<Eigen::Index>(cells.size()) != cols) {
            throw ValidationError("ragged matrix CSV");
        }
        cols = static_cast<Eigen::Index>(cells.size());
        for (auto c : cells) values.push_back(parse_double(c));
    }
    const auto rows = static_cast<Eigen::Index>(lines.size());
    if (rows == 0) return Matrix(0, 0);
    return Eigen::Map<const Matrix>(values.data(), rows, cols);
}

std::string predictions_to_csv(const std::vector<std::string>& bank_ids, const Prediction& prediction) {
    if (bank_ids.size() != prediction.ratings.size()) {
        throw ValidationError("bank id count differs from prediction count");
    }
    std::string out = "bank_id,predicted_rating,prob_1,prob_2,prob_3,prob_4\n";
    for (std::size_t i = 0; i < bank_ids.size(); ++i) {
        out += bank_ids[i] + ',' + std::to_string(prediction.ratings[i]);
        for (Eigen::Index k = 0; k < 4; ++k) {
            out += ',' + format_double(prediction.probs(static_cast<Eigen::Index>(i), k));
        }
        out += '\n';
    }
    return out;
}

PredictionRows predictions_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    expect_header(lines, "bank_id,predicted_rating,prob_1,prob_2,prob_3,prob_4");
    PredictionRows rows;
    rows.prediction.probs.resize(static_cast<Eigen::Index>(lines.size() - 1), 4);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = split(lines[r], ',');
        if (cells.size() != 6) throw ValidationError("prediction row " + std::to_string(r) + ": expected 6 columns");
        rows.bank_ids.emplace_back(cells[0]);
        const auto y = parse_int(cells[1]);
        if (y < 1 || y > 4) throw ValidationError("prediction row " + std::to_string(r) + ": rating outside 1..4");
        rows.prediction.ratings.push_back(static_cast<int>(y));
        for (Eigen::Index k = 0; k < 4; ++k) {
            rows.prediction.probs(static_cast<Eigen::Index>(r - 1), k) =
                parse_double(cells[static_cast<std::size_t>(k) + 2]);
        }
    }
    return rows;
}

namespace {

constexpr const char* kCheckpointMagic = "htgnn-checkpoint";
constexpr int kCheckpointVersion = 1;

void put_matrix(std::string& out, const std::string& name, std::size_t layer, const Matrix& m) {
    out += "matrix " + name + ' ' + std::to_string(layer) + ' ' + std::to_string(m.rows()) + ' ' +
           std::to_string(m.cols()) + '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ' ';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
}

Matrix get_matrix(std::istream& in, const std::string& name, std::size_t layer) {
    std::string tag;
    std::string got_name;
    std::size_t got_layer = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> tag >> got_name >> got_layer >> rows >> cols) || tag != "matrix" || got_name != name ||
        got_layer != layer) {
        throw ValidationError("checkpoint: expected matrix " + name + " " + std::to_string(layer));
    }
    Matrix m(rows, cols);
    std::string token;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        if (!(in >> token)) throw ValidationError("checkpoint: truncated matrix " + name);
        m.data()[i] = parse_double(token);
    }
    return m;
}

}  // namespace

std::string checkpoint_to_string(const GcnModel& model) {
    model.validate();
    std::string out = std::string(kCheckpointMagic) + ' ' + std::to_string(kCheckpointVersion) + '\n';
    out += "layer_dims " + std::to_string(model.layer_dims.size());
    for (int d : model.layer_dims) out += ' ' + std::to_string(d);
    out += "\nalpha_q " + format_double(model.alpha_q) + "\nalpha_p " + format_double(model.alpha_p) + '\n';
    for (std::size_t l = 0; l < model.weights_q.size(); ++l) {
        put_matrix(out, "W_q", l, model.weights_q[l]);
        put_matrix(out, "W_p", l, model.weights_p[l]);
    }
    put_matrix(out, "W_c", 0, model.classifier);
    return out;
}

GcnModel checkpoint_from_string(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kCheckpointMagic) throw ValidationError("not an htgnn checkpoint");
    if (version != kCheckpointVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    std::string key;
    std::size_t count = 0;
    if (!(in >> key >> count) || key != "layer_dims" || count < 2) throw ValidationError("checkpoint: bad layer_dims");
    std::vector<int> dims(count);
    for (auto& d : dims) {
        if (!(in >> d)) throw ValidationError("checkpoint: bad layer_dims");
    }
    std::string token;
    GcnModel m;
    m.layer_dims = dims;
    if (!(in >> key >> token) || key != "alpha_q") throw ValidationError("checkpoint: missing alpha_q");
    m.alpha_q = parse_double(token);
    if (!(in >> key >> token) || key != "alpha_p") throw ValidationError("checkpoint: missing alpha_p");
    m.alpha_p = parse_double(token);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        m.weights_q.push_back(get_matrix(in, "W_q", l));
        m.weights_p.push_back(get_matrix(in, "W_p", l));
    }
    m.classifier = get_matrix(in, "W_c", 0);
    m.validate();
    return m;
}

}  // namespace htgnn
