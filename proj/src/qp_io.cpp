#include "shapederiv/qp_io.hpp"

#include "shapederiv/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace shapederiv::minimax {

namespace {

using nlohmann::json;

Eigen::MatrixXd read_matrix(const json& node, const char* name) {
    if (!node.is_array()) throw Error(ErrorKind::ParseError, std::string(name) + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(node.size());
    const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(node[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = node[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(ErrorKind::ParseError, std::string(name) + " has ragged rows");
        }
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
    return m;
}

Eigen::VectorXd read_vector(const json& node, const char* name) {
    if (!node.is_array()) throw Error(ErrorKind::ParseError, std::string(name) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = node[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json write_matrix(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

json write_vector(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace

QpInstance parse_qp_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
        ConeQP qp;
        qp.cone = cone_kind_from_string(doc.at("cone").get<std::string>());
        qp.A = read_matrix(doc.at("A"), "A");
        qp.B = read_matrix(doc.at("B"), "B");
        if (qp.B.rows() == 0) qp.B.resize(0, qp.A.cols());
        qp.f = read_vector(doc.at("f"), "f");
        if (!doc.contains("direction")) return QpInstance{std::move(qp), std::nullopt};
        const json& d = doc.at("direction");
        PerturbationDirection dir{read_matrix(d.at("A1"), "A1"), read_matrix(d.at("B1"), "B1"),
                                  read_vector(d.at("f1"), "f1")};
        if (dir.B1.rows() == 0) dir.B1.resize(0, qp.A.cols());
        return QpInstance{std::move(qp), std::move(dir)};
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("QP instance: ") + e.what());
    }
}

QpInstance load_qp_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open QP instance " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_qp_instance(buffer.str());
}

std::string format_qp_instance(const QpInstance& instance) {
    json doc;
    doc["cone"] = std::string(to_string(instance.qp.cone));
    doc["A"] = write_matrix(instance.qp.A);
    doc["B"] = write_matrix(instance.qp.B);
    doc["f"] = write_vector(instance.qp.f);
    if (instance.direction) {
        doc["direction"] = {{"A1", write_matrix(instance.direction->A1)},
                            {"B1", write_matrix(instance.direction->B1)},
                            {"f1", write_vector(instance.direction->f1)}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace shapederiv::minimax
