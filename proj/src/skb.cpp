#include "skbsem/skb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "skbsem/util.hpp"

namespace skbsem {

AttributeMatrix::AttributeMatrix(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("skb: no attribute rows");
    if (rows_.size() > 256)
        throw std::invalid_argument("skb: " + std::to_string(rows_.size()) + " classes exceed the 8-bit index limit of 256");
    attr_count_ = rows_[0].size();
    if (attr_count_ == 0) throw std::invalid_argument("skb: empty attribute vectors");
    for (std::size_t m = 0; m < rows_.size(); ++m) {
        const auto& r = rows_[m];
        if (r.size() != attr_count_)
            throw std::invalid_argument("skb: row " + std::to_string(m) + " has " + std::to_string(r.size()) +
                                        " attributes, expected " + std::to_string(attr_count_));
        bool any_nonzero = false;
        for (double v : r) {
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("skb: row " + std::to_string(m) + " has attribute " + std::to_string(v) +
                                            " outside [0,1]");
            if (v != 0.0) any_nonzero = true;
        }
        if (!any_nonzero)
            throw std::invalid_argument("skb: row " + std::to_string(m) + " is all-zero; cosine similarity undefined");
    }
}

const std::vector<double>& AttributeMatrix::row(std::size_t v) const {
    if (v >= rows_.size())
        throw std::out_of_range("skb: class index " + std::to_string(v) + " out of range [0," +
                                std::to_string(rows_.size()) + ")");
    return rows_[v];
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("skb: cosine similarity of vectors with lengths " + std::to_string(a.size()) +
                                    " and " + std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("skb: cosine similarity with a zero-norm operand");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

NearestResult nearest(const AttributeMatrix& skb, const std::vector<double>& feature) {
    if (feature.size() != skb.attribute_count())
        throw std::invalid_argument("skb: feature length " + std::to_string(feature.size()) +
                                    " does not match attribute count " + std::to_string(skb.attribute_count()));
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t m = 0; m < skb.class_count(); ++m) {
        const double sim = cosine_similarity(feature, skb.row(m));
        if (sim > best_sim) {
            best_sim = sim;
            best = m;
        }
    }
    return {best, skb.row(best)};
}

const std::vector<double>& lookup(const AttributeMatrix& skb, std::size_t index) { return skb.row(index); }

AttributeMatrix load_attribute_csv(const std::string& path, std::size_t* clamp_warnings) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("skb: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::size_t clamps = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        for (const std::string& cell : util::split(line, ',')) {
            double v;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw std::runtime_error("skb: " + path + ":" + std::to_string(lineno) + ": bad value '" + cell + "'");
            }
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                ++clamps;
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (clamp_warnings) *clamp_warnings = clamps;
    return AttributeMatrix(std::move(rows));
}

void save_attribute_csv(const std::string& path, const AttributeMatrix& skb) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("skb: cannot open for writing: " + path);
    for (std::size_t m = 0; m < skb.class_count(); ++m) {
        const auto& r = skb.row(m);
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) f << ",";
            f << util::format_double(r[i]);
        }
        f << "\n";
    }
}

}  // namespace skbsem
