#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace skbsem {

// The shared semantic knowledge base: one attribute vector per class, row
// order is the class index. Immutable after construction, safe to share
// across threads.
class AttributeMatrix {
public:
    // Validates: at least one row, at most 256 (indices must fit one byte),
    // equal row lengths, entries in [0,1], no all-zero row.
    explicit AttributeMatrix(std::vector<std::vector<double>> rows);

    std::size_t class_count() const { return rows_.size(); }
    std::size_t attribute_count() const { return attr_count_; }

    // Row for class index v; v >= class_count() is rejected.
    const std::vector<double>& row(std::size_t v) const;

    const std::vector<std::vector<double>>& rows() const { return rows_; }

private:
    std::size_t attr_count_ = 0;
    std::vector<std::vector<double>> rows_;
};

struct NearestResult {
    std::size_t index;
    std::vector<double> prototype;  // the selected SKB row
};

// <a,b>/(|a||b|); zero-norm operands are rejected.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Row with the greatest cosine similarity to `feature`; ties resolve to the
// lowest index so runs are reproducible.
NearestResult nearest(const AttributeMatrix& skb, const std::vector<double>& feature);

// Same as AttributeMatrix::row, provided as the receiver-side resolution
// step name.
const std::vector<double>& lookup(const AttributeMatrix& skb, std::size_t index);

// CSV with one row per class, no header. Values outside [0,1] are clamped
// on load; `clamp_warnings` (when non-null) receives the count.
AttributeMatrix load_attribute_csv(const std::string& path, std::size_t* clamp_warnings = nullptr);
void save_attribute_csv(const std::string& path, const AttributeMatrix& skb);

}  // namespace skbsem
