#ifndef MG_AUTODIFF_HPP
#define MG_AUTODIFF_HPP

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace mg {

struct ShapeMismatch : std::invalid_argument {
    explicit ShapeMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// Dense row-major matrix. The only numeric container the differentiation
/// tape and the networks built on it use.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    static Mat row_vector(std::vector<double> values) {
        Mat m;
        m.rows = 1;
        m.cols = values.size();
        m.a = std::move(values);
        return m;
    }
    static Mat column_vector(const std::vector<double>& values) {
        Mat m(values.size(), 1);
        m.a = values;
        return m;
    }

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    std::size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// Reverse-mode differentiation tape over Mat-valued nodes. Build a graph
/// forward with the op methods, call backward(root) on a 1x1 node, then
/// read grad(id) for any input. Node ids are creation-ordered, which is a
/// valid topological order for the backward sweep.
class Tape {
public:
    using Id = int;

    Id input(Mat value);

    const Mat& value(Id id) const { return nodes_[check(id)].value; }
    const Mat& grad(Id id) const { return nodes_[check(id)].grad; }

    Id matmul(Id a, Id b);
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    /// Broadcasts a 1 x n row over every row of a (m x n).
    Id add_rowvec(Id a, Id row);
    /// Broadcasts a 1 x n row multiplicatively over every row of a.
    Id mul_rowvec(Id a, Id row);
    /// Broadcasts an m x 1 column, subtracted from every column of a.
    Id sub_colvec(Id a, Id col);
    Id scale(Id a, double k);
    Id add_scalar(Id a, double k);
    Id relu(Id a);
    Id exp(Id a);
    Id log(Id a);
    Id clamp(Id a, double lo, double hi);
    Id minimum(Id a, Id b);
    Id transpose(Id a);
    Id row_softmax(Id a);
    /// Row-wise log(sum(exp)), numerically stabilized; result is m x 1.
    Id row_logsumexp(Id a);
    Id row_sum(Id a);
    Id sum_all(Id a);
    Id mean_all(Id a);

    /// Accumulates gradients of a scalar (1x1) node into every ancestor.
    void backward(Id root);

    std::size_t n_nodes() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back;  // empty for leaves
    };

    Id check(Id id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
            throw std::out_of_range("Tape: bad node id");
        }
        return id;
    }

    Id push(Mat value, std::function<void()> back);
    Mat& grad_ref(Id id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

}  // namespace mg

#endif  // MG_AUTODIFF_HPP
