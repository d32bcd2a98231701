#include "mg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mg {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ShapeMismatch(what);
}

/// c += a * b with the k-loop outside the column loop so the inner loop
/// walks both b and c contiguously.
void gemm_acc(const Mat& a, const Mat& b, Mat& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = &a.a[i * a.cols];
        double* crow = &c.a[i * c.cols];
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &b.a[k * b.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

Mat transposed(const Mat& m) {
    Mat t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
    }
    return t;
}

}  // namespace

Tape::Id Tape::push(Mat value, std::function<void()> back) {
    Node n;
    n.grad = Mat(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

Tape::Id Tape::input(Mat value) { return push(std::move(value), {}); }

Tape::Id Tape::matmul(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.cols == B.rows, "matmul: inner dimensions differ");
    Mat C(A.rows, B.cols);
    gemm_acc(A, B, C);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, b, out] {
        const Mat& g = nodes_[out].grad;
        const Mat bt = transposed(nodes_[b].value);
        gemm_acc(g, bt, nodes_[a].grad);
        const Mat at = transposed(nodes_[a].value);
        gemm_acc(at, g, nodes_[b].grad);
    };
    return out;
}

Tape::Id Tape::add(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.same_shape(B), "add: shapes differ");
    Mat C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.a[i] += B.a[i];
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, b, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.a[i] += g.a[i];
            nodes_[b].grad.a[i] += g.a[i];
        }
    };
    return out;
}

Tape::Id Tape::sub(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.same_shape(B), "sub: shapes differ");
    Mat C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.a[i] -= B.a[i];
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, b, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.a[i] += g.a[i];
            nodes_[b].grad.a[i] -= g.a[i];
        }
    };
    return out;
}

Tape::Id Tape::mul(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.same_shape(B), "mul: shapes differ");
    Mat C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.a[i] *= B.a[i];
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, b, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.a[i] += g.a[i] * nodes_[b].value.a[i];
            nodes_[b].grad.a[i] += g.a[i] * nodes_[a].value.a[i];
        }
    };
    return out;
}

Tape::Id Tape::add_rowvec(Id a, Id row) {
    const Mat& A = value(a);
    const Mat& R = value(row);
    require(R.rows == 1 && R.cols == A.cols, "add_rowvec: need 1 x cols row");
    Mat C = A;
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) += R.at(0, j);
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, row, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.a[i] += g.a[i];
        Mat& gr = nodes_[row].grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < g.cols; ++j) gr.at(0, j) += g.at(i, j);
        }
    };
    return out;
}

Tape::Id Tape::mul_rowvec(Id a, Id row) {
    const Mat& A = value(a);
    const Mat& R = value(row);
    require(R.rows == 1 && R.cols == A.cols, "mul_rowvec: need 1 x cols row");
    Mat C = A;
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) *= R.at(0, j);
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, row, out] {
        const Mat& g = nodes_[out].grad;
        const Mat& A2 = nodes_[a].value;
        const Mat& R2 = nodes_[row].value;
        Mat& ga = nodes_[a].grad;
        Mat& gr = nodes_[row].grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < g.cols; ++j) {
                ga.at(i, j) += g.at(i, j) * R2.at(0, j);
                gr.at(0, j) += g.at(i, j) * A2.at(i, j);
            }
        }
    };
    return out;
}

Tape::Id Tape::sub_colvec(Id a, Id col) {
    const Mat& A = value(a);
    const Mat& V = value(col);
    require(V.cols == 1 && V.rows == A.rows, "sub_colvec: need rows x 1 column");
    Mat C = A;
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) -= V.at(i, 0);
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, col, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.a[i] += g.a[i];
        Mat& gv = nodes_[col].grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) s += g.at(i, j);
            gv.at(i, 0) -= s;
        }
    };
    return out;
}

Tape::Id Tape::scale(Id a, double k) {
    Mat C = value(a);
    for (double& v : C.a) v *= k;
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, k, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.a[i] += k * g.a[i];
    };
    return out;
}

Tape::Id Tape::add_scalar(Id a, double k) {
    Mat C = value(a);
    for (double& v : C.a) v += k;
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) nodes_[a].grad.a[i] += g.a[i];
    };
    return out;
}

Tape::Id Tape::relu(Id a) {
    Mat C = value(a);
    for (double& v : C.a) v = std::max(0.0, v);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (nodes_[a].value.a[i] > 0.0) nodes_[a].grad.a[i] += g.a[i];
        }
    };
    return out;
}

Tape::Id Tape::exp(Id a) {
    Mat C = value(a);
    for (double& v : C.a) v = std::exp(v);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.a[i] += g.a[i] * nodes_[out].value.a[i];
        }
    };
    return out;
}

Tape::Id Tape::log(Id a) {
    Mat C = value(a);
    for (double& v : C.a) v = std::log(v);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.a[i] += g.a[i] / nodes_[a].value.a[i];
        }
    };
    return out;
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
    require(lo <= hi, "clamp: lo > hi");
    Mat C = value(a);
    for (double& v : C.a) v = std::clamp(v, lo, hi);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, lo, hi, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = nodes_[a].value.a[i];
            if (v > lo && v < hi) nodes_[a].grad.a[i] += g.a[i];
        }
    };
    return out;
}

Tape::Id Tape::minimum(Id a, Id b) {
    const Mat& A = value(a);
    const Mat& B = value(b);
    require(A.same_shape(B), "minimum: shapes differ");
    Mat C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C.a[i] = std::min(A.a[i], B.a[i]);
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, b, out] {
        // Ties route the gradient to the first argument.
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (nodes_[a].value.a[i] <= nodes_[b].value.a[i]) {
                nodes_[a].grad.a[i] += g.a[i];
            } else {
                nodes_[b].grad.a[i] += g.a[i];
            }
        }
    };
    return out;
}

Tape::Id Tape::transpose(Id a) {
    const Id out = push(transposed(value(a)), {});
    nodes_[out].back = [this, a, out] {
        const Mat gt = transposed(nodes_[out].grad);
        for (std::size_t i = 0; i < gt.size(); ++i) nodes_[a].grad.a[i] += gt.a[i];
    };
    return out;
}

Tape::Id Tape::row_softmax(Id a) {
    const Mat& A = value(a);
    Mat C(A.rows, A.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double mx = A.at(i, 0);
        for (std::size_t j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) {
            const double e = std::exp(A.at(i, j) - mx);
            C.at(i, j) = e;
            denom += e;
        }
        for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) /= denom;
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        const Mat& s = nodes_[out].value;
        for (std::size_t i = 0; i < g.rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) dot += g.at(i, j) * s.at(i, j);
            for (std::size_t j = 0; j < g.cols; ++j) {
                nodes_[a].grad.at(i, j) += s.at(i, j) * (g.at(i, j) - dot);
            }
        }
    };
    return out;
}

Tape::Id Tape::row_logsumexp(Id a) {
    const Mat& A = value(a);
    Mat C(A.rows, 1);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double mx = A.at(i, 0);
        for (std::size_t j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += std::exp(A.at(i, j) - mx);
        C.at(i, 0) = mx + std::log(s);
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        const Mat& A2 = nodes_[a].value;
        const Mat& L = nodes_[out].value;
        for (std::size_t i = 0; i < A2.rows; ++i) {
            for (std::size_t j = 0; j < A2.cols; ++j) {
                nodes_[a].grad.at(i, j) +=
                    g.at(i, 0) * std::exp(A2.at(i, j) - L.at(i, 0));
            }
        }
    };
    return out;
}

Tape::Id Tape::row_sum(Id a) {
    const Mat& A = value(a);
    Mat C(A.rows, 1);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += A.at(i, j);
        C.at(i, 0) = s;
    }
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const Mat& g = nodes_[out].grad;
        for (std::size_t i = 0; i < g.rows; ++i) {
            for (std::size_t j = 0; j < nodes_[a].grad.cols; ++j) {
                nodes_[a].grad.at(i, j) += g.at(i, 0);
            }
        }
    };
    return out;
}

Tape::Id Tape::sum_all(Id a) {
    const Mat& A = value(a);
    Mat C(1, 1);
    for (const double v : A.a) C.a[0] += v;
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, out] {
        const double g = nodes_[out].grad.a[0];
        for (double& v : nodes_[a].grad.a) v += g;
    };
    return out;
}

Tape::Id Tape::mean_all(Id a) {
    const Mat& A = value(a);
    const double n = static_cast<double>(A.size());
    Mat C(1, 1);
    for (const double v : A.a) C.a[0] += v;
    C.a[0] /= n;
    const Id out = push(std::move(C), {});
    nodes_[out].back = [this, a, n, out] {
        const double g = nodes_[out].grad.a[0] / n;
        for (double& v : nodes_[a].grad.a) v += g;
    };
    return out;
}

void Tape::backward(Id root) {
    check(root);
    require(value(root).rows == 1 && value(root).cols == 1,
            "backward: root must be scalar");
    nodes_[root].grad.a[0] = 1.0;
    for (Id id = root; id >= 0; --id) {
        if (nodes_[id].back) nodes_[id].back();
    }
}

}  // namespace mg
