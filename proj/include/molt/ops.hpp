#pragma once

#include <cstdint>
#include <vector>

#include "molt/tape.hpp"

// Differentiable matrix operations. Each op records a backward closure that
// accumulates d(loss)/d(input) from d(loss)/d(output); the rules are spelled
// out op by op in ops.cpp so they can be audited against the finite
// difference suite.

namespace molt {

DiffNode matmul(DiffNode a, DiffNode b);     // a[m,k] * b[k,n]
DiffNode matmul_nt(DiffNode a, DiffNode b);  // a[m,k] * b[n,k]^T
DiffNode add(DiffNode a, DiffNode b);
DiffNode add_scaled(DiffNode a, double ca, DiffNode b, double cb);
DiffNode add_row_broadcast(DiffNode x, DiffNode row);  // x[m,n] + row[1,n] per row
DiffNode scale(DiffNode x, double c);
DiffNode hadamard(DiffNode a, DiffNode b);

DiffNode softmax_rows(DiffNode x);
DiffNode layer_norm(DiffNode x, DiffNode gamma, DiffNode beta, double eps);
DiffNode l2_normalize(DiffNode x, double eps);  // x is 1xn
DiffNode sum_pool_stride(DiffNode x, int s);    // x is 1xn, s | n
DiffNode mean_pool_rows(DiffNode x);

DiffNode stack_rows(const std::vector<DiffNode>& rows);  // k of 1xn -> kxn
DiffNode sum_entries(DiffNode x);                        // -> 1x1
DiffNode mean_scalars(const std::vector<DiffNode>& xs);  // 1x1 each -> 1x1

// Cross-entropy against a single class index; logits are 1xC.
DiffNode softmax_cross_entropy(DiffNode logits, int label);
// Mean per-class sigmoid cross-entropy against a 0/1 vector; logits are 1xC.
DiffNode sigmoid_cross_entropy(DiffNode logits, const std::vector<uint8_t>& targets);

// x[m,n] + row[1,n] via affine chain: matmul then bias broadcast.
DiffNode affine(DiffNode x, DiffNode w, DiffNode b);

}  // namespace molt
