"""Independent NumPy forward pass for the fixed 5-node instance used in gnn_test.cpp.

Parameters are filled tensor by tensor with value(t, i) = 0.5 * sin(0.37 * (i + 1) + 0.11 * t),
t the tensor's position in canonical order, i the row-major element index.
"""
import numpy as np

np.set_printoptions(precision=17)


def fill(shapes):
    return [np.array([0.5 * np.sin(0.37 * (i + 1) + 0.11 * t) for i in range(r * c)]).reshape(r, c)
            for t, (r, c) in enumerate(shapes)]


n, f, h, k = 5, 3, 4, 2
edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]
A = np.zeros((n, n))
for u, v in edges:
    A[u, v] = A[v, u] = 1.0
X = np.array([[np.cos(0.5 * i + 0.3 * j) for j in range(f)] for i in range(n)])
relu = lambda m: np.maximum(m, 0.0)

# GCN: conv0, conv1, classifier_weight, classifier_bias
W0, W1, Wc, bc = fill([(f, h), (h, h), (h, k), (1, k)])
At = A + np.eye(n)
d = At.sum(axis=1)
An = At / np.sqrt(np.outer(d, d))
H = relu(An @ relu(An @ X @ W0) @ W1)
print("gcn", repr((H.mean(axis=0) @ Wc + bc[0]).tolist()))

# GIN: mlp1_0, mlp1_1, mlp2_0, mlp2_1, eps, classifier_weight, classifier_bias
P = fill([(f, h), (h, h), (h, h), (h, h), (1, 2), (h, k), (1, k)])
H = X
for l in range(2):
    S = (1 + P[4][0, l]) * H + A @ H
    H = relu(relu(S @ P[l]) @ P[2 + l])
print("gin", repr((H.mean(axis=0) @ P[5] + P[6][0]).tolist()))
