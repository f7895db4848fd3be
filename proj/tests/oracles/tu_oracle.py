"""Independent TU parser: prints per-graph node counts, sorted 0-based undirected edges and remapped labels."""
import sys
from collections import defaultdict


def read(path):
    with open(path) as fh:
        return [line.strip() for line in fh if line.strip()]


def main(d, name):
    ind = [int(x) for x in read(f"{d}/{name}_graph_indicator.txt")]
    labels = [int(x) for x in read(f"{d}/{name}_graph_labels.txt")]
    remap = {v: i for i, v in enumerate(sorted(set(labels)))}
    first = {}
    for node, g in enumerate(ind):
        first.setdefault(g, node)
    edges = defaultdict(set)
    for line in read(f"{d}/{name}_A.txt"):
        i, j = (int(t) for t in line.split(","))
        g = ind[i - 1]
        u, v = i - 1 - first[g], j - 1 - first[g]
        edges[g].add((min(u, v), max(u, v)))
    for g in range(1, len(labels) + 1):
        print(g - 1, ind.count(g), remap[labels[g - 1]], sorted(edges[g]))


if __name__ == "__main__":
    main(*sys.argv[1:])
