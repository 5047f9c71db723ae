"""Regenerate the bundled datasets under data/.

toy_50    small smoke-test instance for CLI examples and quick runs
bench_500 block-structured benchmark used by the directional acceptance
          checks (propagation models should beat plain factorization here)

Both files are canonical TSV with checksum headers; regeneration is
deterministic, so a clean checkout and a rebuilt data/ agree byte for byte.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from linkprop.data_io import dataset_from_graph, write_canonical
from linkprop.synthetic import block_bipartite

SPECS = {
    "toy_50": dict(num_users=30, num_items=20, num_blocks=2,
                   mean_degree=8, in_ratio=0.9, seed=3),
    "bench_500": dict(num_users=300, num_items=200, num_blocks=5,
                      mean_degree=10, in_ratio=0.95, seed=7),
}


def main():
    outdir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(outdir, exist_ok=True)
    for name, spec in SPECS.items():
        graph = block_bipartite(**spec)
        path = os.path.join(outdir, f"{name}.tsv")
        write_canonical(dataset_from_graph(graph), path)
        print(f"{path}: {graph.partition.num_users} users, "
              f"{graph.partition.num_items} items, {graph.num_edges} links")


if __name__ == "__main__":
    main()
