"""Smoke test for the voronoi_complex extension module.

Build and install first, e.g. `pip install ./crates/py`, then run
`python python/smoke_test.py`.
"""

import json
import tempfile

import voronoi_complex as vc


def main():
    minimum, vectors = vc.minimal_vectors([[2, 1], [1, 2]])
    assert minimum == "2" and len(vectors) == 3, (minimum, vectors)
    assert vc.is_perfect([[2, 1], [1, 2]])
    assert not vc.is_perfect([[1, 0], [0, 1]])
    assert vc.smith_normal_form([[2, 0], [0, 3]]) == ["1", "6"]

    counts = [len(vc.perfect_forms(n)) for n in (2, 3, 4)]
    assert counts == [1, 1, 2], counts

    cx = vc.Complex(4, "sl")
    assert cx.verify_d_squared()
    h = cx.homology()
    assert [g.free_rank for g in h] == [0, 0, 0, 0, 0, 0, 1, 0, 0, 1]
    print(cx.cohomology_table())

    with tempfile.TemporaryDirectory() as d:
        out = vc.run_pipeline(3, "gl", d, emit="json")
        doc = json.loads(out)
        assert doc["cohomology"]["vcd"] == 3
    print("smoke test passed")


if __name__ == "__main__":
    main()
