import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from otsmooth import io
from otsmooth.datasets import make_grid
from otsmooth.exceptions import InvalidInputError
from otsmooth.potential import PotentialModel

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e300, max_value=1e300)


@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 3)), elements=finite),
       st.one_of(st.none(), st.floats(1e-12, 1e6)))
def test_model_roundtrip_exact(codes, eps):
    model = PotentialModel(codes, np.linspace(-1, 1, codes.shape[0]) / 3, eps)
    back = io.model_from_json(io.model_to_json(model))
    np.testing.assert_array_equal(back.codes, model.codes)
    np.testing.assert_array_equal(back.heights, model.heights)
    assert back.epsilon == model.epsilon


def test_model_field_order_and_format():
    text = io.model_to_json(PotentialModel([[0.5, -0.25]], [0.0], 0.1))
    assert list(json.loads(text)) == ["n", "d", "codes", "heights", "epsilon"]
    assert '"codes":[[5.0000000000000000e-01,-2.5000000000000000e-01]]' in text
    assert text.endswith("\n")


def test_model_shape_mismatch(tmp_path):
    with pytest.raises(InvalidInputError):
        io.model_from_json('{"n":2,"d":1,"codes":[[1.0]],"heights":[0.0],"epsilon":null}')
    with pytest.raises(InvalidInputError):
        io.model_from_json("not json")


def test_points_csv_roundtrip(tmp_path):
    X = np.random.default_rng(0).uniform(-1, 1, (20, 3))
    for header in (False, True):
        p = tmp_path / f"pts{header}.csv"
        io.save_points(X, p, header=header)
        np.testing.assert_array_equal(io.load_points(p), X)
    assert (tmp_path / "ptsTrue.csv").read_text().splitlines()[0] == "x1,x2,x3"


def test_points_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0.1,0.2\n0.3\n")
    with pytest.raises(InvalidInputError):
        io.load_points(p)
    p.write_text("0.1,abc\n")
    with pytest.raises(InvalidInputError):
        io.load_points(p)
    p.write_text("")
    assert io.load_points(p, d=2).shape == (0, 2)
    with pytest.raises(InvalidInputError):
        io.points_to_csv([[np.nan]])


def test_dataset_header(tmp_path):
    X, spec = make_grid(n=30, seed=1)
    p = tmp_path / "grid.csv"
    io.save_dataset(X, spec, p, kind="grid")
    lines = p.read_text().splitlines()
    assert lines[0] == "# dataset grid" and lines[1].startswith("# mixture_spec {")
    Y, spec2, kind = io.load_dataset(p, with_kind=True)
    np.testing.assert_array_equal(X, Y)
    assert kind == "grid" and spec2.to_dict() == spec.to_dict()
    # plain CSVs load without a spec
    q = tmp_path / "plain.csv"
    io.save_points(X, q)
    assert io.load_dataset(q)[1] is None


def test_svg_is_deterministic_and_layered():
    rng = np.random.default_rng(0)
    obs, gen = rng.uniform(-1, 1, (5, 2)), rng.uniform(-1, 1, (7, 2))
    a = io.scatter_svg(obs, gen, title="a < b")
    assert a == io.scatter_svg(obs, gen, title="a < b")
    assert a.index('<g id="observed">') < a.index('<g id="generated">')
    assert a.count("<circle") == 12
    assert 'viewBox="-1.1 -1.1 2.2 2.2"' in a
    assert "a &lt; b" in a
    # y is flipped so that up is positive
    one = io.scatter_svg([[0.5, 0.25]], np.empty((0, 2)))
    assert 'cx="0.50000" cy="-0.25000"' in one
