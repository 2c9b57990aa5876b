import json

import numpy as np
import pytest

from trsc.builder import CANNED_C, CANNED_H, build_psi, psi_to_f0, random_admissible_mus
from trsc.convexlib import (
    CubicPoly, PowerLaw, Quadratic, QuadraticOracle, ScalarOracle, TrscInstance, TrslInstance,
)
from trsc.errors import InstanceFormatError
from trsc.global_solver import solve_global
from trsc.instance_io import (
    dumps_instance, instance_from_dict, instance_to_dict, load_candidate, load_instance,
    save_candidate, save_instance,
)
from trsc.local import enumerate_roots
from trsc.spectral import decompose


def test_trsl_key_order(example1):
    data = instance_to_dict(example1)
    assert list(data) == ["schema_version", "kind", "name", "n", "H", "c", "constraint", "f0"]
    assert data["kind"] == "trsl"
    assert data["constraint"] == {"a": 1.0, "b": 0.0}
    assert data["f0"] == {"kind": "quartic_example1"}


def test_example1_file_solves_the_same(example1, tmp_path):
    path = save_instance(example1, tmp_path / "ex1.json")
    loaded = load_instance(path)
    assert loaded.name == "example1"
    assert solve_global(loaded).mu == solve_global(example1).mu


def test_piecewise_f0_survives_the_file(example2, tmp_path):
    loaded = load_instance(save_instance(example2, tmp_path / "ex2.json"))
    ys = np.linspace(-1.0, 4.0, 51)
    np.testing.assert_allclose(loaded.f0.value(ys), example2.f0.value(ys), rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(loaded.f0.psi.breakpoints, example2.f0.psi.breakpoints)
    assert [r.mu for r in enumerate_roots(loaded)] == pytest.approx([r.mu for r in enumerate_roots(example2)])


@pytest.mark.parametrize("f0", [Quadratic(2.0, -0.5), PowerLaw(0.25, 2.0), CubicPoly(1.0, 2.0, 0.5)])
def test_scalar_families(f0):
    inst = TrslInstance(np.diag([-2.0, 1.0]), [0.5, 0.5], 1.5, 0.25, f0, name="fam")
    loaded = instance_from_dict(json.loads(dumps_instance(inst)))
    assert type(loaded.f0) is type(f0)
    assert loaded.f0.d1(1.0) == f0.d1(1.0)
    assert (loaded.a, loaded.b) == (1.5, 0.25)


def test_trsc_instance_file(tmp_path):
    inst = TrscInstance(
        np.diag([-3.0, 1.0]), [1.0, 0.0],
        ScalarOracle(PowerLaw(1.0, 3.0)),
        (QuadraticOracle([[0.5]], [-1.0], -0.2), QuadraticOracle.affine([1.0], -4.0)),
        y_start=[1.0], name="coupled",
    )
    data = instance_to_dict(inst)
    assert list(data) == ["schema_version", "kind", "name", "n", "H", "c", "m", "f0", "constraints", "y_start"]
    loaded = load_instance(save_instance(inst, tmp_path / "coupled.json"))
    assert isinstance(loaded, TrscInstance)
    assert loaded.k == 2 and loaded.m == 1
    assert isinstance(loaded.f0_vec, ScalarOracle)
    np.testing.assert_allclose(loaded.f_vec.Q, [[0.5]])
    assert loaded.constraints[1].value([5.0]) == pytest.approx(1.0)
    np.testing.assert_allclose(loaded.y_start, [1.0])


def test_name_defaults_to_file_stem(tmp_path):
    data = instance_to_dict(TrslInstance(np.diag([-1.0, 2.0]), [1.0, 1.0], 1.0, 0.0, Quadratic(1.0)))
    path = tmp_path / "unnamed_case.json"
    path.write_text(json.dumps(data))
    assert load_instance(path).name == "unnamed_case"


def _base():
    return instance_to_dict(TrslInstance(np.diag([-1.0, 2.0]), [1.0, 1.0], 1.0, 0.0, Quadratic(1.0)))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(schema_version=2),
    lambda d: d.update(H=[[-1.0, 0.5], [0.0, 2.0]]),
    lambda d: d.update(c=[1.0, 1.0, 1.0]),
    lambda d: d.update(kind="qcqp"),
    lambda d: d.pop("constraint"),
    lambda d: d.update(f0={"kind": "sextic"}),
    lambda d: d["constraint"].update(a=-1.0),
    lambda d: d.update(f0={"kind": "power_law", "alpha": 1.0, "d": 0.5}),
])
def test_malformed_instances(mutate):
    data = _base()
    mutate(data)
    with pytest.raises(InstanceFormatError):
        instance_from_dict(data)


def test_unreadable_files(tmp_path):
    with pytest.raises(InstanceFormatError):
        load_instance(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(InstanceFormatError):
        load_instance(broken)
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(InstanceFormatError):
        load_instance(listed)


def test_candidate_files(tmp_path):
    path = save_candidate(tmp_path / "cand.json", [1.0, -2.0], 0.5, 3.0)
    cand = load_candidate(path)
    np.testing.assert_array_equal(cand["x"], [1.0, -2.0])
    np.testing.assert_array_equal(cand["y"], [0.5])
    np.testing.assert_array_equal(cand["mus"], [3.0])

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"x": [1.0]}))
    with pytest.raises(InstanceFormatError):
        load_candidate(bad)


def _random_trsc(rng, n=4, m=2):
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((m, m))
    return TrscInstance(
        0.5 * (A + A.T), rng.standard_normal(n),
        QuadraticOracle(B @ B.T + np.eye(m), rng.standard_normal(m), rng.standard_normal()),
        (QuadraticOracle(np.eye(m) / 3, rng.standard_normal(m), -abs(rng.standard_normal())),
         QuadraticOracle.affine(rng.standard_normal(m), rng.standard_normal())),
        y_start=rng.standard_normal(m), name="random_trsc",
    )


def test_save_of_load_is_byte_identical(example1, example2, rng, tmp_path):
    spectrum = decompose(CANNED_H, CANNED_C)
    generated = TrslInstance(CANNED_H, CANNED_C, 1.0, 0.0,
                             psi_to_f0(build_psi(spectrum, random_admissible_mus(spectrum, 2, rng))),
                             name="generated_d2")
    for inst in (example1, example2, generated, _random_trsc(rng)):
        first = save_instance(inst, tmp_path / f"{inst.name}.json")
        second = save_instance(load_instance(first), tmp_path / f"{inst.name}_again.json")
        assert second.read_bytes() == first.read_bytes()
