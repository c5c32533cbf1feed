import json
import math
from pathlib import Path

import numpy as np
import pytest

import conjsim

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_version():
    assert conjsim.__version__.count(".") == 2


def test_c_of_matches_block_diagonal():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lifted = conjsim.c_of(m)
    want = np.zeros((6, 6), dtype=complex)
    want[:3, :3] = m
    want[3:, 3:] = m.conj()
    assert np.allclose(lifted, want, atol=0, rtol=0)


def test_sim_state_terms():
    psi = np.array([1, 1j]) / math.sqrt(2)
    rho = conjsim.sim_state(psi, 0.25, 0.3)
    v0 = np.kron([1, 0], psi)
    v1 = np.kron([0, 1], psi.conj())
    want = 0.25 * np.outer(v0, v0.conj()) + 0.75 * np.outer(v1, v1.conj())
    want += 0.3 * np.outer(v0, v1.conj()) + 0.3 * np.outer(v1, v0.conj())
    assert np.max(np.abs(rho - want)) < 1e-12


def test_real_simulation_is_real():
    psi = np.array([1, 1j]) / math.sqrt(2)
    assert np.max(np.abs(conjsim.real_simulation_state(psi).imag)) <= 1e-12
    y = np.array([[0, -1j], [1j, 0]])
    assert np.max(np.abs(conjsim.real_simulation_operator(y).imag)) <= 1e-12


def test_property_suite_and_hamiltonian():
    rep = conjsim.c_property_suite(dim=3, trials=20)
    assert len(rep["items"]) == 8
    h = np.array([[1.0, 0.5 - 0.2j], [0.5 + 0.2j, -0.3]])
    assert conjsim.hamiltonian_identity_residual(h, math.pi) <= 1e-8


def test_family_correlations_match_reference():
    ref = conjsim.correlations("extended")
    fam = conjsim.correlations("extended", a=0.25, c=0.3j)
    for key, entry in ref["joints"].items():
        assert abs(fam["joints"][key]["value"] - entry["value"]) <= 1e-10
    assert abs(ref["joints"]["joint(Y_A,Y_B)"]["value"] - 1.0) <= 1e-10


def test_selftest_family_and_fixture():
    rep = conjsim.selftest("extended", a=0.5, c=0.5)
    assert rep["verdict"] == "pass"
    bad = json.loads((FIXTURES / "corrupted_d.json").read_text())
    rep = conjsim.selftest(experiment=bad)
    assert rep["verdict"] == "fail"
    assert rep["failing_stage"] == "statistics"


def test_qkd_mismatched_flags():
    out = conjsim.qkd({"type": "mismatched", "flag_a": 0, "flag_b": 1}, 3000, 1)
    bases = out["analysis"]["qber"]["bases"]
    assert bases["Y"]["rate"] == 1.0
    assert bases["X"]["errors"] == 0 and bases["Z"]["errors"] == 0
    assert out["eve_corrected"]["bases"]["Y"]["errors"] == 0


def test_errors_map_to_value_error():
    with pytest.raises(ValueError):
        conjsim.qkd({"type": "honest", "a": 0.5, "c": 0.9}, 10, 1)
    with pytest.raises(ValueError):
        conjsim.selftest(experiment={"state": "psi_minus"})


def test_cli_in_process_is_deterministic():
    args = ["qkd", "--strategy", "zpremeasure", "a=0.5", "c=0.5", "--n", "2000", "--seed", "3"]
    first = conjsim.run_cli(args)
    second = conjsim.run_cli(args + ["--workers", "2"])
    assert first[0] == 0
    assert first[1] == second[1]
    assert conjsim.run_cli(["props", "--dim", "9"])[0] == 2
