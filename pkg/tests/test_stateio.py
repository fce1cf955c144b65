"""State-file schema gates and round trips."""

import numpy as np
import pytest

from cohdist.errors import ParseError
from cohdist.hermat import random_density
from cohdist.stateio import dump_state, load_state, parse_state, state_to_dict


def doc_for(rho, **extra):
    doc = state_to_dict(rho)
    doc.update(extra)
    return doc


class TestParse:
    def test_roundtrip_exact(self, tmp_path, rng):
        rho = random_density(3, rng)
        path = tmp_path / "s.json"
        dump_state(rho, path)
        back, declared = load_state(path)
        assert declared is None
        assert np.max(np.abs(back - rho)) <= 1e-15

    def test_declared_base_roundtrip(self, tmp_path, rng):
        rho = np.kron(random_density(2, rng), random_density(2, rng))
        path = tmp_path / "s.json"
        dump_state(rho, path, declared_base={"dim_sigma": 2, "copies": 2})
        _, declared = load_state(path)
        assert declared == {"dim_sigma": 2, "copies": 2}

    def test_declared_base_must_match_dim(self, rng):
        doc = doc_for(random_density(3, rng), declared_base={"dim_sigma": 2, "copies": 2})
        with pytest.raises(ParseError):
            parse_state(doc)

    def test_renormalize_flag(self, rng):
        rho = random_density(2, rng)
        doc = doc_for(1.7 * rho)
        with pytest.raises(ParseError):
            parse_state(doc)  # trace way off without the flag
        doc["renormalize"] = True
        back, _ = parse_state(doc)
        assert np.max(np.abs(back - rho)) <= 1e-12

    def test_hermiticity_gate(self, rng):
        rho = random_density(2, rng).copy()
        rho[0, 1] += 1e-6
        with pytest.raises(ParseError):
            parse_state(doc_for(rho))

    def test_psd_gate(self):
        with pytest.raises(ParseError):
            parse_state(doc_for(np.diag([1.5, -0.5]).astype(complex)))

    def test_small_noise_is_cleaned(self, rng):
        rho = random_density(2, rng).copy()
        rho[0, 1] += 1e-11  # inside the 1e-9 file gate
        back, _ = parse_state(doc_for(rho))
        assert np.max(np.abs(back - back.conj().T)) == 0.0
        assert abs(np.trace(back).real - 1.0) < 1e-15

    def test_shape_gate(self):
        with pytest.raises(ParseError):
            parse_state({"dim": 2, "entries": [[1.0, 0.0], [0.0, 0.0]]})

    def test_not_an_object(self):
        with pytest.raises(ParseError):
            parse_state([1, 2, 3])
