from pathlib import Path

import pytest

import numpy as np

from interleave.autodiff import GradMap
from interleave.supernet import OpKind, CellSpec, ArchParams, Architecture, discretize
from interleave._constants._constants import SCHEMA_VERSION
from tests._utils import EXACT_TOL


class TestArchParams:
    @pytest.mark.fast()
    def test_zeros_uniform(self, cell: CellSpec):
        arch = ArchParams.zeros(cell)

        assert sorted(arch) == sorted(e.key for e in cell.edges)
        for e in cell.edges:
            np.testing.assert_allclose(arch.mixture_weights()[e.key], np.full(e.n_ops, 1.0 / e.n_ops), rtol=1e-15)

    @pytest.mark.fast()
    def test_mixture_sums_to_one(self, random_arch: ArchParams):
        for w in random_arch.mixture_weights().values():
            assert abs(w.sum() - 1.0) <= EXACT_TOL

    @pytest.mark.fast()
    def test_check_cell(self, cell: CellSpec):
        other = CellSpec.dense(n_nodes=4, width=3)
        with pytest.raises(ValueError, match="do not match"):
            ArchParams.zeros(other).check_cell(cell)

    @pytest.mark.fast()
    def test_check_cell_shape(self, cell: CellSpec):
        e = cell.edges[0]
        arch = ArchParams({**ArchParams.zeros(cell), e.key: np.zeros(e.n_ops + 1)})
        with pytest.raises(ValueError, match="to have shape"):
            arch.check_cell(cell)

    @pytest.mark.fast()
    def test_step(self, random_arch: ArchParams):
        key = next(iter(random_arch))
        g = GradMap({key: np.ones(random_arch[key].shape)})
        new = random_arch.step(g, 0.5)

        np.testing.assert_array_equal(new[key].data, random_arch[key].data - 0.5)
        for k in random_arch:
            if k != key:
                np.testing.assert_array_equal(new[k].data, random_arch[k].data)


class TestDiscretize:
    @pytest.mark.fast()
    def test_one_hot(self, cell: CellSpec, rng: np.random.Generator):
        choice = {e.key: int(rng.integers(e.n_ops)) for e in cell.edges}
        arch = ArchParams({e.key: np.eye(e.n_ops)[choice[e.key]] * 10.0 for e in cell.edges})
        discrete = discretize(arch, cell)

        assert discrete.is_discrete
        for e, d in zip(cell.edges, discrete.edges):
            assert d.ops == (e.ops[choice[e.key]],)

    @pytest.mark.fast()
    def test_uniform_tie_break(self, cell: CellSpec):
        discrete = discretize(ArchParams.zeros(cell), cell)

        assert all(d.ops == (e.ops[0],) for e, d in zip(cell.edges, discrete.edges))

    @pytest.mark.fast()
    def test_brute_force_argmax(self, cell: CellSpec, random_arch: ArchParams):
        discrete = discretize(random_arch, cell)

        for e, d in zip(cell.edges, discrete.edges):
            w = random_arch.mixture_weights()[e.key]
            best = max(range(e.n_ops), key=lambda i: (w[i], -i))
            assert d.ops == (e.ops[best],)

    @pytest.mark.fast()
    def test_shift_invariance(self, cell: CellSpec, random_arch: ArchParams):
        assert discretize(random_arch, cell) == discretize(random_arch.shift(-7.0), cell)


class TestArchitecture:
    @pytest.mark.fast()
    def test_to_dict(self, cell: CellSpec, random_arch: ArchParams):
        data = Architecture.from_arch(random_arch, cell).to_dict()

        assert list(data) == ["schema_version", "cell", "nodes", "edges"]
        assert data["schema_version"] == SCHEMA_VERSION
        assert data["cell"] == 0
        for item, d in zip(data["edges"], discretize(random_arch, cell).edges):
            assert list(item) == ["from", "to", "op", "weights"]
            assert item["op"] == str(d.ops[0])
            assert sum(item["weights"].values()) == pytest.approx(1.0, abs=EXACT_TOL)

    @pytest.mark.fast()
    def test_yaml(self, tmp_path: Path, cell: CellSpec, random_arch: ArchParams):
        arch = Architecture.from_arch(random_arch, cell)
        path = tmp_path / "arch.yaml"
        arch.to_yaml(path)

        assert Architecture.from_yaml(path) == arch

    @pytest.mark.fast()
    def test_discrete_without_weights(self):
        data = {
            "schema_version": SCHEMA_VERSION,
            "nodes": [2, 2],
            "edges": [{"from": 0, "to": 1, "op": "linear_tanh"}],
        }
        arch = Architecture.from_dict(data)

        assert arch.retained == {"e0_1": OpKind.LINEAR_TANH}
        assert arch.discretize().is_discrete

    @pytest.mark.fast()
    def test_schema_version(self):
        with pytest.raises(ValueError, match="schema_version"):
            Architecture.from_dict({"schema_version": SCHEMA_VERSION + 1, "nodes": [2, 2], "edges": []})

    @pytest.mark.fast()
    def test_missing_weights(self, cell: CellSpec):
        with pytest.raises(ValueError, match="Missing mixture weights"):
            Architecture(cell, {})
