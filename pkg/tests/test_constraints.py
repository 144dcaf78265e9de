import itertools

import numpy as np
import pytest

from divopt import (
    PartitionConstraint,
    Subset,
    UniformConstraint,
    extend_to_basis,
    feasible_swaps,
    is_final_feasible,
    is_independent,
    rank,
)


def all_independent_sets(n, c):
    out = []
    for size in range(n + 1):
        for items in itertools.combinations(range(n), size):
            s = Subset.from_items(n, items)
            if is_independent(s, c):
                out.append(s)
    return out


class TestIsIndependent:
    def test_empty_always_independent(self):
        for c in (UniformConstraint(0), UniformConstraint(3), PartitionConstraint(((0, 1), (2, 3)), (1, 1))):
            assert is_independent(Subset.empty(4), c)

    def test_partition_cap_exceeded(self):
        c = PartitionConstraint(((0, 1), (2, 3)), (1, 1))
        assert not is_independent(Subset.from_items(4, [0, 1]), c)

    def test_uniform_at_bound(self):
        assert is_independent(Subset.from_items(5, [0, 1, 2]), UniformConstraint(3))
        assert not is_independent(Subset.from_items(5, [0, 1, 2, 3]), UniformConstraint(3))

    def test_exact_mode_final_feasibility(self):
        c = UniformConstraint(3, exact=True)
        assert is_independent(Subset.from_items(5, [0]), c)
        assert not is_final_feasible(Subset.from_items(5, [0]), c)
        assert is_final_feasible(Subset.from_items(5, [0, 1, 2]), c)


class TestRank:
    def test_uniform(self):
        assert rank(UniformConstraint(5)) == 5

    def test_partition_min_of_size_and_cap(self):
        c = PartitionConstraint(((0, 1, 2, 3), (4, 5)), (2, 3))
        assert rank(c) == 2 + 2

    def test_empty_part_contributes_zero(self):
        c = PartitionConstraint(((), (0, 1)), (7, 1))
        assert rank(c) == 1


class TestExtendToBasis:
    def test_uniform_from_empty_takes_lowest_indices(self):
        out = extend_to_basis(Subset.empty(3), UniformConstraint(2))
        assert out.members().tolist() == [0, 1]

    def test_basis_unchanged(self):
        c = UniformConstraint(2)
        basis = Subset.from_items(4, [1, 3])
        assert extend_to_basis(basis, c) == basis

    def test_partition_scan(self):
        c = PartitionConstraint(((0, 1), (2,)), (1, 1))
        out = extend_to_basis(Subset.from_items(3, [1]), c)
        assert out.members().tolist() == [1, 2]

    def test_dependent_input_rejected(self):
        with pytest.raises(ValueError):
            extend_to_basis(Subset.from_items(3, [0, 1, 2]), UniformConstraint(2))

    def test_output_size_equals_rank(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(4, 11))
            cut = int(rng.integers(1, n))
            c = PartitionConstraint(
                (tuple(range(cut)), tuple(range(cut, n))),
                (int(rng.integers(0, cut + 1)), int(rng.integers(0, n - cut + 1))),
            )
            seed = Subset.empty(n)
            for item in rng.permutation(n):
                trial = seed.copy()
                trial.add(int(item))
                if is_independent(trial, c) and rng.random() < 0.4:
                    seed = trial
            assert len(extend_to_basis(seed, c)) == rank(c)


class TestMatroidAxioms:
    CONSTRAINTS = [
        (5, UniformConstraint(2)),
        (6, UniformConstraint(4)),
        (6, PartitionConstraint(((0, 1, 2), (3, 4, 5)), (1, 2))),
        (7, PartitionConstraint(((0, 1), (2, 3, 4), (5, 6)), (1, 1, 2))),
    ]

    @pytest.mark.parametrize("n,c", CONSTRAINTS)
    def test_hereditary_exhaustive(self, n, c):
        for s in all_independent_sets(n, c):
            members = s.members().tolist()
            for size in range(len(members) + 1):
                for sub in itertools.combinations(members, size):
                    assert is_independent(Subset.from_items(n, sub), c)

    @pytest.mark.parametrize("n,c", CONSTRAINTS)
    def test_augmentation_exhaustive(self, n, c):
        family = all_independent_sets(n, c)
        for x in family:
            for y in family:
                if len(x) <= len(y):
                    continue
                extra = [v for v in x.members() if v not in y]
                augmented = []
                for v in extra:
                    trial = y.copy()
                    trial.add(int(v))
                    augmented.append(is_independent(trial, c))
                assert any(augmented)


class TestFeasibleSwaps:
    def test_uniform_all_pairs(self):
        c = UniformConstraint(2)
        swaps = set(feasible_swaps(Subset.from_items(3, [0, 1]), c))
        assert swaps == {(0, 2), (1, 2)}

    def test_partition_within_part_slack(self):
        c = PartitionConstraint(((0, 1), (2, 3)), (1, 1))
        swaps = set(feasible_swaps(Subset.from_items(4, [0, 2]), c))
        assert swaps == {(0, 1), (2, 3)}

    def test_full_ground_set_has_no_swaps(self):
        c = UniformConstraint(3)
        assert list(feasible_swaps(Subset.from_items(3, [0, 1, 2]), c)) == []

    def test_non_basis_rejected(self):
        with pytest.raises(ValueError):
            list(feasible_swaps(Subset.from_items(4, [0]), UniformConstraint(2)))

    @pytest.mark.parametrize("n,c", TestMatroidAxioms.CONSTRAINTS)
    def test_yields_exactly_the_independent_exchanges(self, n, c):
        basis = extend_to_basis(Subset.empty(n), c)
        yielded = set(feasible_swaps(basis, c))
        expected = set()
        for v in basis.members():
            for u in basis.nonmembers():
                trial = basis.copy()
                trial.discard(int(v))
                trial.add(int(u))
                if is_independent(trial, c):
                    expected.add((int(v), int(u)))
        assert yielded == expected
