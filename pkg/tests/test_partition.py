import itertools
from collections import Counter

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from stealcsp.core import domain_from_values, domain_range, domain_size, domain_values
from stealcsp.models import build_langford, build_queens
from stealcsp.oracle import enumerate_solutions, product_tuples
from stealcsp.partition import PartitionError, Strategy, eager_split, even_split, split, verify_partition

from conftest import stores

D = domain_from_values
ABC = domain_range(0, 2)  # a, b, c = 0, 1, 2


def exact_cover(original, parts):
    """Brute-force check by tuple enumeration."""
    seen = Counter(t for p in parts for t in product_tuples(p))
    return set(seen) == set(product_tuples(original)) and all(c == 1 for c in seen.values())


class TestEven:
    def test_run_sizes(self):
        parts = even_split((domain_range(0, 9),), 4)
        assert [domain_values(p[0]) for p in parts] == [[0, 1], [2, 3], [4, 5, 6], [7, 8, 9]]

    def test_singletons_when_d_equals_k(self):
        parts = even_split((domain_range(0, 3),), 4)
        assert [p[0] for p in parts] == [D([0]), D([1]), D([2]), D([3])]

    def test_k1_identity(self):
        s = (domain_range(0, 2), D([4]))
        assert even_split(s, 1) == [s]

    def test_first_large_enough_variable(self):
        s = (D([1, 2]), domain_range(0, 5), domain_range(0, 9))
        parts = even_split(s, 3)
        assert all(p[0] == s[0] and p[2] == s[2] for p in parts)
        assert [domain_values(p[1]) for p in parts] == [[0, 1], [2, 3], [4, 5]]

    def test_too_small(self):
        with pytest.raises(PartitionError):
            even_split((D([1, 2]), D([3])), 3)

    @given(stores(max_value=7), st.integers(2, 6))
    def test_formula(self, s, k):
        try:
            parts = even_split(s, k)
        except PartitionError:
            assert all(domain_size(d) < k for d in s)
            return
        i = next(i for i, d in enumerate(s) if domain_size(d) >= k)
        d = domain_size(s[i])
        sizes = [domain_size(p[i]) for p in parts]
        assert sizes == [d // k] * (k - d % k) + [d // k + 1] * (d % k)
        flat = [v for p in parts for v in domain_values(p[i])]
        assert flat == domain_values(s[i])
        assert verify_partition(s, parts)


class TestEager:
    def test_three_variables_six_parts(self):
        a, b, c = 0, 1, 2
        parts = eager_split(6, [(ABC, ABC, ABC)])
        expected = {
            (D([b]), D([a]), ABC),
            (D([b]), D([b, c]), ABC),
            (D([c]), ABC, ABC),
            (D([a]), D([a]), ABC),
            (D([a]), D([b]), ABC),
            (D([a]), D([c]), ABC),
        }
        assert len(parts) == 6
        assert set(parts) == expected
        assert exact_cover((ABC, ABC, ABC), parts)

    def test_base_case(self):
        parts = eager_split(3, [(domain_range(0, 3),)])
        assert [p[0] for p in parts] == [D([0]), D([1]), D([2, 3])]

    def test_k1_identity(self):
        s = (ABC, D([1]))
        assert eager_split(1, [s]) == [s]

    def test_rest_of_queue_untouched(self):
        p1, p2 = (ABC, ABC), (D([1]), ABC)
        parts = eager_split(3, [p1, p2])
        assert parts[-1] == p2
        assert len(parts) == 3 + 2 - 1

    def test_solved_head_passes_through(self):
        solved = (D([1]), D([2]))
        parts = eager_split(3, [solved, (ABC, D([0]))])
        assert parts[0] == solved
        assert len(parts) == 3 + 2 - 1  # the usual k + len(queue) - 1

    def test_shortfall_when_space_too_small(self):
        parts = eager_split(10, [(D([1, 2]), D([0]))])
        assert len(parts) == 2
        assert exact_cover((D([1, 2]), D([0])), parts)

    @given(stores(n_min=1, n_max=4, max_value=5), st.integers(1, 6))
    def test_partition_property(self, s, k):
        parts = eager_split(k, [s])
        assert verify_partition(s, parts)
        vol = 1
        for d in s:
            vol *= domain_size(d)
        assert len(parts) == min(k, vol)

    @given(stores(n_min=1, n_max=4, max_value=6, min_size=2), st.integers(2, 6))
    def test_single_cut_when_k_fits(self, s, k):
        d = domain_size(s[0])
        assume(k <= d)
        parts = eager_split(k, [s])
        assert len(parts) == k
        assert sum(1 for p in parts if domain_size(p[0]) == 1) >= k - 1


class TestVerify:
    def test_duplicate_value(self):
        s = (domain_range(0, 3),)
        assert not verify_partition(s, [(D([0, 1]),), (D([1, 2, 3]),)])

    def test_missing_value(self):
        s = (domain_range(0, 3),)
        assert not verify_partition(s, [(D([0, 1]),), (D([3]),)])

    def test_part_outside_original(self):
        assert not verify_partition((D([0, 1]),), [(D([0]),), (D([1, 2]),)])

    @given(stores(n_min=1, n_max=3, max_value=3), st.lists(stores(n_min=1, n_max=3, max_value=3), max_size=4))
    def test_agrees_with_enumeration(self, s, parts):
        parts = [p for p in parts if len(p) == len(s)]
        assert verify_partition(s, parts) == exact_cover(s, parts)

    @given(stores(n_min=2, n_max=3, max_value=3), st.integers(2, 5), st.sampled_from(list(Strategy)))
    def test_split_outputs_agree_with_enumeration(self, s, k, strategy):
        try:
            parts = split(s, k, strategy)
        except PartitionError:
            return
        assert verify_partition(s, parts)
        assert exact_cover(s, parts)


@pytest.mark.parametrize("problem", [build_queens(5), build_queens(6), build_langford(2, 4)], ids=["q5", "q6", "l24"])
@pytest.mark.parametrize("strategy", list(Strategy))
@pytest.mark.parametrize("k", [2, 3, 5])
def test_solutions_preserved(problem, strategy, k):
    parts = split(problem.initial, k, strategy)
    whole = Counter(enumerate_solutions(problem))
    pieces = Counter(itertools.chain.from_iterable(enumerate_solutions(problem, p) for p in parts))
    assert whole == pieces
