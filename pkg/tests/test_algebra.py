import itertools

import numpy as np
import pytest

from cgolab import algebra
from cgolab.algebra import BLADES, GradedForm

RNG = np.random.default_rng(2024)


def random_form(rng=RNG):
    return GradedForm(rng.standard_normal(8) + 1j * rng.standard_normal(8))


def random_one_form(rng=RNG):
    return GradedForm.covector(rng.standard_normal(3) + 1j * rng.standard_normal(3))


# ---------------------------------------------------------------------------
# independent oracles, deliberately sharing no code with the package tables
# ---------------------------------------------------------------------------

def oracle_wedge_sign(a, b):
    """Sign of dx^a ^ dx^b by explicit inversion count."""
    idx = list(a) + list(b)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i, j in itertools.combinations(range(len(idx)), 2):
        if idx[i] > idx[j]:
            sign = -sign
    return sign, tuple(sorted(idx))


def oracle_hodge_blade(a):
    """Complement blade and sign via exhaustive orientation search.

    For every ordering of the complement, solves a ^ (sign * ordering) = +vol
    and re-expresses the answer in the sorted basis; all orderings must agree.
    """
    comp = tuple(i for i in (1, 2, 3) if i not in a)
    answers = set()
    for perm in itertools.permutations(comp):
        orient, merged = oracle_wedge_sign(a, perm)
        assert merged == (1, 2, 3) and orient in (-1, 1)
        to_sorted, psorted = oracle_wedge_sign(perm, ())
        answers.add((psorted, orient * to_sorted))
    assert len(answers) == 1
    return answers.pop()


def oracle_wedge(u, v):
    out = np.zeros(8, dtype=complex)
    for ia, a in enumerate(BLADES):
        for ib, b in enumerate(BLADES):
            sign, merged = oracle_wedge_sign(a, b)
            if sign:
                out[algebra.BLADE_INDEX[merged]] += sign * u[ia] * v[ib]
    return out


def oracle_hodge(u):
    out = np.zeros(8, dtype=complex)
    for ia, a in enumerate(BLADES):
        blade, sign = oracle_hodge_blade(a)
        out[algebra.BLADE_INDEX[blade]] += sign * u[ia]
    return out


def oracle_vee(v, u):
    """Dense evaluation of the defining sign-and-star formula per blade pair."""
    n = 3
    out = np.zeros(8, dtype=complex)
    for ia, a in enumerate(BLADES):
        m = len(a)
        for ib, b in enumerate(BLADES):
            l = len(b)
            ea = np.zeros(8, dtype=complex)
            ea[ia] = v[ia]
            eb = np.zeros(8, dtype=complex)
            eb[ib] = u[ib]
            term = oracle_hodge(oracle_wedge(ea, oracle_hodge(eb)))
            out += ((-1) ** ((n + m - l) * (l - m))) * term
    return out


# ---------------------------------------------------------------------------
# wedge
# ---------------------------------------------------------------------------

def test_wedge_table_matches_permutation_oracle():
    for ia in range(8):
        for ib in range(8):
            u = np.zeros(8, dtype=complex)
            v = np.zeros(8, dtype=complex)
            u[ia] = 1.0
            v[ib] = 1.0
            assert np.array_equal(algebra.wedge(u, v), oracle_wedge(u, v))


def test_wedge_basic_examples():
    dx1 = GradedForm.blade((1,))
    dx2 = GradedForm.blade((2,))
    dx12 = GradedForm.blade((1, 2))
    assert np.allclose(dx1.wedge(dx2).data, dx12.data)
    assert np.allclose(dx2.wedge(dx1).data, -dx12.data)
    assert np.allclose(dx1.wedge(dx1).data, 0.0)
    # scalar multiplication case
    s = GradedForm.scalar(2 + 1j)
    dx23 = GradedForm.blade((2, 3))
    assert np.allclose(s.wedge(dx23).data, ((2 + 1j) * dx23).data)


def test_wedge_anticommutation_exhaustive_and_random():
    for ia, a in enumerate(BLADES):
        for ib, b in enumerate(BLADES):
            u = np.zeros(8)
            v = np.zeros(8)
            u[ia] = 1.0
            v[ib] = 1.0
            sign = (-1) ** (len(a) * len(b))
            assert np.array_equal(algebra.wedge(u, v), sign * algebra.wedge(v, u))
    rng = np.random.default_rng(7)
    for _ in range(1000):
        gu = rng.integers(0, 4)
        gv = rng.integers(0, 4)
        u = algebra.grade_select(rng.standard_normal(8) + 1j * rng.standard_normal(8), gu)
        v = algebra.grade_select(rng.standard_normal(8) + 1j * rng.standard_normal(8), gv)
        lhs = algebra.wedge(u, v)
        rhs = (-1) ** (gu * gv) * algebra.wedge(v, u)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


# ---------------------------------------------------------------------------
# hodge
# ---------------------------------------------------------------------------

def test_hodge_examples():
    one = GradedForm.scalar(1.0)
    assert np.allclose(one.hodge().data, GradedForm.volume().data)
    # *dx2 = dx3^dx1 = -(dx1^dx3)
    dx2 = GradedForm.blade((2,))
    assert np.allclose(dx2.hodge().data, GradedForm.blade((1, 3), -1.0).data)


def test_hodge_matches_orientation_oracle():
    for ia in range(8):
        u = np.zeros(8, dtype=complex)
        u[ia] = 1.0
        assert np.array_equal(algebra.hodge(u), oracle_hodge(u))


def test_double_hodge_is_identity_on_blades():
    for ia in range(8):
        u = np.zeros(8, dtype=complex)
        u[ia] = 1.0
        assert np.array_equal(algebra.hodge(algebra.hodge(u)), u)


# ---------------------------------------------------------------------------
# inner product
# ---------------------------------------------------------------------------

def test_inner_examples():
    dx12 = GradedForm.blade((1, 2))
    assert dx12.inner(dx12) == 1.0
    idx1 = GradedForm.blade((1,), 1j)
    assert idx1.inner(idx1) == pytest.approx(-1.0)


def test_inner_star_invariance_and_star_wedge_form():
    for _ in range(50):
        u = random_form()
        v = random_form()
        assert u.inner(v) == pytest.approx(u.hodge().inner(v.hodge()), abs=1e-12)
        # <u, v> = *(u ^ *v) summed over grades, scalar part
        total = 0.0 + 0.0j
        for l in range(4):
            ul = u.grade(l)
            vl = v.grade(l)
            total += complex(algebra.hodge(algebra.wedge(ul.data, algebra.hodge(vl.data)))[0])
        assert u.inner(v) == pytest.approx(total, abs=1e-12)


# ---------------------------------------------------------------------------
# vee
# ---------------------------------------------------------------------------

def test_vee_table_matches_dense_oracle():
    for ia in range(8):
        for ib in range(8):
            v = np.zeros(8, dtype=complex)
            u = np.zeros(8, dtype=complex)
            v[ia] = 1.0
            u[ib] = 1.0
            assert np.allclose(algebra.vee(v, u), oracle_vee(v, u), atol=1e-15)


def test_vee_examples():
    dx1 = GradedForm.blade((1,))
    assert np.allclose(dx1.vee(dx1).data, GradedForm.scalar(1.0).data)
    dx12 = GradedForm.blade((1, 2))
    dx3 = GradedForm.blade((3,))
    assert np.allclose(dx12.vee(dx3).data, 0.0)


def test_vee_wedge_adjunction():
    for _ in range(200):
        w = random_form()
        v = random_form()
        u = random_form()
        lhs = w.wedge(v).inner(u)
        rhs = w.inner(v.vee(u))
        assert abs(lhs - rhs) < 1e-12


def test_adjunction_fails_under_sign_fault():
    w = GradedForm.blade((1,))
    v = GradedForm.blade((2,))
    u = GradedForm.blade((1, 2))
    with algebra.sign_fault_injected():
        lhs = w.wedge(v).inner(u)
        rhs = w.inner(v.vee(u))
        assert abs(lhs - rhs) > 0.5
    assert abs(w.wedge(v).inner(u) - w.inner(v.vee(u))) < 1e-15


def test_commutator_identity():
    # u v (v ^ w) - v ^ (u v w) = (-1)^l <u, v> w for 1-forms u, v
    for _ in range(100):
        u = random_one_form()
        v = random_one_form()
        for l in range(4):
            w = random_form().grade(l)
            lhs = u.vee(v.wedge(w)) - v.wedge(u.vee(w))
            rhs = ((-1) ** l) * u.inner(v) * w
            assert np.max(np.abs(lhs.data - rhs.data)) < 1e-12


def test_corollary_product_identity():
    for _ in range(100):
        u1 = random_one_form()
        v1 = random_one_form()
        for l in range(4):
            ul = random_form().grade(l)
            vl = random_form().grade(l)
            lhs = u1.vee(ul).inner(v1.vee(vl)) + v1.wedge(ul).inner(u1.wedge(vl))
            rhs = u1.inner(v1) * ul.inner(vl)
            assert abs(lhs - rhs) < 1e-12


# ---------------------------------------------------------------------------
# symmetric tensors
# ---------------------------------------------------------------------------

def test_sym_product_examples():
    dx1 = GradedForm.blade((1,))
    dx2 = GradedForm.blade((2,))
    t11 = dx1.sym_product(dx1)
    assert t11.entry(1, 1) == 1.0
    assert t11.entry(1, 2) == 0.0
    t12 = dx1.sym_product(dx2)
    assert t12.entry(1, 2) == 0.5
    assert t12.entry(2, 1) == 0.5
    assert t12.entry(1, 1) == 0.0


def test_sym_product_commutes():
    for _ in range(50):
        u = random_one_form()
        v = random_one_form()
        assert np.allclose(u.sym_product(v).data, v.sym_product(u).data)


def test_sym_product_rejects_mixed_grades():
    u = GradedForm.scalar(1.0)
    v = GradedForm.blade((2,))
    with pytest.raises(ValueError):
        u.sym_product(v)


def test_graded_form_validation():
    with pytest.raises(ValueError):
        GradedForm(np.zeros(7))
    bad = np.zeros(8)
    bad[3] = np.inf
    with pytest.raises(ValueError):
        GradedForm(bad)
