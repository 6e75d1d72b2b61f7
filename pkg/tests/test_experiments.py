import json
import math
import random
from decimal import Decimal, localcontext

import pytest

from paspec import (
    DomainError,
    StudyConfig,
    azuma_bound,
    concentration_study,
    convergence_study,
    n_ball_bound,
)
from paspec.experiments import azuma_constant


def big_n_ball(K: int, r: int) -> int:
    # geometric series in closed form, exact in Python integers
    return r + 2 if K == 1 else (K ** (r + 2) - 1) // (K - 1)


def precise_azuma(n, eps, r, m, K, sup_f) -> float:
    with localcontext() as ctx:
        ctx.prec = 60
        c = Decimal(2 * (m + 1) * big_n_ball(K, r))
        expo = -(Decimal(eps) ** 2) * n / (2 * c**2 * Decimal(sup_f) ** 2)
        return float(2 * expo.exp())


def test_ball_bound_examples():
    assert n_ball_bound(2, 1) == 7
    assert n_ball_bound(1, 0) == 2
    assert n_ball_bound(10, 2) == 1111
    assert azuma_constant(0, 2, 1) == 12


def test_ball_bound_overflow_guard():
    with pytest.raises(DomainError):
        n_ball_bound(10**6, 5)


def test_formulas_against_high_precision():
    rng = random.Random(20261015)
    for _ in range(20):
        K, r, m = rng.randint(1, 40), rng.randint(0, 4), rng.randint(2, 6)
        n = rng.randint(10, 10**7)
        eps, sup_f = rng.uniform(1e-3, 5.0), rng.uniform(0.1, 1.0)
        assert n_ball_bound(K, r) == big_n_ball(K, r)
        assert azuma_constant(r, m, K) == 2 * (m + 1) * big_n_ball(K, r)
        assert abs(azuma_bound(n, eps, r, m, K, sup_f) - precise_azuma(n, eps, r, m, K, sup_f)) <= 1e-12


def test_azuma_monotone_in_eps():
    vals = [azuma_bound(10**4, eps, 0, 2, 1, 1.0) for eps in (0.01, 0.1, 0.5, 1.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert azuma_bound(10**4, 50.0, 0, 2, 1, 1.0) == 0.0


def test_azuma_doubling_n():
    for eps in (0.05, 0.3):
        one = azuma_bound(5000, eps, 1, 2, 3, 1.0)
        two = azuma_bound(10000, eps, 1, 2, 3, 1.0)
        assert two == pytest.approx(one**2 / 2, rel=1e-12)


def test_azuma_guards():
    with pytest.raises(DomainError):
        azuma_bound(0, 0.1, 0, 2, 1, 1.0)
    with pytest.raises(DomainError):
        azuma_bound(10, -0.1, 0, 2, 1, 1.0)


def test_config_guards():
    with pytest.raises(DomainError):
        StudyConfig(2, (), (1,))
    with pytest.raises(DomainError):
        StudyConfig(2, (100,), (1,), z_list=(1 - 1j,))
    with pytest.raises(DomainError):
        StudyConfig(2, (100,), (1,), K_rule="sqrt")
    assert StudyConfig(3, (10,), (1,)).K_for(10) == 3
    assert StudyConfig(2, (10,), (1,)).K_for(4000) == 8


def test_digest_tracks_config():
    a = StudyConfig(2, (100, 200), range(10))
    assert a.digest() == StudyConfig(2, [100, 200], list(range(10))).digest()
    assert a.digest() != StudyConfig(2, (100, 200), range(11)).digest()


def test_study_seed_guards():
    with pytest.raises(DomainError, match="10 seeds"):
        concentration_study(StudyConfig(2, (50,), range(9)))
    with pytest.raises(DomainError, match="3 sizes"):
        convergence_study(StudyConfig(2, (50, 100), range(5)))
    with pytest.raises(DomainError):
        convergence_study(StudyConfig(2, (50, 100, 200), range(4)))


def test_k_zero_has_no_fluctuation():
    rep = concentration_study(StudyConfig(2, (60, 120), range(10), k_list=(0,)))
    for row in rep.tables["summary"]:
        assert row["mean"] == 1.0 and row["std"] == 0.0
    assert all(s["S"] == 1.0 for s in rep.tables["samples"])


def test_concentration_report_contents(tmp_path):
    cfg = StudyConfig(2, (80, 160), range(10), k_list=(2, 4))
    rep = concentration_study(cfg)
    assert set(rep.flags) == {
        "std_nonincreasing_k2", "gap_decreasing_k2",
        "std_nonincreasing_k4", "gap_decreasing_k4",
    }
    for s in rep.tables["samples"]:
        assert 0.0 <= s["S_trunc"] <= s["S"] <= 1.0
    paths = rep.write(tmp_path)
    assert paths[0].endswith(f"concentration_{cfg.digest()}.json")
    doc = json.loads(open(paths[0]).read())
    assert doc["config"]["seeds"] == list(range(10))
    assert doc["tables"]["summary"][0]["n"] == 80
    assert open(paths[1]).readline().startswith("n,k,K,")


def test_studies_deterministic_and_jobs_independent():
    cfg = StudyConfig(2, (40, 80, 160), range(5), k_list=(2, 3), z_list=(1 + 1.5j, 0.5 + 0.2j))
    a = convergence_study(cfg, jobs=1)
    b = convergence_study(cfg, jobs=2)
    assert a.to_json() == b.to_json()
    cfg10 = StudyConfig(2, (50, 100), range(10))
    assert concentration_study(cfg10).to_json() == concentration_study(cfg10, jobs=3).to_json()


def test_convergence_report_contents():
    cfg = StudyConfig(2, (40, 80, 160), range(5), k_list=(2,), bins=8)
    rep = convergence_study(cfg)
    assert len(rep.tables["deltas"]) == 2
    assert "kolmogorov_decreasing" in rep.flags
    assert "kolmogorov_raw_decreasing" not in rep.flags
    hist = [r for r in rep.tables["histogram"] if r["n"] == 40]
    assert len(hist) == 8
    assert math.isclose(sum(r["mass"] for r in hist), 1.0, abs_tol=1e-12)
    for row in rep.tables["per_n"]:
        mz = complex(row["m_re[1+1.5i]"], row["m_im[1+1.5i]"])
        assert mz.imag > 0 and abs(mz) <= 1 / 1.5
