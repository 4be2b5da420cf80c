import pytest

from alqa.economics import economics, savings
from alqa.errors import ContractError


def test_reference_scenario():
    # 1900 images at 31 s over 8 h days: ~2.045 person-days, x18 models ~36.8
    r = economics(1900)
    assert r.hours_saved == pytest.approx(1900 * 31 / 3600, abs=1e-9)
    assert r.person_days_per_model == pytest.approx(2.0451388888888886, abs=1e-6)
    assert round(r.person_days_per_model, 3) == 2.045
    assert r.fleet_days == pytest.approx(36.8125, abs=1e-6)
    assert round(r.fleet_days, 1) == 36.8


def test_zero_and_linearity():
    z = economics(0)
    assert z.hours_saved == 0 and z.person_days_per_model == 0 and z.fleet_days == 0
    a, b = economics(300), economics(600)
    assert b.hours_saved == pytest.approx(2 * a.hours_saved, rel=1e-12)
    assert b.person_days_per_model == pytest.approx(2 * a.person_days_per_model, rel=1e-12)
    with pytest.raises(ContractError):
        economics(-5)


def test_savings_arithmetic():
    s = savings(900, 1300)
    assert s.images_saved == 400
    assert s.fraction == pytest.approx(400 / 1300, abs=1e-12)
    assert savings(700, 700) == savings(700, 700)
    assert savings(700, 700).images_saved == 0
    assert savings(700, 700).fraction == 0.0
    # negative savings are reported as-is
    assert savings(1000, 800).images_saved == -200


def test_per_view_savings_totals():
    per_view = [400, 500, 600, 400]
    assert sum(per_view) == 1900
    assert sum(per_view) / len(per_view) == 475
