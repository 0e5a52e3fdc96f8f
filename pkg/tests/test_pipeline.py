"""The constants chain: cost, free/damped resolvent bounds, Mlog, envelopes."""

import math

import mpmath as mp
import numpy as np
import pytest

import hypowave as hw
from hypowave.pipeline import DEFAULT_ALPHA

mp.mp.dps = 40


def standard_chain(kappa=1.0, k=2.0, model="wave"):
    G = hw.CostFunction(C=1.0, kappa=kappa, k=k)
    p = hw.PipelineParams(T=4.0, c0=1.0)
    gf = hw.free_resolvent_bound(G, p)
    M = {"wave": hw.wave_M, "schrodinger": hw.schrodinger_M, "plate": hw.plate_M}[model](gf)
    return G, p, gf, M


def test_cost_function_validation():
    with pytest.raises(ValueError):
        hw.CostFunction(C=0.0, kappa=1.0, k=2.0)
    with pytest.raises(ValueError):
        hw.CostFunction(C=1.0, kappa=-1.0, k=2.0)
    with pytest.raises(ValueError):
        hw.CostFunction(C=1.0, kappa=1.0, k=0.5)
    g = hw.CostFunction(C=2.0, kappa=0.5, k=1.0)
    assert g(3.0) == pytest.approx(2.0 * math.exp(1.5))


def test_pipeline_params_K():
    p = hw.PipelineParams(T=4.0, c0=1.0)
    assert p.K == pytest.approx(3.0)
    with pytest.raises(ValueError):
        hw.PipelineParams(T=4.0, c0=1.0, alpha=0.0)
    with pytest.raises(ValueError):
        hw.PipelineParams(T=4.0, c0=1.0, lambda0=0.5)


def test_free_resolvent_bound_degenerate_cost():
    # T=4, c0=1, C_rhs=0, alpha=1 and constant cost 1: 3 (lam + sqrt2 + 1)
    G = hw.CostFunction(C=1.0, kappa=0.0, k=1.0)
    p = hw.PipelineParams(T=4.0, c0=1.0, alpha=1.0)
    gf = hw.free_resolvent_bound(G, p)
    for lam in (1.0, 2.0, 7.0):
        assert gf.value(lam) == pytest.approx(3.0 * (lam + math.sqrt(2) + 1.0), rel=1e-14)


def test_free_resolvent_bound_default_alpha_shift():
    # alpha = 2 - sqrt2 makes the argument shift exactly 2
    G = hw.CostFunction(C=1.0, kappa=1.0, k=2.0)
    p = hw.PipelineParams(T=4.0, c0=1.0)
    assert p.alpha == pytest.approx(DEFAULT_ALPHA)
    gf = hw.free_resolvent_bound(G, p)
    lam = 3.0
    pref = p.K / DEFAULT_ALPHA
    assert gf.value(lam) == pytest.approx(pref * (lam + 2.0) * math.exp((lam + 2.0) ** 2), rel=1e-12)


def test_free_resolvent_bound_high_precision_value():
    # independent high-precision oracle for the normalized chain value at 3:
    # with K (1 + C_rhs) = 1 and alpha = 2 - sqrt2 the value is
    # (1/(2-sqrt2)) * 5 * e^25
    oracle = float((1 / (2 - mp.sqrt(2))) * 5 * mp.e**25)
    G = hw.CostFunction(C=1.0, kappa=1.0, k=2.0)
    p = hw.PipelineParams(T=4.0, c0=1.0)
    gf = hw.free_resolvent_bound(G, p)
    assert gf.value(3.0) / p.K == pytest.approx(oracle, rel=1e-11)
    assert oracle == pytest.approx(6.146002596875e11, rel=1e-11)


def test_free_resolvent_bound_domain_floor():
    G = hw.CostFunction(C=1.0, kappa=1.0, k=2.0)
    p = hw.PipelineParams(T=4.0, c0=1.0, lambda0=2.0)
    gf = hw.free_resolvent_bound(G, p)
    with pytest.raises(ValueError, match="below its domain"):
        gf.value(1.0)


def test_damped_resolvent_bound_values():
    assert hw.damped_resolvent_bound(1.0, 1.0, 1.0, 1.0) == pytest.approx(
        3.0 + 4.0 * math.sqrt(2), abs=1e-12
    )
    assert hw.damped_resolvent_bound(0.0, 0.0, 1.0, 2.0) == 0.0
    assert hw.damped_resolvent_bound(2.0, 0.0, 1.0, 4.0) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        hw.damped_resolvent_bound(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        hw.damped_resolvent_bound(-1.0, 1.0, 1.0, 1.0)


def test_damped_resolvent_bound_monotonicity():
    base = hw.damped_resolvent_bound(1.0, 1.0, 1.0, 2.0)
    assert hw.damped_resolvent_bound(1.5, 1.0, 1.0, 2.0) >= base
    assert hw.damped_resolvent_bound(1.0, 1.5, 1.0, 2.0) >= base
    assert hw.damped_resolvent_bound(1.0, 1.0, 1.5, 2.0) >= base
    assert hw.damped_resolvent_bound(1.0, 1.0, 1.0, 3.0) <= base


def test_model_M_compositions():
    one = hw.BoundFunction.constant(1.0)
    Mw = hw.wave_M(one)
    for lam in (1.0, 4.0):
        assert Mw.value(lam) == pytest.approx(math.sqrt(1 + lam * lam), rel=1e-14)
    exp_fn = hw.BoundFunction(lambda s: s, label="e^s")
    Ms = hw.schrodinger_M(exp_fn)
    assert Ms.value(4.0) == pytest.approx(math.exp(4.0), rel=1e-14)
    lin = hw.BoundFunction(lambda s: math.log(s), label="s")
    Mp = hw.plate_M(lin)
    assert Mp.value(9.0) == pytest.approx(81.0, rel=1e-12)


def test_m_log_values():
    one = hw.BoundFunction.constant(1.0)
    ML = hw.m_log(one)
    for s in (1.0, 10.0):
        assert ML.value(s) == pytest.approx(math.log(2) + math.log(1 + s), rel=1e-14)
    # oracle: M(s) = e^s at s=1 gives e (log(1+e) + log 2)
    oracle = float(mp.e * (mp.log(1 + mp.e) + mp.log(2)))
    exp_fn = hw.BoundFunction(lambda s: s, label="e^s")
    assert hw.m_log(exp_fn).value(1.0) == pytest.approx(oracle, rel=1e-13)
    assert oracle == pytest.approx(5.453984766556, rel=1e-12)
    lin = hw.BoundFunction(lambda s: math.log(s), label="s")
    assert hw.m_log(lin).value(3.0) == pytest.approx(2.0 * 3.0 * math.log(4.0), rel=1e-14)


def test_monotone_chain_invariant():
    _, _, gf, M = standard_chain()
    ML = hw.m_log(M)
    s = np.linspace(1.0, 60.0, 1000)
    for fn in (gf, M, ML):
        vals = np.array([fn.log_value(x) for x in s])
        assert np.all(np.diff(vals) > 0)


def test_m_log_inverse_roundtrip():
    # log-target roundtrip on the full kappa=1 chain (values overflow doubles)
    _, _, _, M = standard_chain(kappa=1.0)
    ML = hw.m_log(M)
    for s in np.linspace(1.0, 50.0, 21):
        s_back = hw.m_log_inverse(ML, log_t=ML.log_value(s))
        assert abs(s_back - s) <= 1e-9 * s
    # linear-target roundtrip on a chain that stays within double range
    _, _, _, Ms = standard_chain(kappa=0.05)
    MLs = hw.m_log(Ms)
    for s in np.linspace(1.0, 50.0, 21):
        assert hw.m_log_inverse(MLs, MLs.value(s)) == pytest.approx(s, rel=1e-9)


def test_m_log_inverse_closed_form():
    ML = hw.m_log(hw.BoundFunction.constant(1.0))
    for t in (2.0, 5.0):
        assert hw.m_log_inverse(ML, t) == pytest.approx(math.exp(t) / 2.0 - 1.0, rel=1e-10)


def test_m_log_inverse_clamping():
    ML = hw.m_log(hw.BoundFunction.constant(1.0, domain=(1.0, 1e6)))
    val, info = hw.m_log_inverse(ML, 1e-6, full_output=True)
    assert info.clamped_low and val == 1.0
    with pytest.raises(ValueError):
        hw.m_log_inverse(ML, math.inf)
    with pytest.raises(ValueError):
        hw.m_log_inverse(ML, 1.0, log_t=0.0)


def test_m_log_inverse_domain_extension():
    # target beyond the initial bracket; doubling must find it
    ML = hw.m_log(hw.BoundFunction(lambda s: math.log(s), domain=(1.0, 2.0)))
    t = ML.value(1000.0)
    assert hw.m_log_inverse(ML, t) == pytest.approx(1000.0, rel=1e-9)


def test_m_log_inverse_sqrt_log_asymptotics():
    # M(s) = e^{s^2}: the inverse grows like sqrt(log t); fitted exponent
    # within 2% over a window far enough out
    M = hw.BoundFunction(lambda s: s * s, label="e^{s^2}")
    ML = hw.m_log(M)
    ts = np.exp(np.linspace(math.log(1e50), math.log(1e300), 30))
    ss = np.array([hw.m_log_inverse(ML, t) for t in ts])
    slope, _, _ = hw.fit_log_linear(np.log(np.log(ts)), np.log(ss))
    assert slope == pytest.approx(0.5, rel=0.02)


def test_envelope_closed_form():
    M = hw.BoundFunction.constant(1.0)
    c, C1 = 2.0, 3.0
    env = hw.decay_envelope(M, 1, c, C1)
    for t in (4.0, 10.0):
        assert env(t) == pytest.approx(C1 / (math.exp(t / c) / 2.0 - 1.0), rel=1e-9)


def test_envelope_monotone_to_zero():
    # flat at the saturation value while t/(cj) is below the range of Mlog,
    # then strictly decreasing toward 0
    _, _, _, M = standard_chain(kappa=0.05)
    env = hw.decay_envelope(M, 1, 1.0, 1.0)
    ts = np.exp(np.linspace(math.log(10.0), math.log(1e12), 60))
    vals = np.array([env(t) for t in ts])
    assert np.all(np.diff(vals) <= 0)
    tail = vals[ts > 1e5]
    assert np.all(np.diff(tail) < 0)
    # the logarithmic envelope reaches any level eventually (log-time query)
    assert math.exp(env.log_value(log_t=1e8)) < 1e-3


def envelope_logfit(model, lo, hi, j=1, kappa=1.0):
    _, _, _, M = standard_chain(kappa=kappa, model=model)
    env = hw.decay_envelope(M, j, 1.0, 1.0)
    lts = np.exp(np.linspace(math.log(lo), math.log(hi), 40))
    loge = np.array([env.log_value(log_t=lt) for lt in lts])
    slope, _, r2 = hw.fit_log_linear(np.log(lts), loge)
    return slope, r2


def test_envelope_log_exponents():
    # wave chain with k=2 decays like log(t)^{-1/2}, schrodinger like
    # log(t)^{-1}; both fitted far out where the asymptotics has set in
    wave, _ = envelope_logfit("wave", 5e4, 5e5)
    schro, _ = envelope_logfit("schrodinger", 5e4, 5e5)
    assert wave == pytest.approx(-0.5, rel=0.03)
    assert schro == pytest.approx(-1.0, rel=0.03)
    assert schro / wave == pytest.approx(2.0, rel=0.03)


def test_envelope_doubling_j_doubles_exponent():
    s1, _ = envelope_logfit("wave", 1e5, 1e6, j=1)
    s2, _ = envelope_logfit("wave", 1e5, 1e6, j=2)
    assert s2 / s1 == pytest.approx(2.0, rel=1e-3)


def test_plate_chain_matches_schrodinger_rate():
    # plate M = lam G(sqrt(lam))^2 shares the schrodinger exponent up to the
    # polynomial factor
    plate, _ = envelope_logfit("plate", 1e5, 1e6)
    assert plate == pytest.approx(-1.0, rel=0.03)


def test_chain_consistency_domination():
    # M_log of the wave chain is dominated by C' e^{kp s^2} with
    # kp = 2 kappa (1 + delta), delta = 0.1; the constant is fixed on [2, 25]
    # and the bound then holds on the wider window [2, 100]
    for kappa in (0.5, 1.0, 2.0):
        _, _, _, M = standard_chain(kappa=kappa)
        ML = hw.m_log(M)
        kp = 2.0 * kappa * 1.1
        sfit = np.linspace(2.0, 25.0, 300)
        log_cprime = max(ML.log_value(x) - kp * x * x for x in sfit)
        swide = np.linspace(2.0, 100.0, 700)
        excess = max(ML.log_value(x) - kp * x * x - log_cprime for x in swide)
        assert excess <= 1e-9


def test_gap_curve_values():
    curve = hw.gap_curve(0.1, 1.0, 2.0)
    assert curve(2.0) == pytest.approx(-0.1 * math.exp(-4.0))
    assert curve(0.0) == pytest.approx(-0.1)
    assert curve(-3.0) == curve(3.0)
    with pytest.raises(ValueError):
        hw.gap_curve(0.0, 1.0, 2.0)


def test_envelope_polynomial_option_skips_log_correction():
    # with M(s) = s the uncorrected envelope inverts M directly:
    # M^{-1}(t/c) = t/c, so envelope = C_j c / t
    M = hw.BoundFunction(lambda s: math.log(s), label="s")
    env = hw.decay_envelope(M, 1, 2.0, 3.0, log_correction=False)
    for t in (10.0, 100.0):
        assert env(t) == pytest.approx(3.0 * 2.0 / t, rel=1e-9)
    corrected = hw.decay_envelope(M, 1, 2.0, 3.0)
    assert corrected(100.0) > env(100.0)  # the log correction is a loss


def test_certificate_trivial_and_exact():
    M = hw.BoundFunction.constant(1.0)
    cert = hw.certificate_from_measurements(M, 1, [])
    assert cert.C_j == 1.0 and cert.valid
    # measurements on the envelope are recovered exactly
    env = hw.decay_envelope(M, 1, 1.0, 2.5)
    ts = [3.0, 5.0, 9.0]
    measured = [(t, env(t)) for t in ts]
    cert = hw.certificate_from_measurements(M, 1, measured, c=1.0)
    assert cert.C_j == pytest.approx(2.5, rel=1e-9)
    assert cert.valid


def test_certificate_flags_violations():
    M = hw.BoundFunction.constant(1.0)
    env = hw.decay_envelope(M, 1, 1.0, 1.0)
    measured = [(3.0, 2.0 * env(3.0)), (5.0, 0.5 * env(5.0))]
    cert = hw.certificate_from_measurements(M, 1, measured, c=1.0, C_j=1.0)
    assert not cert.valid
    assert cert.violations == [measured[0]]
