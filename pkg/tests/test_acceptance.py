"""Acceptance criteria, one test each.

Every test prints a ``PASS`` or ``FAIL`` line (plus informational detail) to
the terminal even when pytest captures output, then asserts the criterion.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from ppf_attitude import harness as h
from ppf_attitude.attitude import quat_to_rot, rot_angle
from ppf_attitude.so3 import dist_identity, pa, skew, trace, ups, vex
from ppf_attitude.wahba import ObservationSet, davenport_q, m_bar_and_lambda_min, svd_wahba

from conftest import random_rotations

N_SEEDS = 20


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail="", info=()):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else ""))
            for line in info:
                print(f"    info: {line}")

    return emit


def quiet(cfg, keep_gyro_bias=False):
    vectors = tuple(replace(v, bias=(0.0, 0.0, 0.0), noise_std=0.0) for v in cfg.vectors)
    gyro = replace(cfg.gyro, noise_std=0.0)
    if not keep_gyro_bias:
        gyro = replace(gyro, bias=(0.0, 0.0, 0.0))
    return replace(cfg, vectors=vectors, gyro=gyro)


def T(A):
    return np.swapaxes(A, -1, -2)


def outer(a, b):
    return a[..., :, None] * b[..., None, :]


# -- identity suite -------------------------------------------------------------------


def test_identity_suite(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 10_000
    a, b = rng.standard_normal((2, n, 3))
    A, B = rng.standard_normal((2, n, 3, 3))
    S = B + T(B)  # symmetric
    R = random_rotations(rng, n)
    I = np.eye(3)
    err = {}

    err["skew(a x b) = b a^T - a b^T"] = skew(np.cross(a, b)) - (outer(b, a) - outer(a, b))
    err["skew(R a) = R skew(a) R^T"] = skew(np.einsum("nij,nj->ni", R, a)) - R @ skew(a) @ T(R)
    na2 = np.sum(a * a, axis=-1)[:, None, None]
    err["skew(a)^2 = -|a|^2 I + a a^T"] = skew(a) @ skew(a) - (-na2 * I + outer(a, a))
    comm = A @ B - B @ A
    err["[A,B] = AB - BA"] = comm - (np.einsum("nij,njk->nik", A, B) - np.einsum("nij,njk->nik", B, A))
    err["Tr[A,B] = 0"] = trace(comm)
    err["Tr(S skew a) = 0"] = trace(S @ skew(a))
    lhs = trace(A @ skew(a))
    err["Tr(A skew a) = Tr(Pa(A) skew a)"] = lhs - trace(pa(A) @ skew(a))
    err["Tr(A skew a) = -2 vex(Pa A)^T a"] = lhs + 2 * np.sum(vex(pa(A)) * a, axis=-1)
    Sa = np.einsum("nij,nj->ni", S, a)
    err["S skew a + skew a S = Tr(S) skew a - skew(S a)"] = (
        S @ skew(a) + skew(a) @ S - (trace(S)[:, None, None] * skew(a) - skew(Sa))
    )
    d = dist_identity(R)
    err["|ups R|^2 = 4 (1 - |R|_I) |R|_I"] = np.sum(ups(R) ** 2, axis=-1) - 4 * (1 - d) * d
    worst = {k: float(np.max(np.abs(v))) for k, v in err.items()}
    identities_ok = all(v <= 1e-12 for v in worst.values())

    # the bound of ||M R||_I by its anti-symmetric part, R restricted away from the unstable set
    R2 = random_rotations(rng, 3 * n)
    R2 = R2[trace(R2) > -1 + 1e-3][:n]
    Q = random_rotations(rng, n)
    lam = rng.uniform(0.05, 1.0, (n, 3))
    lam *= 3.0 / lam.sum(axis=1, keepdims=True)
    M = Q @ (lam[:, :, None] * T(Q))
    _, lam_min = m_bar_and_lambda_min(M)
    y = ups(M @ R2)
    bound = 2.0 / lam_min * np.sum(y * y, axis=-1) / (1.0 + trace(np.linalg.solve(M, M @ R2)))
    dist_MR = 0.25 * trace(I - M @ R2)
    slack = float(np.min(bound - dist_MR))
    bound_ok = len(R2) == n and slack >= -1e-12

    elapsed = time.perf_counter() - start
    ok = identities_ok and bound_ok and elapsed < 5.0
    info = [f"{k}: max |err| {v:.2e}" for k, v in worst.items()]
    info.append(f"ups(MR) bound over {len(R2)} samples: min slack {slack:.3e}")
    report("identity suite", ok, f"{elapsed:.2f} s", info)
    assert identities_ok, worst
    assert bound_ok, slack
    assert elapsed < 5.0


# -- exact recovery -------------------------------------------------------------------


def test_exact_recovery(report):
    start = time.perf_counter()
    rng = np.random.default_rng(99)
    n = 1000
    R = random_rotations(rng, n)
    refs = rng.standard_normal((n, 3, 3))
    refs /= np.linalg.norm(refs, axis=-1, keepdims=True)
    obs = ObservationSet(refs, refs @ R, [1.4, 1.4, 0.2])
    R_svd = svd_wahba(obs)
    R_dav = quat_to_rot(davenport_q(obs))
    e_svd = float(np.max(rot_angle(T(R) @ R_svd)))
    e_dav = float(np.max(rot_angle(T(R) @ R_dav)))
    e_pair = float(np.max(rot_angle(T(R_svd) @ R_dav)))
    elapsed = time.perf_counter() - start
    ok = max(e_svd, e_dav, e_pair) < 1e-8 and elapsed < 2.0
    report(
        "exact recovery", ok, f"{elapsed:.2f} s",
        [f"max angle error: svd {e_svd:.2e}, davenport {e_dav:.2e}, svd vs davenport {e_pair:.2e}"],
    )  # fmt: skip
    assert max(e_svd, e_dav, e_pair) < 1e-8
    assert elapsed < 2.0


# -- equilibrium ----------------------------------------------------------------------


def test_equilibrium(report):
    cfg = quiet(h.continuous_config(duration=10.0, dt=1e-3, window=(0.0, None), estimate_initial=h.InitialAttitude()))
    assert cfg.n_steps == 10_000
    worst, info = 0.0, []
    for form in h.FORMS:
        for kind, res in h.run_experiment(replace(cfg, form=form)).items():
            peak = float(np.max(res.record["dist"])) if res.summary.completed else float("inf")
            worst = max(worst, peak)
            info.append(f"{kind}/{form}: {len(res.record) - 1} steps, max dist {peak:.2e}")
    ok = worst < 1e-9
    report("equilibrium", ok, f"max dist {worst:.2e}", info)
    assert ok


# -- representation equivalence ---------------------------------------------------------


def test_representation_equivalence(report):
    # benchmark start (178 degrees) and gyro bias; sensors noise-free
    cfg = quiet(h.continuous_config(duration=1.0, dt=1e-4, window=(0.0, None)), keep_gyro_bias=True)
    mat = h.run_experiment(replace(cfg, form="cont"))
    qt = h.run_experiment(replace(cfg, form="quat"))
    worst, info = 0.0, []
    for kind in mat:
        a, b = mat[kind], qt[kind]
        done = a.summary.completed and b.summary.completed
        gap = float(np.max(rot_angle(T(a.record.R_hat) @ b.record.R_hat))) if done else float("inf")
        worst = max(worst, gap)
        info.append(f"{kind}: max angle gap {gap:.2e} rad, final dist {a.record['dist'][-1]:.3e}")
    ok = worst < 1e-6
    report("representation equivalence", ok, f"max gap {worst:.2e} rad", info)
    assert ok


# -- discrete/continuous consistency ------------------------------------------------------


def test_discrete_continuous_order(report):
    # 60 degrees: at the benchmark's 178 degrees these steps are not yet asymptotic
    init = h.InitialAttitude(60.0, (4, 1, 5))
    base = quiet(h.continuous_config(duration=1.0, window=(0.0, None), estimate_initial=init))
    dts = (4e-3, 2e-3, 1e-3)
    finals = {}
    for dt in dts:
        res = h.run_experiment(replace(base, form="disc", dt=dt))
        finals[dt] = {k: r.record.R_hat[-1] for k, r in res.items() if r.summary.completed}
    ref = h.run_experiment(replace(base, form="cont", integrator="rk4", dt=dts[-1] / 8))
    orders, info = {}, []
    for kind in ("semi", "direct"):
        if not all(kind in finals[dt] for dt in dts):
            orders[kind] = float("nan")
            continue
        F = [finals[dt][kind] for dt in dts]
        d1, d2 = rot_angle(F[0].T @ F[1]), rot_angle(F[1].T @ F[2])
        orders[kind] = float(np.log2(d1 / d2))
        to_ref = [rot_angle(f.T @ ref[kind].record.R_hat[-1]) for f in F]
        info.append(
            f"{kind}: Richardson order {orders[kind]:.3f}; error vs fine continuous "
            + ", ".join(f"{e:.2e}" for e in to_ref)
        )
    ok = all(o >= 0.9 for o in orders.values())
    report("discrete/continuous consistency", ok, ", ".join(f"{k} {v:.3f}" for k, v in orders.items()), info)
    assert ok


# -- benchmark reproduction ---------------------------------------------------------------


def _abort_info(kind, stats):
    aborted = [s for s in stats if not s.completed]
    if not aborted:
        return f"{kind}: all runs completed"
    times = [s.abort_t for s in aborted]
    first = aborted[0].abort_reason.split(":")[0]
    return f"{kind}: {len(aborted)} aborted, t in [{min(times):.3f}, {max(times):.3f}] s (e.g. {first})"


def _explore_info(cfg, seeds):
    """Same runs with saturation instead of aborts; informational only."""
    out = []
    for kind, (stats, _) in h.run_seeds(replace(cfg, policy="explore"), seeds).items():
        means = np.array([s.mean for s in stats])
        hit = sum(s.internal_breaches > 0 for s in stats)
        out.append(
            f"explore policy, {kind}: ensemble mean {means.mean():.3e}, envelope pass "
            f"{sum(s.envelope_passed for s in stats)}/{len(stats)}, saturated in {hit}/{len(stats)} runs"
        )
    return out


def test_continuous_benchmark(report):
    start = time.perf_counter()
    cfg = h.continuous_config()
    seeds = [cfg.seed ^ i for i in range(N_SEEDS)]
    res = h.run_seeds(cfg, seeds)
    elapsed = time.perf_counter() - start
    semi, direct = res["semi"][0], res["direct"][0]

    passes = {k: sum(s.envelope_passed for s in v[0]) for k, v in res.items()}
    ens = {}
    for k, (stats, _) in res.items():
        done = [s.mean for s in stats if s.completed]
        ens[k] = float(np.mean(done)) if done else float("nan")
    paired = sum(
        a.completed and b.completed and a.mean <= b.mean for a, b in zip(semi, direct)
    )  # fmt: skip

    ok_a = all(p >= 19 for p in passes.values())
    ok_b = all(1e-3 <= m <= 2e-2 for m in ens.values())
    ok_c = paired >= 15
    ok_t = elapsed < 60.0
    info = [
        f"envelope pass: semi {passes['semi']}/{N_SEEDS}, direct {passes['direct']}/{N_SEEDS}",
        f"ensemble mean over (1, 30) s of completed runs: semi {ens['semi']:.3e}, direct {ens['direct']:.3e}",
        f"paired seeds with semi <= direct: {paired}/{N_SEEDS}",
        _abort_info("semi", semi),
        _abort_info("direct", direct),
    ]
    info += _explore_info(cfg, seeds)
    report("continuous benchmark (a) envelope >= 19/20", ok_a, "", info)
    report("continuous benchmark (b) mean in [1e-3, 2e-2]", ok_b)
    report("continuous benchmark (c) semi <= direct in >= 15/20", ok_c)
    report("continuous benchmark runtime < 60 s", ok_t, f"{elapsed:.1f} s")
    assert ok_a, passes
    assert ok_b, ens
    assert ok_c, paired
    assert ok_t


def test_discrete_benchmark(report):
    cfg = h.discrete_config()
    d0 = float(dist_identity(np.array(h.DISCRETE_R_HAT0)))
    # oracle: (3 - trace) / 4 with the diagonal of the reference matrix
    assert d0 == pytest.approx((3 - (-0.8959 - 0.6998 + 0.6731)) / 4, abs=1e-12)
    seeds = [cfg.seed ^ i for i in range(N_SEEDS)]
    res = h.run_seeds(cfg, seeds, keep_full=True)
    good, info = {}, [f"dist(0) = {d0:.5f}"]
    for kind, (stats, recs) in res.items():
        finals = [r["dist"][-1] if s.completed else np.nan for s, r in zip(stats, recs)]
        good[kind] = sum(s.envelope_passed and f < cfg.ppf.xi_inf for s, f in zip(stats, finals))
        info.append(_abort_info(kind, stats))
    info += _explore_info(cfg, seeds)
    ok = all(g >= 19 for g in good.values())
    report("discrete benchmark", ok, ", ".join(f"{k} {v}/{N_SEEDS}" for k, v in good.items()), info)
    assert ok, good


# -- determinism -------------------------------------------------------------------------


def test_csv_determinism(report, tmp_path):
    cfg = h.continuous_config(duration=2.0, policy="explore", seed=17)
    digests = []
    for i in range(2):
        for kind, r in h.run_experiment(cfg).items():
            h.write_csv(r.record, tmp_path / f"{kind}_{i}.csv")
    same = all((tmp_path / f"{k}_0.csv").read_bytes() == (tmp_path / f"{k}_1.csv").read_bytes() for k in ("semi", "direct"))
    digests = [len((tmp_path / f"{k}_0.csv").read_bytes()) for k in ("semi", "direct")]
    report("CSV determinism", same, f"{digests[0]} and {digests[1]} bytes compared")
    assert same
