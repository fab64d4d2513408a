"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Residual norms along a trajectory are the maximum over window positions
sampled every ``SAMPLE_EVERY`` time units, so a refinement ratio compares the
worst case of one resolution with the worst case of the next.
"""

import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from aleplate.config import parse_text
from aleplate.diagnostics.divcurl import divcurl_reconstruct
from aleplate.diagnostics.identities import (divergence_identity_residual, g_equation_residual,
                                             l2, tangency_residual, vorticity_and_residual)
from aleplate.diagnostics.ledgers import LEDGERS, boundary_terms, energy_ledger
from aleplate.diagnostics.window import JetWindow
from aleplate.geometry import maps_from_plate, piola_residual, solve_harmonic_extension
from aleplate.grid import Grid
from aleplate.initdata import initial_fields
from aleplate.mms import build_case, convergence_study, default_study, run_case
from aleplate.pressure import PressureLaw
from aleplate.runner import diagnose, read_status, run
from aleplate.solver import Solver, State, cfl_dt, steady_state

from conftest import analytic_window, verdict

LAW = PressureLaw()
SAMPLE_EVERY = 0.025


def orders(errors):
    return [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]


def fitted_order(h, errors):
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def start(grid, family="small", amplitude=1e-3):
    v0, R0, w1 = initial_fields(grid, LAW, family, amplitude)
    sol = Solver(grid, LAW)
    return sol, sol.initial_state(0.0, v0, R0, grid.bzeros(), w1)


def sampled_windows(grid, T, dtfac=0.5, family="small", amplitude=1e-3):
    """Yield full windows along a run at dt = dtfac * h3, about every SAMPLE_EVERY."""
    sol, s = start(grid, family, amplitude)
    dt = dtfac * grid.h3
    every = max(1, round(SAMPLE_EVERY / dt))
    win = JetWindow(LAW)
    win.push(s)
    for k in range(1, round(T / dt) + 1):
        s = sol.step(s, dt)
        win.push(s)
        if win.full and k % every == 0:
            yield win


def plate_cofactor(grid, eps=0.05):
    """Exact cofactor matrix of the single-mode plate eps cos x1 cos x2."""
    X1, X2, X3 = grid.mesh()
    k = np.sqrt(2.0)
    sh = np.sinh(k * X3) / np.sinh(k)
    ch = k * np.cosh(k * X3) / np.sinh(k)
    b = np.zeros((3, 3) + grid.shape)
    b[0, 0] = b[1, 1] = 1 + eps * np.cos(X1) * np.cos(X2) * ch
    b[2, 0] = eps * np.sin(X1) * np.cos(X2) * sh
    b[2, 1] = eps * np.cos(X1) * np.sin(X2) * sh
    b[2, 2] = 1.0
    return b


# -- 1 ------------------------------------------------------------------------


def test_c1_geometry_identities():
    t0 = time.perf_counter()
    levels = (17, 33, 65)
    cof_err, piola, exact_piola = [], [], []
    for n3 in levels:
        g = Grid(16, 16, n3)
        B1, B2 = g.bmesh()
        w = 0.05 * np.cos(B1) * np.sin(2 * B2) + 0.02 * np.sin(B1 + B2)
        m = maps_from_plate(g, w, 0.01 * np.cos(B2) + 0 * B1)
        cof_err.append(np.max(np.abs(m.b - m.J * m.a)) / np.max(np.abs(m.b)))
        piola.append(np.max(np.abs(piola_residual(m.b, g))))
        # the h3^4 part: discrete operators applied to the exact cofactor
        exact_piola.append(np.max(np.abs(piola_residual(plate_cofactor(g), g))))
    h = [1 / (n - 1) for n in levels]
    C = max(e / hh**4 for e, hh in zip(exact_piola, h))
    order = fitted_order(h, exact_piola)
    runtime = time.perf_counter() - t0
    ok = (max(cof_err) <= 1e-13
          and all(p <= 1e-12 + C * hh**4 for p, hh in zip(piola, h))
          and order >= 3.5 and runtime <= 10)
    verdict("C1 geometry identities", ok,
            f"max |b - J a|/|b| = {max(cof_err):.1e} (<= 1e-13); discrete Piola "
            f"{max(piola):.1e}, exact-cofactor Piola order {order:.2f} (>= 3.5); {runtime:.1f} s")


# -- 2 ------------------------------------------------------------------------


def test_c2_harmonic_extension():
    t0 = time.perf_counter()
    levels = (17, 33, 65)
    errs = []
    for n3 in levels:
        g = Grid(16, 16, n3)
        B1, B2 = g.bmesh()
        X1, X2, X3 = g.mesh()
        k = np.sqrt(2.0)
        ext = solve_harmonic_extension(np.cos(B1) * np.cos(B2), g)
        exact = np.cos(X1) * np.cos(X2) * np.sinh(k * X3) / np.sinh(k)
        errs.append(np.max(np.abs(ext - exact)))
    order = fitted_order([1 / (n - 1) for n in levels], errs)
    runtime = time.perf_counter() - t0
    ok = errs[-1] <= 1e-8 and order >= 3.5 and runtime <= 10
    verdict("C2 harmonic extension", ok,
            f"max error {errs[-1]:.2e} at N3 = 65 (<= 1e-8), order {order:.2f} (>= 3.5); "
            f"{runtime:.1f} s")


# -- 3 ------------------------------------------------------------------------


def test_c3_steady_state():
    t0 = time.perf_counter()
    g = Grid(32, 32, 33)
    s = steady_state(g, LAW)
    sol = Solver(g, LAW)
    dt = cfl_dt(s, LAW, 0.5)
    win = JetWindow(LAW)
    ledger_max = 0.0
    for k in range(1, 1001):
        s = sol.step(s, dt)
        win.push(s)
        if win.full and k % 100 == 0:
            for m in range(4):
                for which in LEDGERS:
                    ledger_max = max(ledger_max, energy_ledger(win, which, m).identity_residual)
    dev = max(np.max(np.abs(s.v)), np.max(np.abs(s.R - 1)), np.max(np.abs(s.w)),
              np.max(np.abs(s.w_t)))
    runtime = time.perf_counter() - t0
    ok = dev <= 1e-12 and ledger_max <= 1e-10 and runtime <= 60
    verdict("C3 steady state", ok,
            f"1000 steps at 32^2x33: max deviation {dev:.1e} (<= 1e-12), ledger residual "
            f"{ledger_max:.1e} (<= 1e-10); {runtime:.1f} s")


# -- 4 ------------------------------------------------------------------------


def test_c4_manufactured_solutions():
    t0 = time.perf_counter()
    rows = {}
    for name in "abc":
        res, rule = default_study(name, 3)
        rows[name] = convergence_study(build_case(name), res, rule)
    ord_a = [r.order for r in rows["a"][1:]]
    ord_b = [r.order for r in rows["b"][1:]]
    err_c = [r.err_l2 for r in rows["c"]]
    # tangential resolution: the error floor must not move when N doubles
    floors = {}
    for name, n3, dt in (("a", 33, 0.5 / 32), ("b", 17, 0.025)):
        errs = [run_case(build_case(name), Grid(n1, n1, n3), dt)[0] for n1 in (8, 16, 32)]
        floors[name] = max(abs(e / errs[0] - 1) for e in errs)
    runtime = time.perf_counter() - t0
    ok = (min(ord_a) >= 3.5 and min(ord_b) >= 2.5 and max(floors.values()) <= 1e-3
          and err_c[0] > err_c[1] > err_c[2] and runtime <= 900)
    verdict("C4 manufactured solutions", ok,
            f"(a) vertical orders {ord_a[0]:.2f}, {ord_a[1]:.2f} (>= 3.5); (b) temporal "
            f"orders {ord_b[0]:.2f}, {ord_b[1]:.2f} (>= 2.5); tangential floor change "
            f"{max(floors.values()):.1e}; (c) errors {err_c[0]:.1e} > {err_c[1]:.1e} > "
            f"{err_c[2]:.1e}; {runtime:.0f} s")


# -- 5 ------------------------------------------------------------------------


def mass_drift(n1, n3, T=0.5):
    g = Grid(n1, n1, n3)
    sol, s = start(g)
    m0 = s.mass()
    s = sol.advance(s, 0.5 * g.h3, round(T / (0.5 * g.h3)))
    return abs(s.mass() - m0) / m0


def test_c5_mass_conservation():
    fine = mass_drift(64, 65)
    levels = (17, 33, 65)
    drifts = [mass_drift(16, n3) for n3 in levels]
    order = fitted_order([1 / (n - 1) for n in levels], drifts)
    ok = fine <= 1e-6 and drifts[0] > drifts[1] > drifts[2] and order >= 3.5
    verdict("C5 mass conservation", ok,
            f"drift {fine:.1e} at 64^2x65, T = 0.5 (<= 1e-6); drifts "
            + ", ".join(f"{d:.1e}" for d in drifts) + f" at N3 = 17/33/65, order {order:.2f}")


# -- 6 ------------------------------------------------------------------------


def test_c6_tangency():
    worst = [0.0, 0.0]
    for family in ("small", "plate"):
        g = Grid(16, 16, 33)
        sol, s = start(g, family)
        for _ in range(32):
            s = sol.step(s, 0.5 * g.h3)
            bottom, top = tangency_residual(s)
            worst = [max(worst[0], bottom), max(worst[1], top)]
    ok = worst[0] <= 1e-12 and worst[1] <= 1e-10
    verdict("C6 tangency", ok,
            f"max bottom residual {worst[0]:.1e} (<= 1e-12), plate {worst[1]:.1e} "
            "(<= 1e-10) after every step")


# -- 7 and 8 ------------------------------------------------------------------

REFINE = (65, 129)


@pytest.fixture(scope="module")
def residual_refinement():
    """Max-over-time residual norms with (h3, dt) halved jointly."""
    out = []
    for n3 in REFINE:
        g = Grid(16, 16, n3)
        worst = np.zeros(5)
        for win in sampled_windows(g, T=0.6):
            gi, gt, gb = g_equation_residual(win).norms(g)
            _, vres = vorticity_and_residual(win)
            dres = divergence_identity_residual(win)
            worst = np.maximum(worst, [gi, gt, gb, l2(g, vres), l2(g, dres)])
        out.append(worst)
    return out[0] / out[1]


def rest_window():
    g = Grid(16, 16, 33)
    return analytic_window(g, lambda t: (g.zeros(3), np.ones(g.shape), g.bzeros(),
                                         g.bzeros()), law=LAW)


def test_c7_g_equation(residual_refinement):
    ratios = residual_refinement[:3]
    steady = g_equation_residual(rest_window())
    exact_zero = all(np.all(r == 0.0) for r in steady)
    ok = min(ratios) >= 8 and exact_zero
    verdict("C7 g-equation", ok,
            f"refinement factors interior {ratios[0]:.2f}, plate {ratios[1]:.2f}, bottom "
            f"{ratios[2]:.2f} for N3 {REFINE[0]} -> {REFINE[1]} (>= 8); steady residual "
            f"{'identically 0' if exact_zero else 'nonzero'}")


def test_c8_vorticity_and_divergence(residual_refinement):
    ratios = residual_refinement[3:]
    g = Grid(16, 16, 33)
    X1, X2, X3 = g.mesh()

    def shear(t):
        v = g.zeros(3)
        v[0] = np.sin(X2 - t) + 0 * X1 * X3
        v[1] = 1.0
        return v, np.ones(g.shape), g.bzeros(), g.bzeros()

    def translated(t):
        v = g.zeros(3)
        v[0] = 0.5
        R = 1 + 0.1 * np.cos(X1 - 0.5 * t) * np.cos(X2) * (1 + X3**2)
        return v, R, g.bzeros(), g.bzeros()

    # window spacing near the rounding/truncation balance of the 9-point derivative
    hand = 0.0
    for win in (analytic_window(g, shear, dt=0.05), analytic_window(g, translated, dt=0.05)):
        hand = max(hand, np.max(np.abs(vorticity_and_residual(win)[1])),
                   np.max(np.abs(divergence_identity_residual(win))))
    ok = min(ratios) >= 8 and hand <= 1e-12
    verdict("C8 vorticity and divergence", ok,
            f"refinement factors vorticity {ratios[0]:.2f}, divergence {ratios[1]:.2f} "
            f"(>= 8); flat hand cases {hand:.1e} (<= 1e-12)")


# -- 9 ------------------------------------------------------------------------


def smooth_velocity(g, amp):
    X1, X2, X3 = g.mesh()
    v = g.zeros(3)
    v[0] = amp * (np.sin(X2) * np.cos(np.pi * X3) + 0.5 * np.cos(X1 + X2) * X3**2)
    v[1] = amp * (np.cos(X1) * np.sin(np.pi * X3 / 2) + 0.3 * np.sin(X1) * np.cos(X2))
    v[2] = amp * np.sin(np.pi * X3) * np.cos(X1) * np.sin(2 * X2)
    return v


def ale_state(g, amp):
    """Small-data state on a deformed channel: plate 0.5 amp cos x1."""
    B1, B2 = g.bmesh()
    return State(g, 0.0, smooth_velocity(g, amp), np.ones(g.shape),
                 0.5 * amp * np.cos(B1) + 0 * B2, g.bzeros())


def test_c9_div_curl():
    g = Grid(64, 64, 65)
    X1, X2, X3 = g.mesh()
    flat = []
    for build in (lambda: (np.sin(X2) + 0 * X1 * X3, 0 * X1 * X2 * X3, 0 * X1 * X2 * X3),
                  lambda: (-np.sin(X1) * np.cosh(X3) + 0 * X2, 0 * X1 * X2 * X3,
                           np.cos(X1) * np.sinh(X3) + 0 * X2)):
        v = np.stack(build())
        flat.append(divcurl_reconstruct(State(g, 0.0, v, np.ones(g.shape), g.bzeros(),
                                              g.bzeros())).error_l2)
    refine = [divcurl_reconstruct(ale_state(Grid(16, 16, n3), 1e-3)).relative_l2
              for n3 in (17, 33, 65)]
    amps = (1e-4, 1e-3, 1e-2)
    results = [divcurl_reconstruct(ale_state(Grid(16, 16, 33), a)) for a in amps]
    dev = [r.a_minus_I_h2 for r in results]
    rel = [r.relative_l2 for r in results]
    slope = float(np.polyfit(np.log(dev), np.log(rel), 1)[0])
    ok = (max(flat) <= 1e-6 and refine[0] > refine[1] > refine[2]
          and abs(slope - 1) <= 0.3)
    verdict("C9 div-curl", ok,
            f"flat exact cases {max(flat):.1e} at 64^2x65 (<= 1e-6); ALE error "
            + " > ".join(f"{e:.3e}" for e in refine)
            + f" over N3 = 17/33/65; slope vs ||a - I||_H2 {slope:.3f} (1 +- 0.3)")


# -- 10 -----------------------------------------------------------------------


def test_c10_energy_ledgers():
    levels = (17, 33, 65)
    worst, gaps = [], []
    for n3 in levels:
        g = Grid(16, 16, n3)
        level, gap = np.zeros(len(LEDGERS)), 0.0
        for win in sampled_windows(g, T=0.3):
            res = [energy_ledger(win, w, 0).identity_residual for w in LEDGERS]
            level = np.maximum(level, res)
            b = boundary_terms(win, 0)
            gap = max(gap, abs(b["I_B1_fluid"] - b["I_B1_plate"]))
        worst.append(level)
        gaps.append(gap / level.max())
    worst = np.array(worst)
    ords = [orders(worst[:, i]) for i in range(len(LEDGERS))]
    ok = min(min(o) for o in ords) >= 2.5 and max(gaps) <= 10
    verdict("C10 energy ledgers", ok,
            "orders " + "; ".join(f"{w} " + ", ".join(f"{x:.2f}" for x in o)
                                  for w, o in zip(LEDGERS, ords))
            + f" (>= 2.5); max |I_B1 fluid - plate| / residual {max(gaps):.1e} (<= 10)")


# -- 11 -----------------------------------------------------------------------


def test_c11_monitors(tmp_path):
    import csv

    t0 = time.perf_counter()
    cfg = parse_text("family = small\namplitude = 1e-3\nT = 1.0\n")
    assert (cfg.n1, cfg.n2, cfg.n3) == (32, 32, 33)
    result = run(cfg, tmp_path)
    runtime = time.perf_counter() - t0
    with open(tmp_path / "monitors.csv", newline="") as fh:
        mons = list(csv.DictReader(fh))
    with open(tmp_path / "norms.csv", newline="") as fh:
        ratio = max(float(r["max_ratio"]) for r in csv.DictReader(fh))
    green = all(r["green"] == "1" for r in mons)
    ok = (result.status == "completed" and green and not result.norm_bound_exceeded
          and ratio <= 1.0 and runtime <= 300)
    J = (min(float(r["J_min"]) for r in mons), max(float(r["J_max"]) for r in mons))
    verdict("C11 monitors", ok,
            f"{len(mons)} checks all {'green' if green else 'not green'}, J in "
            f"[{J[0]:.6f}, {J[1]:.6f}]; largest norm / bound {ratio:.3f} (<= 1); "
            f"{runtime:.0f} s")


# -- 12 -----------------------------------------------------------------------


def same_tree(a: Path, b: Path) -> list[str]:
    diffs = []
    for p in sorted(a.rglob("*")):
        if p.is_file():
            q = b / p.relative_to(a)
            if not q.exists() or not filecmp.cmp(p, q, shallow=False):
                diffs.append(str(p.relative_to(a)))
    return diffs


def test_c12_determinism(tmp_path):
    text = ("n1 = 16\nn2 = 16\nn3 = 17\nT = 0.4\nfamily = random\nseed = 11\n"
            "snapshot_every = 1\nledger_every = 1\n")
    for name in ("one", "two"):
        run(parse_text(text), tmp_path / name)
        diagnose(tmp_path / name, tmp_path / name / "diag")
    files = [p for p in (tmp_path / "one").rglob("*") if p.is_file()]
    diffs = same_tree(tmp_path / "one", tmp_path / "two")
    status = read_status(tmp_path / "one" / "status.txt")["status"]
    ok = not diffs and status == "completed" and len(files) > 20
    verdict("C12 determinism", ok,
            f"{len(files)} CSV and snapshot files compared, "
            f"{'all byte-identical' if not diffs else 'differences in ' + ', '.join(diffs)}")
