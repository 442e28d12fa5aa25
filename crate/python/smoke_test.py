#!/usr/bin/env python3
"""Smoke test for the mrcircuit Python extension.

Build the module first:

    cargo build -p mrcircuit-py --release

The script locates the compiled cdylib under target/, stages it as an
importable module and exercises the main types end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def stage_module() -> None:
    candidates = [
        ROOT / "target" / "release" / "libmrcircuit.so",
        ROOT / "target" / "debug" / "libmrcircuit.so",
        ROOT / "target" / "release" / "libmrcircuit.dylib",
        ROOT / "target" / "debug" / "libmrcircuit.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("no compiled module found; run `cargo build -p mrcircuit-py --release` first")
    stage = Path(tempfile.mkdtemp(prefix="mrcircuit-py-"))
    shutil.copy2(built, stage / "mrcircuit.so")
    sys.path.insert(0, str(stage))


def approx(a: float, b: float, tol: float = 1e-12) -> None:
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    stage_module()
    import mrcircuit

    netlist = "circuit { L{L0=1} C{C0=1} R{R=poly(I;0.2)} M{M=poly(q;0.3)} }"
    model = mrcircuit.Model.from_netlist(netlist)

    # circuit equations of the constants model
    approx(model.drift(0.0, 1.0, 1.0)[0], 1.0)
    approx(model.drift(0.0, 1.0, 1.0)[1], -1.5)
    approx(model.dissipation(0.3, -0.8), 0.5)
    approx(model.energy(0.0, 1.0, 1.0), 1.0)
    assert model.is_series()
    approx(model.constant_l0(), 1.0)

    # JSON round trip preserves the drift
    clone = mrcircuit.Model.from_json(model.to_json())
    approx(clone.drift(0.0, -0.4, 0.9)[1], model.drift(0.0, -0.4, 0.9)[1])

    # canonical formatting is stable
    pretty = mrcircuit.format_netlist(netlist)
    assert pretty == mrcircuit.format_netlist(pretty)

    # Wiener dilation: Ito drift equals the circuit field, diffusion columns
    # follow the noise functions, and the Poisson bracket stays near 1
    wiener = model.wiener_dilation()
    approx(wiener.ito_drift(0.0, 1.0, 1.0)[1], -1.5)
    cols = wiener.diffusion(2.0, 3.0)
    approx(cols[0][0], 0.6)
    approx(cols[0][1], -2.0)
    bracket = wiener.plain_bracket(1.0, 1.0, t_end=1.0, dt=1e-3, seed=7)
    assert abs(bracket - 1.0) < 5e-3, bracket

    # symplectic dilation: the extended bracket is restored to 1 while the
    # plain bracket contracts like exp(-gamma t)
    symplectic = model.symplectic_dilation(gamma=1.0)
    assert symplectic.channels() == [
        "Q_resistance",
        "P_resistance",
        "Q_memristance",
        "P_memristance",
    ]
    ext = symplectic.extended_bracket(1.0, 1.0, t_end=1.0, dt=1e-3, seed=7)
    plain = symplectic.plain_bracket(1.0, 1.0, t_end=1.0, dt=1e-3, seed=7)
    assert abs(ext - 1.0) < 1e-2, ext
    assert abs(plain - math.exp(-0.5)) < 5e-3, plain

    # ensembles are reproducible
    times, paths = wiener.simulate(1.0, 1.0, t_end=0.2, dt=1e-3, n_paths=2, seed=5)
    times2, paths2 = wiener.simulate(1.0, 1.0, t_end=0.2, dt=1e-3, n_paths=2, seed=5)
    assert times == times2 and paths == paths2
    assert len(paths) == 2 and len(times) == len(paths[0])

    # quantum identities hold on the interior projection
    report = model.quantum_identity_report(fock_dim=30, margin=7)
    assert report["drift_q_relative"] < 1e-10, report
    assert report["drift_p_relative"] < 1e-10, report
    assert report["max_noise_deviation"] < 1e-10, report

    # short master-equation run: trace-preserving, means start at (sqrt(2), 0)
    rows = model.quantum_evolve(alpha=1.0, t_end=1.0, dt=0.01, fock_dim=30)
    t0 = rows[0]
    approx(t0[1], math.sqrt(2.0), tol=1e-9)
    approx(t0[2], 0.0, tol=1e-9)
    assert all(row[5] > -1e-6 for row in rows)

    # malformed netlists raise with a position-bearing message
    try:
        mrcircuit.Model.from_netlist("circuit { C{C0=1} }")
    except ValueError as e:
        assert "1:1" in str(e), e
    else:
        sys.exit("expected a parse error")

    print("smoke test passed")


if __name__ == "__main__":
    main()
