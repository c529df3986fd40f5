"""Construct and freeze the packaged default ARMAX system.

Pole placement at 3 samples/s: the AR polynomial carries one lightly
damped conjugate pair at 0.372 Hz / 4.67 % damping (the monitored mode)
plus four well-damped pairs spread across the sub-Nyquist band, so the
ambient PSD shows a clear local maximum at the monitored mode.  The MA
polynomial is minimum phase with mild spectral shaping; the exogenous
polynomial is fixed at [1, 0.5].

Run from the repository root:

    python scripts/make_default_system.py

Overwrites src/focrb/data/default_system.txt.  The checks at the bottom
are the same structural properties the test suite asserts, so a regenerated
file is self-validating.
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from focrb import sigcore, sysmodel
from focrb.sigcore import Mode, Polynomial, pole_from_mode

FS = 3.0

AR_MODES = [
    (0.372, 4.67),   # monitored mode
    (0.15, 25.0),
    (0.55, 20.0),
    (0.85, 22.0),
    (1.20, 18.0),
]

# MA roots as (frequency Hz, radius): minimum phase, mild shaping
MA_ROOTS = [
    (0.25, 0.55),
    (0.45, 0.40),
    (0.70, 0.50),
    (1.00, 0.35),
    (1.30, 0.45),
]

B_COEFFS = [1.0, 0.5]


def poly_from_pairs(pairs):
    roots = []
    for z in pairs:
        roots.extend([z, np.conj(z)])
    coeffs = np.real(np.poly(roots))
    coeffs[0] = 1.0
    return Polynomial(coeffs)


def main():
    ar_pairs = [pole_from_mode(Mode(f, d), FS).value for f, d in AR_MODES]
    ma_pairs = [r * np.exp(1j * 2 * np.pi * f / FS) for f, r in MA_ROOTS]

    system = sysmodel.ArmaxSystem(
        a=poly_from_pairs(ar_pairs),
        b=Polynomial(B_COEFFS),
        c=poly_from_pairs(ma_pairs),
        sigma_e2=1.0,
        fs=FS,
    )

    # structural checks before freezing
    modes = [sigcore.mode_from_pole(sigcore.Pole(z, FS))
             for z in sigcore.roots(system.a) if z.imag > 0]
    monitored = min(modes, key=lambda m: m.damping_pct)
    assert abs(monitored.frequency_hz - 0.372) < 1e-9, monitored
    assert abs(monitored.damping_pct - 4.67) < 1e-9, monitored

    grid = np.arange(1e-4, np.pi, 1e-4)
    psd = np.array([sigcore.arma_psd(system, w) for w in grid])
    peak_hz = grid[np.argmax(psd)] * FS / (2 * np.pi)
    assert abs(peak_hz - 0.372) < 0.01, f"PSD peak at {peak_hz} Hz"

    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "focrb" / \
        "data" / "default_system.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    sysmodel.save_system_file(system, out)
    print(f"wrote {out}")
    print(f"monitored mode: {monitored.frequency_hz:.6f} Hz, "
          f"{monitored.damping_pct:.6f} %")
    print(f"PSD maximum: {peak_hz:.4f} Hz")


if __name__ == "__main__":
    main()
