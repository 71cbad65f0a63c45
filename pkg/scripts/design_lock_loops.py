#!/usr/bin/env python3
"""Design study for the two phase-lock loops.

Prints stability margins for the pump-phase and homodyne-phase loops, selects
the frequency shift from the default candidate set, and writes Bode CSVs.

Usage:
    python scripts/design_lock_loops.py [--out-dir out] [--flat-gain 0.1]
"""

import argparse
from pathlib import Path

from opasim import (
    bode,
    default_lock_loops,
    demod_frequency,
    log_frequency_grid,
    select_shift_frequency,
    stability_margins,
)
from opasim.cli import _write_bode_csv

CANDIDATES = [0.25e6, 0.5e6, 1e6, 2e6, 4e6]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("out"))
    ap.add_argument("--flat-gain", type=float, default=0.1)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    loops = default_lock_loops(flat_gain=args.flat_gain)
    grid = log_frequency_grid()
    for loop in loops:
        m = stability_margins(loop)
        print(f"{loop.kind} loop:")
        print(f"  -180 deg crossover: {m.phase_crossover_hz / 1e6:.3f} MHz")
        print(f"  gain margin: {m.gain_margin_db:.1f} dB")
        print(f"  phase margin: {m.phase_margin_deg:.1f} deg "
              f"at {m.gain_crossover_hz:.1f} Hz")
        _write_bode_csv(args.out_dir / f"bode_{loop.kind}.csv", bode(loop, grid))

    shift = select_shift_frequency(loops, CANDIDATES)
    print(f"selected frequency shift: {shift / 1e6:g} MHz")
    for loop in loops:
        f = demod_frequency(shift, loop.kind)
        print(f"  {loop.kind} demodulation: {f / 1e6:g} MHz")


if __name__ == "__main__":
    main()
