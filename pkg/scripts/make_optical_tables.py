"""Regenerate the bundled optical-constants tables.

No licensed handbook data ships with the package. The two tables are
sampled from oscillator models instead:

* gold: Rakic et al., Appl. Opt. 37, 5271 (1998), Drude-Lorentz fit;
* silicon: three-oscillator Lorentz model with eps(0) = 11.66 and
  absorption peaks near the E1/E2 critical points.

Because both are analytic, eps(i xi) is known in closed form, which the
test-suite uses as an oracle for the Kramers-Kronig transform.

    python scripts/make_optical_tables.py
"""
from pathlib import Path

import numpy as np

from casimir_trench.dielectric import OpticalTable, write_optical_table
from casimir_trench.models import GOLD_RAKIC, SILICON_LORENTZ, oscillator_eps

OUT = Path(__file__).resolve().parents[1] / "src" / "casimir_trench" / "data"


def table_from(model, name, e_min=0.1, e_max=1e4, rows=301):
    energy = np.geomspace(e_min, e_max, rows)
    nk = np.sqrt(oscillator_eps(model, energy))
    return OpticalTable(energy, nk.real, nk.imag, name)


if __name__ == "__main__":
    write_optical_table(table_from(GOLD_RAKIC, "gold"), OUT / "gold_rakic_drude_lorentz.csv",
                        comment="gold, sampled from the Rakic (1998) Drude-Lorentz model\n"
                                "generated by scripts/make_optical_tables.py")
    write_optical_table(table_from(SILICON_LORENTZ, "silicon"), OUT / "silicon_lorentz.csv",
                        comment="intrinsic silicon, three-oscillator Lorentz model, eps(0)=11.66\n"
                                "generated by scripts/make_optical_tables.py")
