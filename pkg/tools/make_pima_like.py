"""Generate the bundled synthetic diabetes-study CSV.

The real 332-row study data is not redistributable here, so the package
ships a synthetic surrogate: covariates drawn to match the published
marginal summaries of the study (glucose concentration, diastolic blood
pressure, pedigree index) and responses simulated from the probit model at
the reference coefficient estimates.  The file layout matches what
`bayescomp.datasets.load_pima` expects.

Run from the repository root:

    python3 tools/make_pima_like.py
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from scipy.special import ndtr

from bayescomp.core import RngStream

N_ROWS = 332
REFERENCE_BETA = np.array([0.012616, -0.029050, 0.350301])
SEED = 20110331


def main():
    rng = RngStream(SEED).generator
    glu = np.clip(np.round(rng.normal(122.0, 31.0, N_ROWS)), 56, 200)
    bp = np.clip(np.round(rng.normal(71.5, 12.3, N_ROWS)), 24, 110)
    ped = np.clip(np.round(rng.lognormal(-0.82, 0.55, N_ROWS), 3), 0.085, 2.5)
    X = np.column_stack([glu, bp, ped])
    prob = ndtr(X @ REFERENCE_BETA)
    y = (rng.random(N_ROWS) < prob).astype(int)

    out = pathlib.Path(__file__).resolve().parents[1] / "src/bayescomp/data/pima_synthetic.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("# Synthetic surrogate of the 332-row diabetes study; generated by\n")
        fh.write("# tools/make_pima_like.py (fixed seed).  Not the original data.\n")
        fh.write("glu,bp,ped,type\n")
        for i in range(N_ROWS):
            label = "Yes" if y[i] else "No"
            fh.write(f"{glu[i]:.0f},{bp[i]:.0f},{ped[i]:.3f},{label}\n")
    print(f"wrote {out} ({N_ROWS} rows, {y.sum()} positive)")


if __name__ == "__main__":
    main()
