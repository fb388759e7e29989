"""Walkthrough: why the analytical placebo beats random assignment.

Assigning placebo birth events by drawing random ages injects noise that
has nothing to do with the data: re-running the same analysis with a new
seed moves every point. The closed-form estimator is the expectation of
that procedure over all possible draws, so its randomization noise is
exactly zero, and averaging M independent draws only ever gets you back
toward it at a sqrt(M) rate.

Run from the repository root:

    python demos/randomization_noise.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from childpenalty import (
    LognormalParams,
    PopulationSpec,
    age_group_stats,
    analytical_placebo,
    discretize_pmf,
    generate_population,
    monte_carlo_placebo,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

truth = LognormalParams(mu=3.30, sigma=0.17)
spec = PopulationSpec(
    n_childless=1500,
    n_parents=0,
    age_range=(18.0, 60.0),
    income_profile={
        "female": ((18.0, 2000.0), (60.0, 3600.0)),
        "male": ((18.0, 2000.0), (60.0, 3600.0)),
    },
    child_effect={"female": ((0.0, 0.0),), "male": ((0.0, 0.0),)},
    noise_sd=400.0,
    age_at_birth_dist=truth,
    seed=7,
)
controls = generate_population(spec)
pmf = discretize_pmf(truth, "yearly", (15, 49))
TAU = (-5, 15)

# ---------------------------------------------------------------------------
# 1. Ten single-draw analyses: same data, ten different seeds.

stats = age_group_stats(controls, "income")
closed_form = analytical_placebo(stats, pmf, TAU, weighting="population_weighted")

fig, ax = plt.subplots(figsize=(7, 4.5))
for seed in range(10):
    single = monte_carlo_placebo(controls, pmf, TAU, draws=1, seed=seed)
    ax.plot(single.taus, single.means, "o", color="tab:orange", alpha=0.35,
            label="single random assignment" if seed == 0 else None)
ax.plot(closed_form.taus, closed_form.means, "k-", lw=2, label="analytical expectation")
ax.fill_between(
    closed_form.taus,
    closed_form.means - closed_form.std_errors,
    closed_form.means + closed_form.std_errors,
    color="k", alpha=0.15, label="measurement band (1 se)",
)
ax.set_xlabel("years since placebo birth")
ax.set_ylabel("monthly income")
ax.set_title("ten random placebo assignments vs the closed form")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "randomization_noise.png", dpi=150)
print(f"wrote {OUT / 'randomization_noise.png'}")

# ---------------------------------------------------------------------------
# 2. Quantify it: across-draw dispersion vs the measurement error.

mc = monte_carlo_placebo(controls, pmf, TAU, draws=400, seed=99)
print(f"\n{'lag':>4} {'randomization sd':>17} {'measurement se':>15} {'ratio':>6}")
for i, tau in enumerate(mc.taus):
    rand_sd = mc.draw_dispersion[i]
    meas_se = closed_form.std_errors[i]
    if np.isfinite(rand_sd) and np.isfinite(meas_se) and meas_se > 0:
        print(f"{tau:>4} {rand_sd:>17.1f} {meas_se:>15.1f} {rand_sd / meas_se:>6.1f}")

print(
    "\nA single random assignment carries several times the uncertainty of the\n"
    "closed form; the analytical route removes that component entirely, which\n"
    "is what makes placebo event studies usable on small survey samples."
)
