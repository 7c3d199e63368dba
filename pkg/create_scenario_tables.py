"""
Main script to write the scenario tables.
Runs every scenario and writes its table as CSV and Parquet into the
configured output directory.
"""

import numpy as np

from bimetro._logger import logger
from bimetro.bounds import SpecialCase, gaussian_gap, max_qfi, special_case_qfi
from bimetro.circuit import (
    CircuitSpec,
    classical_fi_single_particle,
    generator,
    generator_from_coefficients,
    qfi_single_particle,
)
from bimetro.fock import qfi_pure
from bimetro.gaussian import optimal_gaussian
from bimetro.states import NumberBudget, noon, poissonian_cat, quasi_noon_rounded, squeezed_vacuum_fock
from bimetro.tables import frame, output_path, write_csv, write_parquet

scenarios = []

# ============================================================
# 1. Gaussian optimum against the general maximum
# ============================================================
try:
    rows = []
    for n in range(1, 101):
        for case in SpecialCase:
            gap = gaussian_gap(case.eps, float(n))
            rows.append(
                {
                    "N": n,
                    "case": case.value,
                    "f_gauss": gap.f_gauss,
                    "f_tilde": gap.f_tilde,
                    "gap": gap.relative_gap,
                    "asymptotic_gap": gap.asymptotic_gap,
                }
            )
    scenarios.append(("gaussian_gap", frame(rows)))
    logger.info("Computed the Gaussian gap sweep")
except Exception as e:
    logger.warning(f"Could not compute the Gaussian gap sweep: {e}")

# ============================================================
# 2. Special circuits over a grid of number budgets
# ============================================================
try:
    rows = []
    for n in (1.0, 2.0, 4.0, 8.0, 16.0):
        for var in (0.0, 0.5 * n, n, n**2):
            budget = NumberBudget(n, var)
            row = {"N": n, "var": var}
            for case in SpecialCase:
                row[case.value] = special_case_qfi(case, budget)[0]
            rows.append(row)
    scenarios.append(("special_cases", frame(rows)))
    logger.info("Computed the special-case grid")
except Exception as e:
    logger.warning(f"Could not compute the special-case grid: {e}")

# ============================================================
# 3. Single particle through the Mach-Zehnder interferometer
# ============================================================
try:
    spec = CircuitSpec.from_catalog("mach_zehnder")
    rows = [
        {
            "phi": phi,
            "classical_fi": classical_fi_single_particle(spec, phi),
            "qfi": qfi_single_particle(spec, phi),
        }
        for phi in np.linspace(0.0, 2.0 * np.pi, 73)
    ]
    scenarios.append(("mach_zehnder_single_particle", frame(rows)))
    logger.info("Computed the single-particle phase sweep")
except Exception as e:
    logger.warning(f"Could not compute the single-particle phase sweep: {e}")

# ============================================================
# 4. Input states through the antisymmetric circuit
# ============================================================
# Budgets with integer quasi-NOON occupations and DeltaN^2 >= N for the cat
try:
    gen = generator(CircuitSpec.from_catalog("antisymmetric"), 0.0)
    rows = []
    for n, var in ((2.0, 4.0), (4.0, 8.0), (8.0, 16.0)):
        budget = NumberBudget(n, var)
        state, realized = quasi_noon_rounded(budget)
        rows.append({"family": "quasi-noon", "N": realized.n_mean, "var": realized.var, "qfi": qfi_pure(state, gen)})
        cat = poissonian_cat(budget)
        rows.append({"family": "poisson-cat", "N": n, "var": var, "qfi": qfi_pure(cat, gen)})
        rows.append({"family": "bound", "N": n, "var": var, "qfi": max_qfi(budget, gen.eps)})
    for k in (1, 2, 4, 8):
        rows.append({"family": "noon", "N": float(k), "var": 0.0, "qfi": qfi_pure(noon(k), gen)})
    unbalanced = generator_from_coefficients(1.0, 0.0, 0j)
    for n in (1.0, 2.0, 4.0):
        r = float(np.arcsinh(np.sqrt(n)))
        fock = qfi_pure(squeezed_vacuum_fock(r), unbalanced)
        _, closed = optimal_gaussian(n, unbalanced)
        rows.append({"family": "squeezed-vacuum", "N": n, "var": 2.0 * n * (n + 1.0), "qfi": fock})
        rows.append({"family": "gaussian-closed-form", "N": n, "var": 2.0 * n * (n + 1.0), "qfi": closed})
    scenarios.append(("input_states", frame(rows)))
    logger.info("Computed the input-state table")
except Exception as e:
    logger.warning(f"Could not compute the input-state table: {e}")

# ============================================================
# Write every table
# ============================================================
for name, df in scenarios:
    try:
        write_csv(df, output_path(f"{name}.csv"))
        write_parquet(df, output_path(f"{name}.parquet"))
    except Exception as e:
        logger.warning(f"Could not write table {name}: {e}")
