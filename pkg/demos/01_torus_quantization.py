"""
Vortices on a periodic cell
===========================

Solve the scalar equation on a 2*pi x 2*pi cell, check the flux identity,
then walk the vortex number across the existence threshold.
"""

# %%
import math

import numpy as np

from fracvortex import FeasibilityError, PeriodicGrid, ScalarModel, VortexSet, solve_scalar_periodic

model = ScalarModel.vacuum(1.0)          # lam = 1, xi = m a2 + n b2 = 1
grid = PeriodicGrid.square(2 * math.pi, 128)
print(model)

# %% Two vortices
sol = solve_scalar_periodic(model, VortexSet.from_list([[1.0, 2.0], [4.5, 4.0]]), grid)
rep = sol.report
print(f"{rep.status} in {rep.iterations} Newton steps, |grad| = {rep.grad_norm:.2e}")

for name, r in sol.diagnostics.residuals.items():
    print(f"{name:14s} {r.value:.10f} vs {r.rhs:.10f}  rel {r.rel_error:.1e}")

# %% The field sits below the vacuum level everywhere
print("max u =", sol.u.max())

# %% Capacity: 4 pi N / lam < xi |cell|, i.e. N < pi here
pts = np.random.default_rng(1).uniform(0, 2 * math.pi, size=(5, 2))
for N in range(5):
    try:
        s = solve_scalar_periodic(model, VortexSet.from_list(pts[:N].tolist()), grid,
                                  diagnose=False)
        print(N, "converged, energy", round(s.report.energy, 6))
    except FeasibilityError as exc:
        print(N, type(exc).__name__, exc.verdict.violated)

# %% A triple vortex at a single point is just as good as three apart
s = solve_scalar_periodic(model, VortexSet.from_list([[3.0, 3.0, 3]]), grid)
print("triple:", s.diagnostics.residuals["quantization"].rel_error)
