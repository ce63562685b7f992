"""
A planar vortex and its exponential tail
========================================

The planar problem lives on a finite box whose boundary is pinned to the
vacuum.  Away from the vortex the field approaches zero like exp(-kappa r).
"""

# %%
import math

import numpy as np

from fracvortex import PlanarBox, ScalarModel, VortexSet, solve_scalar_planar
from fracvortex.diagnostics import ring_average

model = ScalarModel.vacuum(1.0)
kappa = model.decay_rate
box = PlanarBox(16.0, 255)
sol = solve_scalar_planar(model, VortexSet.from_list([[0.0, 0.0]]), box)
print(sol.report.status, "after", sol.report.iterations, "steps")

# %% Fitted decay rate vs the linearised one
(fit,) = sol.diagnostics.decay
print(f"rate {fit.rate:.4f}  kappa {kappa:.4f}  R^2 {fit.r2:.5f}")

# %% Ring averages of |u| on a log scale
r = np.linspace(1, 10, 10)
for ri, a in zip(r, ring_average(box, np.abs(sol.u[0]), r)):
    print(f"r = {ri:5.2f}   <|u|> = {a:.3e}   exp(-kappa r) = {math.exp(-kappa * ri):.3e}")

# %% The background scale mu is a gauge choice: u does not care
us = {mu: solve_scalar_planar(model, VortexSet.from_list([[0.3, -0.2]]), box, mu=mu,
                              diagnose=False).u[0] for mu in (0.5, 1.0, 2.0)}
print("max |u(mu=0.5) - u(mu=2)| =", np.abs(us[0.5] - us[2.0]).max())

# %% ...and that difference is pure discretisation error
coarse = solve_scalar_planar(model, VortexSet.from_list([[0.3, -0.2]]), PlanarBox(16.0, 127),
                             diagnose=False).u[0]
print("coarse vs fine at shared nodes:", np.abs(coarse - us[1.0][1::2, 1::2]).max())
