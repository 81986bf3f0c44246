"""Bridge to an off-the-shelf conic solver for SDPA sparse files.

The package never trusts solver output: solutions only seed the rounding
step, and certificates are then checked exactly.  cvxpy with the CLARABEL
interior-point solver stands in for the external SDP program, reading the
same SDPA file a CSDP user would pass on the command line and writing a
CSDP-style solution file.
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp

from .sdpgen import read_sdpa, write_solution

log = logging.getLogger(__name__)


class SolverUnavailable(RuntimeError):
    pass


def solve_sdpa(path, out_path, solver: str = "CLARABEL", verbose: bool = False) -> dict:
    """Solve ``max tr(C X) s.t. tr(A_k X) = b_k, X >= 0`` and write the solution."""
    try:
        import cvxpy as cp
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise SolverUnavailable("cvxpy is required for the solve subcommand") from exc

    prob = read_sdpa(path)
    m = prob.m
    variables = []
    parts = []
    objective = 0
    for bi, size in enumerate(prob.sizes, start=1):
        sel = prob.entries[:, 1] == bi
        k, i, j = (prob.entries[sel, c] for c in (0, 2, 3))
        v = prob.values[sel]
        if size > 0:
            n = size
            X = cp.Variable((n, n), PSD=True)
            # tr(A X) counts an off-diagonal upper entry twice
            rows = np.concatenate([k, k[i != j]])
            cols = np.concatenate([(i - 1) * n + (j - 1), ((j - 1) * n + (i - 1))[i != j]])
            vals = np.concatenate([v, v[i != j]])
            flat = cp.reshape(X, (n * n,), order="C")
        else:
            n = -size
            X = cp.Variable(n, nonneg=True)
            if np.any(i != j):
                raise ValueError(f"off-diagonal entry in diagonal block {bi}")
            rows, cols, vals = k, i - 1, v
            flat = X
        variables.append(X)
        obj = rows == 0
        if obj.any():
            c = sp.csr_matrix((vals[obj], (np.zeros(obj.sum(), int), cols[obj])), shape=(1, flat.shape[0]))
            objective = objective + (c @ flat)[0]
        con = ~obj
        A = sp.csr_matrix((vals[con], (rows[con] - 1, cols[con])), shape=(m, flat.shape[0]))
        parts.append(A @ flat)
    lhs = parts[0]
    for p in parts[1:]:
        lhs = lhs + p
    eq = lhs == prob.b
    problem = cp.Problem(cp.Maximize(objective), [eq])
    problem.solve(solver=solver, verbose=verbose)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise RuntimeError(f"solver finished with status {problem.status}")
    blocks, diag = [], None
    for size, X in zip(prob.sizes, variables):
        if size > 0:
            blocks.append(np.asarray(X.value))
        else:
            diag = np.asarray(X.value)
    y = np.asarray(eq.dual_value).ravel()
    write_solution(out_path, y, blocks, diag)
    log.info("solver status %s objective %.10g", problem.status, problem.value)
    return {"status": problem.status, "objective": float(problem.value), "solver": solver}
