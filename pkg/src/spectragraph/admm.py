"""ADMM splitting for cardinality-constrained training.

For every constrained block ``w_l`` an auxiliary ``z_l = Omega w_l`` and a
multiplier ``eta_l`` are introduced. With the augmented Lagrangian

    L(w, z; eta) = f(w) + sum_l eta_l.(z_l - Omega w_l) + rho/2 ||z_l - Omega w_l||^2

one outer iteration is

    w   <- argmin_w L(w, z; eta)                    (inexact, Adam steps)
    z_l <- Pi_{budget_l}(Omega w_l - eta_l / rho)
    eta_l <- eta_l + rho (z_l - Omega w_l)

where ``Pi`` keeps the ``budget`` largest magnitudes. The current
multiplier is used in the z-step, following the usual w/z/eta ordering.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from itertools import cycle

import numpy as np

from .nn.models import cardinality_budget
from .nn.optim import AdamState, adam_step

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """A non-finite loss appeared during optimisation."""


# ------------------------------------------------------------ operators

class IdentityOmega:
    """Plain element sparsity: ``Omega = I``, so ``Omega Omega^T = I`` and kappa is 1."""

    def apply(self, w):
        return w

    def adjoint(self, v):
        return v

    def kappa(self, shape=None) -> float:
        return 1.0

    def weight_mask(self, support, shape):
        return np.asarray(support, dtype=bool).reshape(shape)


class MatrixOmega:
    """A dense linear operator acting on the flattened block.

    Structured operators (e.g. rows summing groups of weights) let whole
    groups be pruned together. A weight survives hard masking when any row
    touching it has a nonzero in ``z``.
    """

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)

    def apply(self, w):
        return self.matrix @ np.ravel(w)

    def adjoint(self, v):
        return self.matrix.T @ np.ravel(v)

    def kappa(self, shape=None) -> float:
        eig = np.linalg.eigvalsh(self.matrix @ self.matrix.T)
        return float(math.sqrt(max(eig.min(), 0.0)))

    def weight_mask(self, support, shape):
        touched = (np.abs(self.matrix) > 0).T.astype(float) @ np.asarray(support, dtype=float)
        return (touched > 0).reshape(shape)

    @classmethod
    def block_sum(cls, size: int, block: int) -> "MatrixOmega":
        """Rows summing consecutive groups of ``block`` weights (``kappa = sqrt(block)``)."""
        if size % block:
            raise ValueError("block must divide size")
        return cls(np.kron(np.eye(size // block), np.ones((1, block))))


# ------------------------------------------------------------ state types

@dataclass
class PruneConfig:
    connection_rate: float = 0.1
    rho: float = 1e-2
    admm_outer_iters: int = 1
    w_inner_steps: int = 30
    retrain_epochs: int = 10
    rho_growth: float = 1.0
    rho_max: float = 1.0
    include_biases: bool = False
    include_node_scale: bool = False

    def __post_init__(self):
        if not 0 < self.connection_rate <= 1:
            raise ValueError("connection_rate must lie in (0, 1]")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        for name in ("admm_outer_iters", "w_inner_steps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.retrain_epochs < 0:
            raise ValueError("retrain_epochs must be non-negative")


@dataclass
class PruneState:
    rho: float
    budgets: dict
    z: dict = field(default_factory=dict)
    eta: dict = field(default_factory=dict)
    omega: dict = field(default_factory=dict)
    masks: dict | None = None

    @classmethod
    def init(cls, params: dict, budgets: dict, rho: float, omega=None) -> "PruneState":
        """Start from ``z = Pi(Omega w)`` and ``eta = 0``."""
        omega = omega or {}
        state = cls(rho=rho, budgets=dict(budgets))
        for name, budget in budgets.items():
            op = omega.get(name, IdentityOmega())
            state.omega[name] = op
            ow = op.apply(params[name])
            state.z[name] = project_cardinality(ow, budget)
            state.eta[name] = np.zeros_like(ow)
        return state

    def op(self, name):
        return self.omega.get(name) or IdentityOmega()


@dataclass
class AdmmRecord:
    iteration: int
    stage: str
    loss: float
    lagrangian: float
    residual: dict
    dual_step: float
    rho: float


@dataclass
class AdmmTrace:
    records: list = field(default_factory=list)

    def append(self, rec: AdmmRecord) -> None:
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def layer_names(self) -> list[str]:
        names: list[str] = []
        for r in self.records:
            for k in r.residual:
                if k not in names:
                    names.append(k)
        return names

    def to_rows(self) -> list[dict]:
        names = self.layer_names()
        rows = []
        for r in self.records:
            row = {"iteration": r.iteration, "stage": r.stage, "loss": r.loss,
                   "lagrangian": r.lagrangian, "dual_step": r.dual_step, "rho": r.rho}
            for n in names:
                row[f"residual_{n}"] = r.residual.get(n, "")
            rows.append(row)
        return rows

    def to_csv(self, path) -> None:
        rows = self.to_rows()
        fields = ["iteration", "stage", "loss", "lagrangian", "dual_step", "rho"] + \
            [f"residual_{n}" for n in self.layer_names()]
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            writer.writerows(rows)


# ----------------------------------------------------------- primitives

def project_cardinality(v, budget: int) -> np.ndarray:
    """Euclidean projection onto ``{x : card(x) <= budget}``.

    Keeps the ``budget`` entries of largest magnitude verbatim and zeros the
    rest; among equal magnitudes the lower flat index is kept.
    """
    v = np.asarray(v, dtype=np.float64)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    flat = v.ravel()
    if budget >= flat.size:
        return v.copy()
    out = np.zeros_like(flat)
    if budget > 0:
        keep = np.argsort(-np.abs(flat), kind="stable")[:budget]
        out[keep] = flat[keep]
    return out.reshape(v.shape)


def admm_z_step(w, eta, rho: float, budget: int, omega=None) -> np.ndarray:
    if rho <= 0:
        raise ValueError("rho must be positive")
    omega = omega or IdentityOmega()
    return project_cardinality(omega.apply(w) - eta / rho, budget)


def admm_eta_step(eta, z, w, rho: float, omega=None) -> np.ndarray:
    omega = omega or IdentityOmega()
    return eta + rho * (z - omega.apply(w))


def penalty_gradient(w, z, eta, rho: float, omega=None) -> np.ndarray:
    """Gradient in ``w`` of ``eta.(z - Omega w) + rho/2 ||z - Omega w||^2``."""
    omega = omega or IdentityOmega()
    g = rho * omega.adjoint(omega.apply(w) - z - eta / rho)
    return np.reshape(g, np.shape(w))


def lagrangian_value(params: dict, z: dict, eta: dict, rho: float, loss: float,
                     budgets: dict | None = None, omega: dict | None = None) -> float:
    """Augmented Lagrangian; ``inf`` when some ``z_l`` exceeds its budget."""
    omega = omega or {}
    total = float(loss)
    for name, zl in z.items():
        if budgets is not None and np.count_nonzero(zl) > budgets[name]:
            return math.inf
        r = zl - omega.get(name, IdentityOmega()).apply(params[name])
        total += float(np.sum(eta[name] * r)) + 0.5 * rho * float(np.sum(r * r))
    return total


def admm_w_step(params: dict, grad_fn, batches, state: PruneState, optimizer: AdamState,
                steps: int, names=None, masks: dict | None = None) -> dict:
    """Approximately minimise the w-subproblem with ``steps`` Adam updates.

    ``grad_fn(params, batch) -> (loss, grads)`` supplies the data-loss
    gradient; the penalty gradient is added for every constrained block.
    ``batches`` is any iterable of batches and is cycled as needed.
    """
    names = list(state.z) if names is None else names
    it = cycle(batches) if not hasattr(batches, "__next__") else batches
    for _ in range(steps):
        loss, grads = grad_fn(params, next(it))
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss} in w-step")
        for name in names:
            grads[name] = grads.get(name, 0) + penalty_gradient(
                params[name], state.z[name], state.eta[name], state.rho, state.op(name))
        if masks:
            for name, m in masks.items():
                if name in grads:
                    grads[name] = grads[name] * m
        adam_step(params, grads, optimizer)
    return params


def admm_update(params: dict, state: PruneState, names=None) -> tuple[dict, float]:
    """z- and eta-steps for ``names``; returns per-layer primal residuals and the dual step norm."""
    names = list(state.z) if names is None else names
    residual = {}
    dual_sq = 0.0
    for name in names:
        op = state.op(name)
        z = admm_z_step(params[name], state.eta[name], state.rho, state.budgets[name], op)
        if np.count_nonzero(z) > state.budgets[name]:
            raise AssertionError(f"{name}: projection exceeded its budget")
        eta_new = admm_eta_step(state.eta[name], z, params[name], state.rho, op)
        dual_sq += float(np.sum((eta_new - state.eta[name]) ** 2))
        state.z[name], state.eta[name] = z, eta_new
        residual[name] = float(np.linalg.norm(z - op.apply(params[name])))
    return residual, math.sqrt(dual_sq)


def run_admm(params: dict, budgets: dict, w_update, loss_fn, rho: float = 1.0,
             max_iters: int = 500, tol: float = 1e-6, omega=None,
             trace: AdmmTrace | None = None) -> tuple[dict, PruneState, AdmmTrace]:
    """Generic outer loop with a caller-supplied w-update.

    ``w_update(params, state)`` must return the new parameters (it may solve
    the subproblem exactly or run a few optimiser steps). Stops once every
    primal residual is below ``tol``.
    """
    state = PruneState.init(params, budgets, rho, omega)
    trace = trace if trace is not None else AdmmTrace()
    for k in range(max_iters):
        params = w_update(params, state)
        residual, dual = admm_update(params, state)
        loss = float(loss_fn(params))
        trace.append(AdmmRecord(k, "all", loss,
                                lagrangian_value(params, state.z, state.eta, state.rho, loss,
                                                 state.budgets, state.omega),
                                residual, dual, state.rho))
        if max(residual.values(), default=0.0) < tol:
            break
    return params, state, trace


# ------------------------------------------------------------- masking

def hard_mask_and_freeze(params: dict, state: PruneState) -> tuple[dict, dict]:
    """Zero every weight outside ``support(z)`` and record the masks on ``state``."""
    masked = {k: v.copy() for k, v in params.items()}
    masks = {}
    for name, z in state.z.items():
        m = state.op(name).weight_mask(z.ravel() != 0, params[name].shape)
        masked[name] = np.where(m, params[name], 0.0)
        masks[name] = m
    state.masks = masks
    return masked, masks


def magnitude_prune_baseline(params: dict, connection_rate: float, names) -> tuple[dict, dict]:
    """One-shot pruning: per block keep the ``ceil(rate * size)`` largest magnitudes."""
    masked = {k: v.copy() for k, v in params.items()}
    masks = {}
    for name in names:
        budget = cardinality_budget(connection_rate, params[name].size)
        kept = project_cardinality(params[name], budget)
        m = np.zeros(params[name].size, dtype=bool)
        if budget >= params[name].size:
            m[:] = True
        elif budget > 0:
            m[np.argsort(-np.abs(params[name].ravel()), kind="stable")[:budget]] = True
        masks[name] = m.reshape(params[name].shape)
        masked[name] = kept
    return masked, masks


def apply_masks(params: dict, masks: dict) -> None:
    for name, m in masks.items():
        params[name] *= m


def count_nonzero(params: dict, names) -> dict[str, int]:
    return {n: int(np.count_nonzero(params[n])) for n in names}
