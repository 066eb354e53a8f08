"""Least-squares fitting of multi-pole intensity models.

The model intensity is ``|a(E)|^2`` with

    a(E) = sum over poles, sum_{j=1}^{order} A_j / (E - z)^j

which is the smallest model carrying a pole of a given order; it has no
background term and no unitarity constraint.  ``|a|^2`` is blind to a common
phase of all residues, so fitted residues are reported in a fixed gauge:
the largest-magnitude residue of the first pole is made real and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import GamowError
from .lineshape import pole_term
from .series import Series

__all__ = [
    "ResonancePole",
    "PoleModel",
    "FitOptions",
    "FitResult",
    "OrderSelection",
    "NoSignal",
    "NonConvergence",
    "IllConditioned",
    "AllFitsFailed",
    "amplitude",
    "model_intensity",
    "fit_poles",
    "select_order",
]


class NoSignal(GamowError, ValueError):
    pass


class NonConvergence(GamowError, RuntimeError):
    """Iteration budget exhausted; the last accepted fit is on ``.result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IllConditioned(GamowError, ArithmeticError):
    pass


class AllFitsFailed(GamowError, RuntimeError):
    pass


@dataclass(frozen=True)
class ResonancePole:
    z: complex
    order: int
    residues: tuple

    def __post_init__(self):
        z = complex(self.z)
        if not z.imag < 0:
            raise ValueError(f"pole must lie below the real axis, got z={z}")
        res = tuple(complex(a) for a in self.residues)
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"order must be an integer >= 1, got {self.order!r}")
        if len(res) != self.order:
            raise ValueError(f"order {self.order} needs {self.order} residues, got {len(res)}")
        if res[-1] == 0:
            raise ValueError("leading residue A_order must be nonzero")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "residues", res)


@dataclass(frozen=True)
class PoleModel:
    poles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(self.poles))

    @classmethod
    def single(cls, z: complex, residues) -> "PoleModel":
        residues = tuple(residues)
        return cls((ResonancePole(z, len(residues), residues),))

    @property
    def n_params(self) -> int:
        return sum(2 + 2 * p.order for p in self.poles)

    def to_dict(self) -> dict:
        return {
            "poles": [
                {
                    "z": [p.z.real, p.z.imag],
                    "order": p.order,
                    "residues": [[a.real, a.imag] for a in p.residues],
                }
                for p in self.poles
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PoleModel":
        poles = []
        for p in d["poles"]:
            z = complex(*p["z"])
            res = [complex(*a) for a in p["residues"]]
            poles.append(ResonancePole(z, int(p.get("order", len(res))), tuple(res)))
        return cls(tuple(poles))


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    damping_init: float = 1e-3
    tol_grad: float = 1e-10
    tol_step: float = 1e-13

    def __post_init__(self):
        for name in ("max_iterations", "damping_init", "tol_grad", "tol_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class FitResult:
    model: PoleModel
    residual_rms: float
    iterations: int
    converged: bool = True
    reason: str = ""
    objective_history: tuple = field(default=(), repr=False)
    gradient_cosine: float = 0.0

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "converged": self.converged,
            "reason": self.reason,
            "gradient_cosine": self.gradient_cosine,
        }


def amplitude(model: PoleModel, E):
    e = np.asarray(E, dtype=float)
    a = np.zeros(e.shape, dtype=complex)
    for p in model.poles:
        for j, aj in enumerate(p.residues, start=1):
            a = a + aj * pole_term(e, p.z, j)
    return a


def model_intensity(model: PoleModel, E):
    a = amplitude(model, E)
    out = (a * a.conj()).real
    return float(out) if out.ndim == 0 else out


# Parameter vector per pole: Re z, u with Im z = -exp(u), then Re A_j, Im A_j.


def _pack(model: PoleModel) -> np.ndarray:
    out = []
    for p in model.poles:
        out += [p.z.real, math.log(-p.z.imag)]
        for a in p.residues:
            out += [a.real, a.imag]
    return np.array(out, dtype=float)


def _unpack(theta: np.ndarray, orders) -> list:
    poles, i = [], 0
    for r in orders:
        z = complex(theta[i], -math.exp(theta[i + 1]))
        res = theta[i + 2 : i + 2 + 2 * r].reshape(r, 2)
        poles.append((z, res[:, 0] + 1j * res[:, 1]))
        i += 2 + 2 * r
    return poles


def _to_model(theta, orders) -> PoleModel:
    return PoleModel(
        tuple(
            ResonancePole(z, len(res), tuple(complex(a) for a in res))
            for z, res in _unpack(theta, orders)
        )
    )


def _residual_and_jacobian(theta, orders, e, y, want_jac=True):
    parts = _unpack(theta, orders)
    a = np.zeros(e.shape, dtype=complex)
    cols = []
    for z, res in parts:
        d = e - z
        inv = 1.0 / d
        powers = [inv]
        for _ in range(len(res)):
            powers.append(powers[-1] * inv)
        # powers[j-1] = (E - z)^-j for j = 1..order+1
        a = a + sum(res[j - 1] * powers[j - 1] for j in range(1, len(res) + 1))
        if want_jac:
            da_dz = sum(j * res[j - 1] * powers[j] for j in range(1, len(res) + 1))
            cols.append(da_dz)
            cols.append(da_dz * (-1j * -z.imag))  # dz/du = -i exp(u)
            for j in range(1, len(res) + 1):
                cols.append(powers[j - 1])
                cols.append(1j * powers[j - 1])
    resid = (a * a.conj()).real - y
    if not want_jac:
        return resid, None
    jac = 2.0 * np.real(a.conj()[:, None] * np.stack(cols, axis=1))
    return resid, jac


def _gauge(theta, orders) -> np.ndarray:
    """Rotate all residues so the largest residue of the first pole is real positive."""
    theta = theta.copy()
    parts = _unpack(theta, orders)
    if not parts:
        return theta
    lead = parts[0][1]
    big = lead[int(np.argmax(np.abs(lead)))]
    if big == 0:
        return theta
    rot = abs(big) / big
    i = 0
    for z, res in parts:
        rr = res * rot
        theta[i + 2 : i + 2 + 2 * len(res)] = np.column_stack([rr.real, rr.imag]).reshape(-1)
        i += 2 + 2 * len(res)
    # Pin the rotated leader exactly onto the real axis.
    k = int(np.argmax(np.abs(lead)))
    theta[2 + 2 * k + 1] = 0.0
    return theta


def _cosine(jac, resid) -> float:
    rn = np.linalg.norm(resid)
    if rn == 0:
        return 0.0
    cn = np.linalg.norm(jac, axis=0)
    g = np.abs(jac.T @ resid)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(cn > 0, g / (cn * rn), 0.0)
    return float(np.max(c, initial=0.0))


def fit_poles(data: Series, init: PoleModel, opts: FitOptions | None = None) -> FitResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) fit of ``|a(E)|^2`` to ``data``.

    Minimises ``sum_i (model_intensity(E_i) - y_i)^2``.  Steps that would
    raise the objective are rejected and the damping grows; accepted steps
    shrink it (Nielsen's rule).  Damping is scaled by ``diag(J^T J)``.
    Convergence is declared when the largest cosine between the residual and
    any Jacobian column is at most ``tol_grad`` or the step is below
    ``tol_step`` relative to the parameter norm.

    Raises NonConvergence (carrying the partial result) when the iteration
    budget runs out first.
    """
    opts = opts or FitOptions()
    if np.iscomplexobj(data.y):
        raise ValueError("intensity data must be real")
    e = np.asarray(data.x, dtype=float)
    y = np.asarray(data.y, dtype=float)
    if np.any(y < 0):
        raise ValueError("intensity data must be nonnegative")
    if not np.any(y >= 1e-12):
        raise NoSignal("all intensities are below 1e-12")
    if not init.poles:
        raise ValueError("initial model has no poles")
    orders = [p.order for p in init.poles]
    theta = _pack(init)
    if e.size < theta.size:
        raise ValueError(f"{e.size} samples cannot determine {theta.size} parameters")

    resid, jac = _residual_and_jacobian(theta, orders, e, y)
    if not (np.all(np.isfinite(resid)) and np.all(np.isfinite(jac))):
        raise IllConditioned("model is not finite at the initial parameters")
    cost = float(resid @ resid)
    history = [cost]
    jtj_diag = np.sum(jac * jac, axis=0)
    lam = opts.damping_init
    nu = 2.0
    converged, reason = False, ""
    it = 0

    while it < opts.max_iterations:
        cosine = _cosine(jac, resid)
        if cosine <= opts.tol_grad:
            converged, reason = True, "gradient"
            break
        it += 1
        scale = np.sqrt(np.maximum(jtj_diag, 1e-300 + 1e-30 * np.max(jtj_diag)))
        aug = np.vstack([jac, np.diag(math.sqrt(lam) * scale)])
        rhs = np.concatenate([-resid, np.zeros(theta.size)])
        step, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        if not np.all(np.isfinite(step)):
            raise IllConditioned("damped normal equations could not be solved")
        if np.linalg.norm(step) <= opts.tol_step * (np.linalg.norm(theta) + opts.tol_step):
            converged, reason = True, "step"
            break
        trial = theta + step
        try:
            new_resid, _ = _residual_and_jacobian(trial, orders, e, y, want_jac=False)
        except (OverflowError, ZeroDivisionError, ValueError):
            new_resid = None
        new_cost = float(new_resid @ new_resid) if new_resid is not None else math.inf
        lin = resid + jac @ step
        predicted = cost - float(lin @ lin)
        rho = (cost - new_cost) / predicted if predicted > 0 else -1.0
        if math.isfinite(new_cost) and new_cost < cost and rho > 0:
            theta = trial
            resid, jac = _residual_and_jacobian(theta, orders, e, y)
            jtj_diag = np.sum(jac * jac, axis=0)
            cost = new_cost
            history.append(cost)
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
        else:
            lam *= nu
            nu *= 2.0
            if lam > 1e32:
                converged, reason = True, "no further reduction"
                break

    theta = _gauge(theta, orders)
    final_resid, final_jac = _residual_and_jacobian(theta, orders, e, y)
    result = FitResult(
        model=_to_model(theta, orders),
        residual_rms=float(np.sqrt(np.mean(final_resid**2))),
        iterations=it,
        converged=converged,
        reason=reason or "max_iterations",
        objective_history=tuple(history),
        gradient_cosine=_cosine(final_jac, final_resid),
    )
    if not converged:
        raise NonConvergence(
            f"no convergence after {opts.max_iterations} iterations "
            f"(gradient cosine {result.gradient_cosine:.3g} > {opts.tol_grad:g})",
            result,
        )
    return result


@dataclass(frozen=True)
class OrderSelection:
    order: int
    fits: tuple
    failures: tuple = ()

    @property
    def best(self) -> FitResult:
        return next(f for f in self.fits if f.model.poles[0].order == self.order)


def leading_residue_significant(fit: FitResult) -> bool:
    """Heuristic: ``|A_order| > 10 * residual_rms`` for the first pole."""
    return abs(fit.model.poles[0].residues[-1]) > 10.0 * fit.residual_rms


def _initial_single(data: Series, z: complex, order: int) -> PoleModel:
    ymax = float(np.max(data.y))
    half = -z.imag
    res = [0j] * order
    res[-1] = complex(math.sqrt(ymax) * half**order)
    return PoleModel.single(z, res)


def _extend(fit: FitResult, scale: float) -> PoleModel:
    p = fit.model.poles[0]
    res = list(p.residues) + [complex(scale)]
    return PoleModel.single(p.z, res)


def select_order(
    data: Series,
    z_init: complex,
    max_order: int,
    threshold: float = 0.05,
    opts: FitOptions | None = None,
) -> OrderSelection:
    """Fit one pole of each order 1..max_order and pick the smallest adequate order.

    An order is adequate when its RMS residual is within ``1 + threshold`` of
    the best residual over all orders.  Residuals are floored at
    ``1e-9 * rms(y)`` first so that noiseless fits at rounding level compare
    as equal.  Each order is started both from a pure leading-residue guess
    and from the previous order's fit; the lower residual wins.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if not np.any(np.asarray(data.y) >= 1e-12):
        raise NoSignal("all intensities are below 1e-12")
    z_init = complex(z_init)
    fits, failures = [], []
    prev = None
    for order in range(1, max_order + 1):
        starts = [_initial_single(data, z_init, order)]
        if prev is not None:
            lead = abs(prev.model.poles[0].residues[-1])
            starts.append(_extend(prev, 1e-3 * lead * (-prev.model.poles[0].z.imag)))
        best = None
        last_error = None
        for start in starts:
            try:
                f = fit_poles(data, start, opts)
            except (NonConvergence, IllConditioned) as exc:
                last_error = exc
                continue
            if best is None or f.residual_rms < best.residual_rms:
                best = f
        if best is None:
            failures.append((order, str(last_error)))
        else:
            fits.append(best)
            prev = best
    if not fits:
        raise AllFitsFailed("no candidate order converged: " + "; ".join(m for _, m in failures))

    floor = 1e-9 * float(np.sqrt(np.mean(np.square(data.y))))
    eff = [max(f.residual_rms, floor) for f in fits]
    target = (1.0 + threshold) * min(eff)
    chosen = next(f for f, r in zip(fits, eff) if r <= target)
    return OrderSelection(chosen.model.poles[0].order, tuple(fits), tuple(failures))
