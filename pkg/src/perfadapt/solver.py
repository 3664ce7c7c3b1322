"""Cutting-plane training loop and the restricted working-set QP."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MeasureUndefinedError, ParameterError, TrainingError
from .inference import most_violated, truth_discriminant
from .measures import MeasureKind

# Constraints whose multiplier stays at zero this many outer iterations in
# a row are dropped from the working set (cannot affect w while inactive).
PRUNE_AFTER_ZERO_ITERATIONS = 50

QP_KKT_TOL_FACTOR = 1e-6  # KKT tolerance = factor * C


@dataclass(frozen=True)
class Hyperparams:
    """Regularization trade-off C, stopping tolerance on the 0-100 loss
    scale, and a safety cap on outer iterations."""

    C: float
    epsilon: float = 0.1
    max_iterations: int = 5000

    def __post_init__(self):
        if self.C <= 0:
            raise ParameterError(f"C must be positive, got {self.C}")
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be >= 1")


class WorkingSet:
    """Constraints currently in the restricted QP with their multipliers.

    The Gram matrix of feature deltas is cached and grows one row per
    added constraint.
    """

    def __init__(self, capacity_dim):
        self.records = []
        self.deltas = np.empty((0, capacity_dim))
        self.alphas = np.empty(0)
        self.H = np.empty((0, 0))

    def __len__(self):
        return len(self.records)

    @property
    def losses(self):
        return np.array([rec.loss for rec in self.records])

    def add(self, record):
        delta = record.delta[None, :]
        cross = self.deltas @ record.delta if len(self.records) else np.empty(0)
        own = float(np.dot(record.delta, record.delta))
        k = len(self.records)
        H = np.empty((k + 1, k + 1))
        H[:k, :k] = self.H
        H[:k, k] = cross
        H[k, :k] = cross
        H[k, k] = own
        self.H = H
        self.deltas = np.concatenate([self.deltas, delta], axis=0)
        self.alphas = np.concatenate([self.alphas, [0.0]])
        self.records.append(record)

    def prune_inactive(self):
        """Drop constraints inactive for PRUNE_AFTER_ZERO_ITERATIONS solves."""
        for rec, a in zip(self.records, self.alphas):
            rec.zero_streak = 0 if a > 0 else rec.zero_streak + 1
        keep = [
            i
            for i, rec in enumerate(self.records)
            if rec.zero_streak < PRUNE_AFTER_ZERO_ITERATIONS
        ]
        if len(keep) == len(self.records):
            return 0
        dropped = len(self.records) - len(keep)
        idx = np.array(keep, dtype=np.intp)
        self.records = [self.records[i] for i in keep]
        self.deltas = self.deltas[idx]
        self.alphas = self.alphas[idx]
        self.H = self.H[np.ix_(idx, idx)]
        return dropped

    def weight_vector(self):
        if not self.records:
            return np.zeros(self.deltas.shape[1])
        return self.deltas.T @ self.alphas

    def dual_objective(self):
        if not self.records:
            return 0.0
        quad = float(self.alphas @ self.H @ self.alphas)
        return -0.5 * quad + float(np.dot(self.alphas, self.losses))


def _qp_active_set(H, ell, alpha, C, tol, max_pivots):
    """Deterministic primal active-set solve of
    max ell'a - 0.5 a'Ha  s.t.  a >= 0, sum(a) <= C, warm-started at
    ``alpha`` (updated in place).

    Each pivot solves the equality-constrained problem on the currently
    free coordinates (with the sum cap active or not), then steps to the
    nearest blocking bound.  Bails out feasibly at ``max_pivots``; the
    outer loop's warm starts make that benign.
    """
    free = alpha > 0.0
    sum_active = float(alpha.sum()) >= C - 1e-12 * max(C, 1.0)
    for _ in range(max_pivots):
        idx = np.flatnonzero(free)
        if idx.size == 0:
            g = ell - H @ alpha
            j = int(np.argmax(g))
            if g[j] <= tol:
                return
            free[j] = True
            continue
        Hff = H[np.ix_(idx, idx)].copy()
        # tiny ridge keeps singular faces (duplicate constraints) bounded
        # and every face solve positive definite; error is far below the
        # KKT tolerance
        ridge = 1e-9 * (1.0 + float(np.max(np.diagonal(Hff), initial=0.0)))
        Hff[np.diag_indices_from(Hff)] += ridge
        try:
            if sum_active:
                m = idx.size
                system = np.empty((m + 1, m + 1))
                system[:m, :m] = Hff
                system[:m, m] = 1.0
                system[m, :m] = 1.0
                system[m, m] = 0.0
                rhs = np.concatenate([ell[idx], [C]])
                solution = np.linalg.solve(system, rhs)
                target, mu = solution[:m], float(solution[m])
            else:
                target = np.linalg.solve(Hff, ell[idx])
                mu = 0.0
        except np.linalg.LinAlgError:
            return
        current = alpha[idx]
        direction = target - current
        step = 1.0
        blocker = -1  # position in idx hitting zero; -2 means the sum cap
        negative = direction < -1e-15
        if negative.any():
            ratios = -current[negative] / direction[negative]
            local = int(np.argmin(ratios))
            if ratios[local] < step:
                step = float(ratios[local])
                blocker = int(np.flatnonzero(negative)[local])
        if not sum_active:
            dsum = float(direction.sum())
            if dsum > 1e-15:
                cap = (C - float(current.sum())) / dsum
                if cap < step:
                    step = max(cap, 0.0)
                    blocker = -2
        if step > 0.0:
            alpha[idx] = current + step * direction
            np.clip(alpha, 0.0, None, out=alpha)
        if blocker == -2:
            sum_active = True
            continue
        if blocker >= 0:
            j = int(idx[blocker])
            alpha[j] = 0.0
            free[j] = False
            continue
        # reached the face minimizer; verify multipliers
        if sum_active and mu < -tol:
            sum_active = False
            continue
        g = ell - H @ alpha
        bound = np.flatnonzero(~free)
        if bound.size:
            worst = int(bound[np.argmax(g[bound])])
            if g[worst] - mu > tol:
                free[worst] = True
                continue
        return
    return


def solve_restricted_qp(working_set, C):
    """Maximize -0.5 a'Ha + a'loss with a >= 0, sum(a) <= C over the set.

    Warm-starts from the multipliers already stored on the working set.
    Returns (alphas, w, xi) where w = sum_k a_k delta_k and xi is the
    largest residual violation max(0, loss_k - w . delta_k).
    """
    if C <= 0:
        raise ParameterError(f"C must be positive, got {C}")
    if len(working_set) == 0:
        return working_set.alphas, working_set.weight_vector(), 0.0
    working_set.alphas = np.ascontiguousarray(working_set.alphas)
    _qp_active_set(
        working_set.H,
        working_set.losses,
        working_set.alphas,
        float(C),
        QP_KKT_TOL_FACTOR * C,
        max_pivots=50 * len(working_set) + 100,
    )
    w = working_set.weight_vector()
    residuals = working_set.losses - working_set.deltas @ w
    xi = max(0.0, float(residuals.max()))
    return working_set.alphas, w, xi


@dataclass
class TrainStats:
    iterations: int = 0
    inference_count: int = 0
    final_violation: float = 0.0
    converged: bool = False
    dual_objectives: list = field(default_factory=list)
    history: list = field(default_factory=list)


@dataclass
class LinearModel:
    """Trained weight vector with its termination slack and run counters."""

    w: np.ndarray
    xi: float
    stats: TrainStats
    measure: object = None
    hyperparams: Hyperparams | None = None
    working_set: WorkingSet | None = None

    @property
    def converged(self):
        return self.stats.converged

    def decision_scores(self, data):
        w = self.w
        if data.dimension > w.shape[0]:
            w = np.pad(w, (0, data.dimension - w.shape[0]))
        return data.scores(w)

    def to_json(self):
        return {
            "format": "perfadapt-linear-model",
            "w": self.w.tolist(),
            "xi": self.xi,
            "measure": self.measure.name if self.measure is not None else None,
            "C": self.hyperparams.C if self.hyperparams else None,
            "epsilon": self.hyperparams.epsilon if self.hyperparams else None,
            "converged": self.stats.converged,
        }


def save_linear(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json(), fh, indent=1)


def load_linear(path):
    from .errors import ModelFormatError
    from .measures import MeasureSpec

    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "perfadapt-linear-model":
            raise ModelFormatError(f"{path}: not a linear-model file")
        stats = TrainStats(converged=bool(payload.get("converged", False)))
        hp = None
        if payload.get("C") is not None:
            hp = Hyperparams(C=float(payload["C"]), epsilon=float(payload.get("epsilon", 0.1)))
        measure = (
            MeasureSpec.from_name(payload["measure"]) if payload.get("measure") else None
        )
        return LinearModel(
            w=np.array(payload["w"], dtype=np.float64),
            xi=float(payload.get("xi", 0.0)),
            stats=stats,
            measure=measure,
            hyperparams=hp,
        )
    except ModelFormatError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc


def _check_train_data(data, spec):
    if data.n < 2:
        raise TrainingError(f"need at least 2 examples, got {data.n}")
    if spec.kind is not MeasureKind.ERROR_RATE and (
        data.pos_count == 0 or data.neg_count == 0
    ):
        raise MeasureUndefinedError(f"{spec.name} needs both classes in the training set")


def cutting_plane_train(data, spec, hp, infer=None, trace=None):
    """Grow the working set with most-violated constraints until none is
    violated by more than xi + epsilon.

    ``infer`` takes (w, data, spec) and returns a ConstraintRecord; it
    defaults to the polynomial searches.  Non-convergence within
    ``hp.max_iterations`` returns the current model flagged, not an error.
    """
    _check_train_data(data, spec)
    if infer is None:
        infer = most_violated
    ws = WorkingSet(data.dimension)
    w = np.zeros(data.dimension)
    xi = 0.0
    stats = TrainStats()
    converged = False
    for _ in range(hp.max_iterations):
        record = infer(w, data, spec)
        stats.inference_count += 1
        violation = record.violation(w)
        stats.final_violation = violation
        if violation <= xi + hp.epsilon:
            converged = True
            break
        xi_before = xi
        ws.add(record)
        _, w, xi = solve_restricted_qp(ws, hp.C)
        stats.iterations += 1
        dual = ws.dual_objective()
        stats.dual_objectives.append(dual)
        stats.history.append(
            {
                "iteration": stats.iterations,
                "dual": dual,
                "xi": xi,
                "xi_before": xi_before,
                "violation": violation,
                "inferences": stats.inference_count,
                "working_set": len(ws),
            }
        )
        if trace is not None:
            trace.write(
                f"iter={stats.iterations} dual={dual:.6f} xi={xi:.6f} "
                f"violation={violation:.6f} inferences={stats.inference_count} "
                f"ws={len(ws)}\n"
            )
        ws.prune_inactive()
    stats.converged = converged
    return LinearModel(
        w=w, xi=xi, stats=stats, measure=spec, hyperparams=hp, working_set=ws
    )


def convex_upper_bound(w, data, spec, infer=None):
    """max over admissible labelings of F(y') - F(y) + Delta(y, y').

    Computed with the same most-violated-constraint machinery; upper
    bounds the loss of w's own prediction.
    """
    if infer is None:
        infer = most_violated
    record = infer(np.asarray(w, dtype=np.float64), data, spec)
    return record.objective - truth_discriminant(w, data, spec)
