"""Linear epsilon-insensitive support vector regression for tower-load
prediction, trained by dual coordinate descent.

Features are standardized through an explicit scaler; the target is
standardized internally by the trainer (the cost grid is specified in
standardized units, the tube half-width in raw N·m).  The bias is carried
as an augmented constant feature, so the dual is a pure box-constrained
problem.  Training is deterministic for a fixed sample-visit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CONVERGENCE_TOL = 1e-8   # absolute dual-objective improvement per pass
KKT_TOL = 1e-6           # per-coordinate optimality violation at stop
FEATURE_NAMES = ("wind_ms", "tower_disp_m", "rotor_power_W",
                 "tower_accel_ms2")


class ZeroVarianceError(ValueError):
    """A feature (or the target) has no variance; it cannot be scaled."""


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine normalization fitted on a training set."""

    means: np.ndarray
    stds: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.means) / self.stds

    def inverse(self, Xs: np.ndarray) -> np.ndarray:
        return Xs * self.stds + self.means


@dataclass(frozen=True)
class SvrHyper:
    cost_c: float
    epsilon: float          # N·m, raw target units
    standardized: bool = True

    def __post_init__(self):
        if self.cost_c <= 0.0 or self.epsilon < 0.0:
            raise ValueError("cost must be positive, epsilon non-negative")


@dataclass
class Dataset:
    """Feature rows (wind, tower displacement, rotor power, tower accel)
    with tower-moment targets and source-profile tags."""

    X: np.ndarray        # (n, 4)
    y: np.ndarray        # (n,)
    tags: tuple = ()

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim != 2 or self.X.shape[1] != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} feature columns")
        if len(self.y) != len(self.X):
            raise ValueError("feature/target length mismatch")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("dataset contains non-finite entries")
        if len(np.unique(self.y)) < 2:
            raise ValueError("dataset needs at least 2 distinct targets")

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class SvrModel:
    """Trained linear SVR: affine in the raw features."""

    weights: np.ndarray      # (4,), standardized-feature space
    bias: float              # standardized-target space
    scaler: Scaler
    target_mean: float
    target_std: float
    hyper: SvrHyper
    seed: int
    passes: int = 0
    converged: bool = True
    dual_objective: float = 0.0
    train_rmse: float = 0.0
    beta: np.ndarray = None  # dual variables at convergence


def standardize(ds: Dataset) -> tuple[Dataset, Scaler]:
    """Shift/scale every feature to zero mean, unit std over the set."""
    means = ds.X.mean(axis=0)
    stds = ds.X.std(axis=0)
    for j, s in enumerate(stds):
        if s == 0.0:
            raise ZeroVarianceError(
                f"feature '{FEATURE_NAMES[j]}' has zero variance")
    scaler = Scaler(means=means, stds=stds)
    return Dataset(scaler.transform(ds.X), ds.y, ds.tags), scaler


def dual_objective(beta: np.ndarray, X_aug: np.ndarray, y: np.ndarray,
                   epsilon: float) -> float:
    """0.5 beta' Q beta - y'beta + eps|beta|_1 with Q = X_aug X_aug'."""
    w = X_aug.T @ beta
    return float(0.5 * w @ w - y @ beta + epsilon * np.abs(beta).sum())


def train_svr(ds: Dataset, hyper: SvrHyper, scaler: Scaler, seed: int = 0,
              max_passes: int = 400, tol: float = CONVERGENCE_TOL,
              warm_start: SvrModel = None) -> SvrModel:
    """Fit the epsilon-SVR dual by coordinate descent.

    ``ds`` must already be standardized (means ~0); the target is
    standardized here.  Converged when the dual objective improves by
    less than ``tol`` over a full pass; hitting the pass cap instead is
    reported through ``converged``/``passes``.
    """
    if np.abs(ds.X.mean(axis=0)).max() > 1e-6:
        raise ValueError("train_svr expects a standardized dataset")
    n = len(ds)
    y_mean = float(ds.y.mean())
    y_std = float(ds.y.std())
    if y_std == 0.0:
        raise ZeroVarianceError("target has zero variance")
    y = (ds.y - y_mean) / y_std
    eps = hyper.epsilon / y_std
    C = hyper.cost_c

    rows = [tuple(r) + (1.0,) for r in ds.X]
    q_diag = [sum(v * v for v in r) for r in rows]
    d = len(rows[0])

    if warm_start is not None and warm_start.beta is not None \
            and len(warm_start.beta) == n:
        beta = [float(b) for b in warm_start.beta]
        w = [0.0] * d
        for r, b in zip(rows, beta):
            if b != 0.0:
                for j in range(d):
                    w[j] += b * r[j]
    else:
        beta = [0.0] * n
        w = [0.0] * d

    rng = np.random.Generator(np.random.PCG64(seed))
    y_list = [float(v) for v in y]
    f_prev = math.inf
    passes = 0
    converged = False
    while passes < max_passes:
        order = rng.permutation(n)
        viol_max = 0.0
        for i in order:
            r = rows[i]
            qii = q_diag[i]
            if qii == 0.0:
                continue
            b_i = beta[i]
            pred = 0.0
            for j in range(d):
                pred += w[j] * r[j]
            g = pred - y_list[i]
            # first-order optimality violation of this coordinate
            if b_i >= C:
                v = max(0.0, g + eps)
            elif b_i <= -C:
                v = max(0.0, -(g - eps))
            elif b_i > 0.0:
                v = abs(g + eps)
            elif b_i < 0.0:
                v = abs(g - eps)
            else:
                v = max(0.0, g - eps, -(g + eps))
            if v > viol_max:
                viol_max = v
            h = g - qii * b_i
            if h < -eps:
                z = -(h + eps) / qii
            elif h > eps:
                z = -(h - eps) / qii
            else:
                z = 0.0
            z = min(max(z, -C), C)
            delta = z - b_i
            if delta != 0.0:
                beta[i] = z
                for j in range(d):
                    w[j] += delta * r[j]
        passes += 1
        f = 0.5 * sum(v * v for v in w) \
            - sum(b * t for b, t in zip(beta, y_list)) \
            + eps * sum(abs(b) for b in beta)
        if f_prev - f < tol and viol_max < KKT_TOL:
            converged = True
            f_prev = f
            break
        f_prev = f

    weights = np.array(w[:-1])
    bias = w[-1]
    pred_std = ds.X @ weights + bias
    resid = (pred_std - y) * y_std
    model = SvrModel(
        weights=weights, bias=bias, scaler=scaler,
        target_mean=y_mean, target_std=y_std, hyper=hyper, seed=seed,
        passes=passes, converged=converged, dual_objective=float(f_prev),
        train_rmse=float(np.sqrt(np.mean(resid**2))),
        beta=np.array(beta),
    )
    return model


def predict(model: SvrModel, features) -> float:
    """Tower-moment prediction (N·m) for one raw feature vector."""
    f = np.asarray(features, dtype=float)
    if f.shape != (len(FEATURE_NAMES),):
        raise ValueError(f"expected {len(FEATURE_NAMES)} features")
    if not np.all(np.isfinite(f)):
        raise ValueError("non-finite features")
    xs = model.scaler.transform(f)
    return float((xs @ model.weights + model.bias) * model.target_std
                 + model.target_mean)


def predict_batch(model: SvrModel, X: np.ndarray) -> np.ndarray:
    Xs = model.scaler.transform(np.asarray(X, dtype=float))
    return (Xs @ model.weights + model.bias) * model.target_std \
        + model.target_mean


def accuracy(pred, actual) -> tuple[float, float]:
    """(RMSE, normalized accuracy).  Normalized accuracy is defined as
    1 - RMSE / (max(actual) - min(actual))."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if len(p) != len(a) or len(a) < 1:
        raise ValueError("prediction/actual length mismatch or empty")
    rmse = float(np.sqrt(np.mean((p - a)**2)))
    rng = float(a.max() - a.min())
    if rng == 0.0:
        raise ZeroVarianceError("target range is zero")
    return rmse, 1.0 - rmse / rng


def grid_search(ds_train: Dataset, ds_val: Dataset,
                grid: tuple, seed: int = 0, max_passes: int = 400,
                tol: float = CONVERGENCE_TOL) -> tuple[SvrHyper, list]:
    """Exhaustive (C, epsilon) search; lowest validation RMSE wins, ties
    broken by smaller C then larger epsilon.

    Returns the winning hyperparameters and the full RMSE table as
    (C, epsilon, rmse) triples in evaluation order.
    """
    c_list, eps_list = grid
    if len(c_list) == 0 or len(eps_list) == 0:
        raise ValueError("empty hyperparameter grid")
    ds_std, scaler = standardize(ds_train)
    table = []
    best = None       # (rmse, C, eps)
    for c in c_list:
        for eps in eps_list:
            hyper = SvrHyper(cost_c=float(c), epsilon=float(eps))
            model = train_svr(ds_std, hyper, scaler, seed=seed,
                              max_passes=max_passes, tol=tol)
            rmse, _ = accuracy(predict_batch(model, ds_val.X), ds_val.y)
            table.append((float(c), float(eps), rmse))
            if best is None or rmse < best[0] \
                    or (rmse == best[0]
                        and (c < best[1] or (c == best[1] and eps > best[2]))):
                best = (rmse, float(c), float(eps))
    return SvrHyper(cost_c=best[1], epsilon=best[2]), table


def save_model(model: SvrModel, path) -> None:
    """Plain-text key=value model file at 17 significant digits."""
    def fmt(vals):
        return ",".join(f"{v:.17g}" for v in np.atleast_1d(vals))

    with open(path, "w") as fh:
        fh.write(f"weights={fmt(model.weights)}\n")
        fh.write(f"bias={model.bias:.17g}\n")
        fh.write(f"feature_means={fmt(model.scaler.means)}\n")
        fh.write(f"feature_stds={fmt(model.scaler.stds)}\n")
        fh.write(f"target_mean={model.target_mean:.17g}\n")
        fh.write(f"target_std={model.target_std:.17g}\n")
        fh.write(f"cost_c={model.hyper.cost_c:.17g}\n")
        fh.write(f"epsilon={model.hyper.epsilon:.17g}\n")
        fh.write(f"standardized={int(model.hyper.standardized)}\n")
        fh.write(f"seed={model.seed}\n")
        fh.write(f"passes={model.passes}\n")
        fh.write(f"converged={int(model.converged)}\n")
        fh.write(f"dual_objective={model.dual_objective:.17g}\n")
        fh.write(f"train_rmse={model.train_rmse:.17g}\n")


def load_model(path) -> SvrModel:
    kv = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            k, v = line.split("=", 1)
            kv[k] = v

    def arr(key):
        return np.array([float(x) for x in kv[key].split(",")])

    try:
        return SvrModel(
            weights=arr("weights"),
            bias=float(kv["bias"]),
            scaler=Scaler(means=arr("feature_means"),
                          stds=arr("feature_stds")),
            target_mean=float(kv["target_mean"]),
            target_std=float(kv["target_std"]),
            hyper=SvrHyper(cost_c=float(kv["cost_c"]),
                           epsilon=float(kv["epsilon"]),
                           standardized=bool(int(kv["standardized"]))),
            seed=int(kv["seed"]),
            passes=int(kv["passes"]),
            converged=bool(int(kv["converged"])),
            dual_objective=float(kv["dual_objective"]),
            train_rmse=float(kv["train_rmse"]),
        )
    except KeyError as exc:
        raise ValueError(f"malformed model file {path}: missing {exc}") from exc


def save_dataset_csv(times, ds: Dataset, path) -> None:
    """Dataset CSV: time, the four features, and the moment target."""
    with open(path, "w") as fh:
        fh.write("time_s,wind_ms,tower_disp_m,rotor_power_W,"
                 "tower_accel_ms2,tower_moment_Nm\n")
        for t, row, target in zip(times, ds.X, ds.y):
            cols = [t] + list(row) + [target]
            fh.write(",".join(f"{v:.12g}" for v in cols) + "\n")


def load_dataset_csv(path, tags=()) -> tuple[np.ndarray, Dataset]:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 6:
        raise ValueError(f"malformed dataset CSV: {path}")
    return data[:, 0], Dataset(data[:, 1:5], data[:, 5], tags)
