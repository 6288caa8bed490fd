"""The two window classifiers and their score fusion.

A softmax-regression model over process-tree features and an RBF-kernel SVM
over event-frequency features are trained separately; at detection time
their [0, 1] scores are averaged and thresholded. The SVM margin is squashed
through a logistic to make the two scores commensurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import BinaryIO, List, Tuple

import numpy as np

from . import kernels
from .errors import ParseError, SingleClassError, VersionMismatchError
from .features import MlrFeatures, SvmFeatures

MODEL_MAGIC = "PEELER-MODEL"
MODEL_VERSION = "v1"

CLASSES = ("benign", "ransomware")

DEFAULT_L2 = 1e-3
DEFAULT_C = 10.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 400
DEFAULT_THRESHOLD = 0.5


def _as_matrix(X) -> np.ndarray:
    if isinstance(X, np.ndarray):
        return np.asarray(X, dtype=np.float64)
    rows = [x.as_vector() if isinstance(x, (MlrFeatures, SvmFeatures)) else np.asarray(x, float) for x in X]
    return np.vstack(rows) if rows else np.zeros((0, 0))


def _as_labels(y, n: int) -> np.ndarray:
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise ValueError(f"labels shape {arr.shape} does not match {n} samples")
    out = arr.astype(np.int64)
    if not np.array_equal(out, arr):
        raise ValueError("labels must be 0 (benign) or 1 (ransomware)")
    if set(np.unique(out)) - {0, 1}:
        raise ValueError("labels must be 0 (benign) or 1 (ransomware)")
    return out


@dataclass
class Scaler:
    """Per-feature standardization; zero-variance features keep std 1 and
    are flagged degenerate."""

    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def fit_scaler(samples) -> Scaler:
    X = _as_matrix(samples)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit a scaler")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    degenerate = std == 0.0
    std = np.where(degenerate, 1.0, std)
    return Scaler(mean=mean, std=std, degenerate=degenerate)


def apply_scaler(scaler: Scaler, x) -> np.ndarray:
    if isinstance(x, (MlrFeatures, SvmFeatures)):
        x = x.as_vector()
    return scaler.apply(x)


@dataclass
class MlrModel:
    """Softmax regression over tree features; weights[(2, d+1)], bias last."""

    weights: np.ndarray
    scaler: Scaler
    l2: float
    converged: bool
    n_iter: int
    loss_history: List[float] = field(default_factory=list, repr=False)

    @property
    def classes(self) -> Tuple[str, str]:
        return CLASSES


def train_mlr(
    X,
    y,
    l2: float = DEFAULT_L2,
    max_iter: int = 500,
    grad_tol: float = 1e-6,
) -> MlrModel:
    """Fit by full-batch gradient descent with backtracking line search.

    The accepted step always decreases the regularized loss, so the loss
    history is non-increasing; converged means the gradient norm fell below
    grad_tol before max_iter.
    """
    Xm = _as_matrix(X)
    n = Xm.shape[0]
    ym = _as_labels(y, n)
    if n < 4:
        raise ValueError("need at least 4 training samples")
    if len(np.unique(ym)) < 2:
        raise SingleClassError("training data has a single class")
    scaler = fit_scaler(Xm)
    Xb = np.hstack([scaler.apply(Xm), np.ones((n, 1))])
    W = np.zeros((2, Xb.shape[1]))

    loss, grad = kernels.mlr_loss_grad(W, Xb, ym, l2)
    history = [float(loss)]
    converged = False
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = float((grad * grad).sum())
        if np.sqrt(gnorm2) < grad_tol:
            converged = True
            it -= 1
            break
        accepted = False
        t = step
        while t > 1e-14:
            Wc = W - t * grad
            closs, cgrad = kernels.mlr_loss_grad(Wc, Xb, ym, l2)
            if closs <= loss - 1e-4 * t * gnorm2:
                W, loss, grad = Wc, closs, cgrad
                history.append(float(loss))
                step = min(t * 2.0, 64.0)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # no descent step representable; treat as stalled
    return MlrModel(
        weights=W, scaler=scaler, l2=l2, converged=converged, n_iter=it, loss_history=history
    )


def mlr_class_probabilities(m: MlrModel, x) -> np.ndarray:
    """Softmax probabilities (benign, ransomware) for one feature vector."""
    return mlr_probabilities_batch(m, _as_matrix([x]))[0]


def mlr_probabilities_batch(m: MlrModel, X) -> np.ndarray:
    Xm = _as_matrix(X)
    Xb = np.hstack([m.scaler.apply(Xm), np.ones((Xm.shape[0], 1))])
    scores = Xb @ m.weights.T
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    return e / e.sum(axis=1, keepdims=True)


def predict_mlr(m: MlrModel, x) -> float:
    """Probability that the window is ransomware."""
    return float(mlr_class_probabilities(m, x)[1])


@dataclass
class SvmModel:
    """RBF-kernel SVM; support vectors are stored scaled, dual_coefs are
    alpha_i * y_i."""

    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    gamma: float
    c: float
    scaler: Scaler
    converged: bool
    passes: int
    dual_objective: float


def train_svm(
    X,
    y,
    c: float = DEFAULT_C,
    gamma: float = None,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> SvmModel:
    """Fit the dual with the pairwise optimizer in kernels.smo_solve.

    gamma defaults to 1/n_features. When the pass budget runs out before the
    KKT gap closes, the best iterate is returned with converged False.
    """
    Xm = _as_matrix(X)
    n = Xm.shape[0]
    ym = _as_labels(y, n)
    if len(np.unique(ym)) < 2:
        raise SingleClassError("training data has a single class")
    if gamma is None:
        gamma = 1.0 / Xm.shape[1]
    scaler = fit_scaler(Xm)
    Xs = scaler.apply(Xm)
    yy = np.where(ym == 1, 1.0, -1.0)
    gram = kernels.rbf_gram(Xs, Xs, gamma)
    alpha, bias, passes, converged = kernels.smo_solve(gram, yy, c, tol, max_passes)
    ay = alpha * yy
    objective = float(alpha.sum() - 0.5 * (ay @ gram @ ay))
    keep = alpha > 1e-10
    return SvmModel(
        support_vectors=Xs[keep],
        dual_coefs=ay[keep],
        bias=float(bias),
        gamma=float(gamma),
        c=float(c),
        scaler=scaler,
        converged=bool(converged),
        passes=int(passes),
        dual_objective=objective,
    )


def svm_decision_batch(m: SvmModel, X) -> np.ndarray:
    Xs = m.scaler.apply(_as_matrix(X))
    if m.support_vectors.shape[0] == 0:
        return np.full(Xs.shape[0], m.bias)
    k = kernels.rbf_gram(Xs, m.support_vectors, m.gamma)
    return k @ m.dual_coefs + m.bias


def svm_decision(m: SvmModel, x) -> float:
    """Raw margin f(x) = sum_i coef_i K(sv_i, x) + b."""
    return float(svm_decision_batch(m, _as_matrix([x]))[0])


def predict_svm_batch(m: SvmModel, X) -> np.ndarray:
    f = np.clip(svm_decision_batch(m, X), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-f))


def predict_svm(m: SvmModel, x) -> float:
    """Margin squashed to [0, 1]; 0.5 sits exactly on the boundary."""
    return float(predict_svm_batch(m, _as_matrix([x]))[0])


@dataclass
class FusedClassifier:
    mlr: MlrModel
    svm: SvmModel
    threshold: float = DEFAULT_THRESHOLD


def fuse(fc: FusedClassifier, x_mlr, x_svm) -> Tuple[float, str]:
    """Average the two scores; ransomware at or above the threshold."""
    score = 0.5 * (predict_mlr(fc.mlr, x_mlr) + predict_svm(fc.svm, x_svm))
    return score, CLASSES[1] if score >= fc.threshold else CLASSES[0]


def fuse_batch(fc: FusedClassifier, X_mlr, X_svm) -> np.ndarray:
    return 0.5 * (mlr_probabilities_batch(fc.mlr, X_mlr)[:, 1] + predict_svm_batch(fc.svm, X_svm))


# --- persistence ------------------------------------------------------------


def _fmt(value: float) -> str:
    return repr(float(value))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in v)


def _scaler_lines(s: Scaler) -> List[str]:
    return [
        f"mean = {_fmt_vec(s.mean)}",
        f"std = {_fmt_vec(s.std)}",
        "degenerate = " + " ".join("1" if d else "0" for d in s.degenerate),
    ]


def save_model(fc: FusedClassifier, sink: BinaryIO) -> None:
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}"]
    lines.append("[scaler.mlr]")
    lines += _scaler_lines(fc.mlr.scaler)
    lines.append("[mlr]")
    lines.append(f"l2 = {_fmt(fc.mlr.l2)}")
    lines.append(f"converged = {int(fc.mlr.converged)}")
    lines.append(f"n_iter = {fc.mlr.n_iter}")
    for cls, row in zip(CLASSES, fc.mlr.weights):
        lines.append(f"weights.{cls} = {_fmt_vec(row)}")
    lines.append("[scaler.svm]")
    lines += _scaler_lines(fc.svm.scaler)
    lines.append("[svm]")
    lines.append(f"c = {_fmt(fc.svm.c)}")
    lines.append(f"gamma = {_fmt(fc.svm.gamma)}")
    lines.append(f"bias = {_fmt(fc.svm.bias)}")
    lines.append(f"converged = {int(fc.svm.converged)}")
    lines.append(f"passes = {fc.svm.passes}")
    lines.append(f"dual_objective = {_fmt(fc.svm.dual_objective)}")
    lines.append(f"coef = {_fmt_vec(fc.svm.dual_coefs)}")
    for i, sv in enumerate(fc.svm.support_vectors):
        lines.append(f"sv.{i} = {_fmt_vec(sv)}")
    lines.append("[fusion]")
    lines.append(f"threshold = {_fmt(fc.threshold)}")
    sink.write(("\n".join(lines) + "\n").encode("utf-8"))


def _parse_sections(text: str):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = {}
            continue
        if current is None:
            raise ParseError(lineno, "key outside any section")
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(lineno, "expected key = value")
        sections[current][key.strip()] = value.strip()
    return sections


def _vec(s: str) -> np.ndarray:
    return np.array([float(t) for t in s.split()], dtype=np.float64) if s else np.zeros(0)


def _scaler_from(sec: dict) -> Scaler:
    return Scaler(
        mean=_vec(sec["mean"]),
        std=_vec(sec["std"]),
        degenerate=np.array([t == "1" for t in sec["degenerate"].split()]),
    )


def load_model(source: BinaryIO) -> FusedClassifier:
    text = source.read().decode("utf-8")
    first, _, rest = text.partition("\n")
    if not first.startswith(MODEL_MAGIC + " "):
        raise ParseError(1, "missing model header magic")
    version = first[len(MODEL_MAGIC) + 1 :].strip()
    if version != MODEL_VERSION:
        raise VersionMismatchError(f"unsupported model version {version!r}")
    try:
        sec = _parse_sections(rest)
        mlr_scaler = _scaler_from(sec["scaler.mlr"])
        msec = sec["mlr"]
        weights = np.vstack([_vec(msec[f"weights.{cls}"]) for cls in CLASSES])
        mlr = MlrModel(
            weights=weights,
            scaler=mlr_scaler,
            l2=float(msec["l2"]),
            converged=msec["converged"] == "1",
            n_iter=int(msec["n_iter"]),
        )
        svm_scaler = _scaler_from(sec["scaler.svm"])
        ssec = sec["svm"]
        coefs = _vec(ssec["coef"])
        svs = [ _vec(ssec[f"sv.{i}"]) for i in range(len(coefs)) ]
        sv_matrix = np.vstack(svs) if svs else np.zeros((0, len(svm_scaler.mean)))
        svm = SvmModel(
            support_vectors=sv_matrix,
            dual_coefs=coefs,
            bias=float(ssec["bias"]),
            gamma=float(ssec["gamma"]),
            c=float(ssec["c"]),
            scaler=svm_scaler,
            converged=ssec["converged"] == "1",
            passes=int(ssec["passes"]),
            dual_objective=float(ssec["dual_objective"]),
        )
        threshold = float(sec["fusion"]["threshold"])
    except KeyError as exc:
        raise ParseError(0, f"missing model key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ParseError(0, f"bad model value: {exc}") from None
    return FusedClassifier(mlr=mlr, svm=svm, threshold=threshold)


def save_model_file(path, fc: FusedClassifier) -> None:
    with open(path, "wb") as f:
        save_model(fc, f)


def load_model_file(path) -> FusedClassifier:
    with open(path, "rb") as f:
        return load_model(f)
