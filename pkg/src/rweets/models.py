"""From-scratch classifiers over sparse rows, stratified k-fold plans, and
the cross-validation harness.

LogisticRegression is multinomial (softmax) with full-batch gradient descent
from zero-initialized weights, L2 penalty on weights (not bias), and a loss
convergence stop. MultinomialNaiveBayes is the count-based multinomial model
with Laplace smoothing; it must be fed raw term counts, never tf-idf or
normalized rows. Everything here is deterministic given its inputs and seed;
ties always resolve to the lowest class index.
"""

import random
from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_equal_length, check_is_fitted
from .corpus import LabelDomain
from .digest import atomic_write_text
from .errors import (
    FormatError,
    TrainingDivergedError,
    ValidationError,
)
from .features import FeatureConfig, featurize_tokens
from .metrics import MetricsReport, compute_report
from .sparse import SparseMatrix


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    max_epochs: int = 500
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.l2_penalty < 0:
            raise ValidationError("l2_penalty must be nonnegative")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be at least 1")


def _resolve_classes(y, classes) -> list[str]:
    if classes is None:
        seen = []
        for label in y:
            if label not in seen:
                seen.append(label)
        classes = seen
    classes = list(classes)
    if len(set(y) | set(classes)) > len(classes):
        unknown = sorted(set(y) - set(classes))
        raise ValidationError(f"labels {unknown} not in class list")
    if len(set(y)) < 2:
        raise ValidationError("training labels cover fewer than 2 classes")
    return classes


def _one_hot(y, classes) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(y), len(classes)))
    for r, label in enumerate(y):
        out[r, index[label]] = 1.0
    return out


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_and_grads(X: SparseMatrix, Y: np.ndarray, W: np.ndarray, b: np.ndarray, l2: float):
    """Cross-entropy plus (l2/2)||W||^2 and its analytic gradients.

    Overflow is allowed to propagate as inf: fit() checks the loss and
    reports divergence with the failing epoch.
    """
    n = X.rows
    with np.errstate(over="ignore", invalid="ignore"):
        probs = _softmax(X.matmul_dense(W.T) + b)
        eps = 1e-300  # guards log(0) for confidently wrong predictions
        nll = -np.sum(Y * np.log(probs + eps)) / n
        loss = nll + 0.5 * l2 * float(np.sum(W * W))
        delta = (probs - Y) / n
        grad_w = X.t_matmul_dense(delta).T + l2 * W
        grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


class LogisticRegression(BaseEstimator):
    """Softmax regression trained by full-batch gradient descent."""

    name = "logreg"
    input_kind = "weighted"

    def __init__(self, learning_rate=0.1, l2_penalty=1e-4, max_epochs=500, tol=1e-6):
        self.learning_rate = learning_rate
        self.l2_penalty = l2_penalty
        self.max_epochs = max_epochs
        self.tol = tol

    def fit(self, X: SparseMatrix, y, classes=None) -> "LogisticRegression":
        check_equal_length("X rows", range(X.rows), "y", y)
        classes = _resolve_classes(y, classes)
        Y = _one_hot(y, classes)
        W = np.zeros((len(classes), X.cols))
        b = np.zeros(len(classes))
        losses = []
        previous = None
        for epoch in range(self.max_epochs):
            loss, grad_w, grad_b = _loss_and_grads(X, Y, W, b, self.l2_penalty)
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            losses.append(loss)
            W -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
            if previous is not None and abs(previous - loss) < self.tol:
                break
            previous = loss
        self.classes_ = tuple(classes)
        self.weights_ = W
        self.bias_ = b
        self.loss_history_ = losses
        return self

    def decision_function(self, X: SparseMatrix) -> np.ndarray:
        check_is_fitted(self, "weights_")
        if X.cols != self.weights_.shape[1]:
            raise ValidationError(
                f"matrix has {X.cols} columns, model expects {self.weights_.shape[1]}"
            )
        return X.matmul_dense(self.weights_.T) + self.bias_

    def predict_proba(self, X: SparseMatrix) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(self, X: SparseMatrix) -> list[str]:
        probs = self.predict_proba(X)
        return [self.classes_[i] for i in np.argmax(probs, axis=1)]


def zero_model(classes, n_cols: int) -> LogisticRegression:
    """An untrained model with all-zero parameters: predicts uniform
    probabilities and, by the tie rule, the first class."""
    model = LogisticRegression()
    model.classes_ = tuple(classes)
    model.weights_ = np.zeros((len(model.classes_), n_cols))
    model.bias_ = np.zeros(len(model.classes_))
    model.loss_history_ = []
    return model


def gradient_check(
    X: SparseMatrix, y, classes=None, l2: float = 1e-4, h: float = 1e-5, seed: int = 0
) -> float:
    """Max relative error between analytic and central finite-difference
    gradients at a random weight point. Small instances only: cost is two
    loss evaluations per parameter."""
    classes = _resolve_classes(y, classes)
    Y = _one_hot(y, classes)
    rng = np.random.default_rng(seed)
    W = rng.normal(scale=0.5, size=(len(classes), X.cols))
    b = rng.normal(scale=0.5, size=len(classes))
    _, grad_w, grad_b = _loss_and_grads(X, Y, W, b, l2)

    def loss_at(W_try, b_try):
        return _loss_and_grads(X, Y, W_try, b_try, l2)[0]

    worst = 0.0
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            W_hi, W_lo = W.copy(), W.copy()
            W_hi[i, j] += h
            W_lo[i, j] -= h
            numeric = (loss_at(W_hi, b) - loss_at(W_lo, b)) / (2 * h)
            denom = max(1e-8, abs(numeric) + abs(grad_w[i, j]))
            worst = max(worst, abs(numeric - grad_w[i, j]) / denom)
    for i in range(len(b)):
        b_hi, b_lo = b.copy(), b.copy()
        b_hi[i] += h
        b_lo[i] -= h
        numeric = (loss_at(W, b_hi) - loss_at(W, b_lo)) / (2 * h)
        denom = max(1e-8, abs(numeric) + abs(grad_b[i]))
        worst = max(worst, abs(numeric - grad_b[i]) / denom)
    return worst


class MultinomialNaiveBayes(BaseEstimator):
    """Multinomial naive Bayes with Laplace smoothing over raw term counts."""

    name = "nb"
    input_kind = "counts"

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X: SparseMatrix, y, classes=None) -> "MultinomialNaiveBayes":
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        check_equal_length("X rows", range(X.rows), "y", y)
        if X.nnz and X.data.min() < 0:
            raise ValidationError("count matrix must be nonnegative")
        classes = _resolve_classes(y, classes)
        index = {c: i for i, c in enumerate(classes)}
        groups = np.fromiter((index[label] for label in y), dtype=np.int64, count=len(y))
        class_counts = np.bincount(groups, minlength=len(classes)).astype(np.float64)
        if np.any(class_counts == 0):
            missing = [c for c, n in zip(classes, class_counts) if n == 0]
            raise ValidationError(f"classes {missing} have no training rows")
        term_counts = X.sum_rows_by_group(groups, len(classes))
        smoothed = term_counts + self.alpha
        totals = smoothed.sum(axis=1, keepdims=True)
        self.classes_ = tuple(classes)
        self.class_log_prior_ = np.log(class_counts / class_counts.sum())
        self.feature_log_prob_ = np.log(smoothed / totals)
        return self

    def predict_log_joint(self, X: SparseMatrix) -> np.ndarray:
        """log prior + sum of count-weighted log likelihoods, per class."""
        check_is_fitted(self, "feature_log_prob_")
        if X.cols != self.feature_log_prob_.shape[1]:
            raise ValidationError(
                f"matrix has {X.cols} columns, model expects "
                f"{self.feature_log_prob_.shape[1]}"
            )
        return X.matmul_dense(self.feature_log_prob_.T) + self.class_log_prior_

    def predict_log_proba(self, X: SparseMatrix) -> np.ndarray:
        joint = self.predict_log_joint(X)
        log_norm = joint.max(axis=1, keepdims=True)
        log_norm = log_norm + np.log(np.exp(joint - log_norm).sum(axis=1, keepdims=True))
        return joint - log_norm

    def predict(self, X: SparseMatrix) -> list[str]:
        joint = self.predict_log_joint(X)
        return [self.classes_[i] for i in np.argmax(joint, axis=1)]


CLASSIFIERS = {
    "logreg": LogisticRegression,
    "nb": MultinomialNaiveBayes,
}


def make_classifier(name: str, train_config: TrainConfig | None = None, alpha: float = 1.0):
    if name not in CLASSIFIERS:
        raise ValidationError(f"unknown classifier {name!r}; choose from {sorted(CLASSIFIERS)}")
    if name == "logreg":
        cfg = train_config or TrainConfig()
        return LogisticRegression(
            learning_rate=cfg.learning_rate,
            l2_penalty=cfg.l2_penalty,
            max_epochs=cfg.max_epochs,
            tol=cfg.tol,
        )
    return MultinomialNaiveBayes(alpha=alpha)


# --- cross-validation -------------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]
    seed: int

    def fold_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f == fold]

    def train_indices(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.assignments) if f != fold]


def stratified_kfold(y, k: int, seed: int) -> FoldPlan:
    """Within each class, shuffle indices with the seeded RNG and deal them
    round-robin to folds, so per-fold class counts differ by at most one."""
    if k < 2:
        raise ValidationError("k must be at least 2")
    y = list(y)
    by_class: dict[str, list[int]] = {}
    for i, label in enumerate(y):
        by_class.setdefault(label, []).append(i)
    for label, members in by_class.items():
        if len(members) < k:
            raise ValidationError(
                f"class {label!r} has {len(members)} members, fewer than k={k}"
            )
    rng = random.Random(seed)
    assignments = [0] * len(y)
    for label in by_class:  # insertion order: first appearance in y
        members = list(by_class[label])
        rng.shuffle(members)
        for position, index in enumerate(members):
            assignments[index] = position % k
    return FoldPlan(k=k, assignments=tuple(assignments), seed=seed)


@dataclass(frozen=True)
class CVResult:
    pooled: MetricsReport
    fold_reports: tuple[MetricsReport, ...]
    plan: FoldPlan
    predictions: tuple[str, ...]


def cross_validate(
    make_clf,
    corpus,
    domain: LabelDomain,
    config: FeatureConfig,
    k: int,
    seed: int,
    raw_texts=None,
) -> CVResult:
    """Stratified k-fold evaluation. The vocabulary is rebuilt on each
    training split; held-out predictions are pooled into one report.

    `make_clf` is a zero-argument factory so every fold trains a fresh
    model. `raw_texts` (id -> original text) is required when the feature
    configuration appends rule features, which evaluate original tweets.
    """
    from .rules import rule_block_for_ids

    labels = corpus.labels()
    if any(label is None for label in labels):
        raise ValidationError("cross-validation requires a fully labeled corpus")
    if config.append_rules and raw_texts is None:
        raise ValidationError("rule features need the original texts (raw_texts)")

    docs = corpus.token_lists()
    ids = corpus.ids()
    rule_block = rule_block_for_ids(ids, raw_texts) if config.append_rules else None

    plan = stratified_kfold(labels, k, seed)
    predictions: list[str | None] = [None] * len(labels)
    fold_reports = []
    for fold in range(k):
        train_idx = plan.train_indices(fold)
        test_idx = plan.fold_indices(fold)
        clf = make_clf()
        counts_only = getattr(clf, "input_kind", "weighted") == "counts"

        def split(indices):
            block = rule_block[indices, :] if rule_block is not None else None
            return [docs[i] for i in indices], tuple(ids[i] for i in indices), block

        train_docs, train_ids, train_rules = split(train_idx)
        test_docs, test_ids, test_rules = split(test_idx)
        train_fm = featurize_tokens(
            train_docs, train_ids, config, rule_block=train_rules, counts_only=counts_only
        )
        test_fm = featurize_tokens(
            test_docs,
            test_ids,
            config,
            vocab=train_fm.vocab,
            rule_block=test_rules,
            counts_only=counts_only,
        )
        clf.fit(train_fm.matrix, [labels[i] for i in train_idx], classes=domain.labels)
        fold_pred = clf.predict(test_fm.matrix)
        for i, pred in zip(test_idx, fold_pred):
            predictions[i] = pred
        fold_reports.append(
            compute_report([labels[i] for i in test_idx], fold_pred, domain)
        )
    pooled = compute_report(labels, predictions, domain)
    return CVResult(
        pooled=pooled,
        fold_reports=tuple(fold_reports),
        plan=plan,
        predictions=tuple(predictions),
    )


# --- persistence ------------------------------------------------------------

_MODEL_MAGIC = "MODEL v1"


def _format_floats(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def save_model(model, path) -> None:
    """Text format: header, class list, then parameter lines."""
    check_is_fitted(model, "classes_")
    if isinstance(model, LogisticRegression):
        kind, cols = "logreg", model.weights_.shape[1]
        param_lines = ["bias\t" + _format_floats(model.bias_)]
        param_lines += [
            f"weights\t{model.classes_[i]}\t" + _format_floats(model.weights_[i])
            for i in range(len(model.classes_))
        ]
        param_lines.append(f"hyper\t{model.learning_rate!r}\t{model.l2_penalty!r}"
                           f"\t{model.max_epochs}\t{model.tol!r}")
    elif isinstance(model, MultinomialNaiveBayes):
        kind, cols = "nb", model.feature_log_prob_.shape[1]
        param_lines = [
            f"alpha\t{model.alpha!r}",
            "log_prior\t" + _format_floats(model.class_log_prior_),
        ]
        param_lines += [
            f"log_likelihood\t{model.classes_[i]}\t" + _format_floats(model.feature_log_prob_[i])
            for i in range(len(model.classes_))
        ]
    else:
        raise ValidationError(f"cannot persist model of type {type(model).__name__}")
    lines = [
        f"{_MODEL_MAGIC} {kind} {len(model.classes_)} {cols}",
        "classes\t" + "\t".join(model.classes_),
        *param_lines,
    ]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = header.split(" ")
        if len(fields) != 5 or " ".join(fields[:2]) != _MODEL_MAGIC:
            raise FormatError(f"{path}: bad model header")
        kind = fields[2]
        try:
            n_classes, cols = int(fields[3]), int(fields[4])
        except ValueError:
            raise FormatError(f"{path}: non-numeric model header fields") from None
        sections: dict[str, list[list[str]]] = {}
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            sections.setdefault(parts[0], []).append(parts[1:])
    try:
        classes = tuple(sections["classes"][0])
        if len(classes) != n_classes:
            raise FormatError(f"{path}: class count disagrees with header")
        if kind == "logreg":
            hyper = sections["hyper"][0]
            model = LogisticRegression(
                learning_rate=float(hyper[0]),
                l2_penalty=float(hyper[1]),
                max_epochs=int(hyper[2]),
                tol=float(hyper[3]),
            )
            model.classes_ = classes
            model.bias_ = np.array([float(v) for v in sections["bias"][0][0].split(" ")])
            weights = {row[0]: row[1] for row in sections["weights"]}
            model.weights_ = np.array(
                [[float(v) for v in weights[c].split(" ")] for c in classes]
            )
            model.loss_history_ = []
            expected_cols = model.weights_.shape[1]
        elif kind == "nb":
            model = MultinomialNaiveBayes(alpha=float(sections["alpha"][0][0]))
            model.classes_ = classes
            model.class_log_prior_ = np.array(
                [float(v) for v in sections["log_prior"][0][0].split(" ")]
            )
            likel = {row[0]: row[1] for row in sections["log_likelihood"]}
            model.feature_log_prob_ = np.array(
                [[float(v) for v in likel[c].split(" ")] for c in classes]
            )
            expected_cols = model.feature_log_prob_.shape[1]
        else:
            raise FormatError(f"{path}: unknown model kind {kind!r}")
    except (KeyError, IndexError, ValueError) as exc:
        raise FormatError(f"{path}: incomplete model file ({exc})") from exc
    if expected_cols != cols:
        raise FormatError(f"{path}: parameter width disagrees with header")
    return model
