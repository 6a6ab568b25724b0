"""N-gram feature generation over cleaned corpora: vocabulary building,
sparse tf / tf-idf matrices, L2 row normalization, optional rule-feature
columns, and the 24 standard feature configurations.

Inverse document frequency uses the smoothed form

    idf(t) = ln((1 + N) / (1 + df(t))) + 1

which is strictly positive and defined for unseen terms. Rule-feature
columns, when appended, stay binary and are added AFTER row normalization of
the n-gram block so the bits remain on the same unit scale as normalized
rows.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base import BaseEstimator, check_is_fitted
from .digest import atomic_write_text, digest_json
from .errors import FormatError, StaleCacheError, ValidationError
from .rules import N_PATTERNS
from .sparse import SparseMatrix, SparseRow

NGRAM_RANGES = ((1, 1), (2, 2), (3, 3), (1, 2), (2, 3), (1, 3))
TF = "tf"
TFIDF = "tf-idf"


@dataclass(frozen=True)
class FeatureConfig:
    """One point in the 2 vectorizers x 6 ranges x 2 rule-flags grid, plus
    document-frequency bounds and the normalization switch."""

    vectorizer: str = TF
    ngram_range: tuple[int, int] = (1, 1)
    append_rules: bool = False
    min_df: int = 1
    max_df: float = 1.0
    l2_normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "ngram_range", tuple(self.ngram_range))
        if self.vectorizer not in (TF, TFIDF):
            raise ValidationError(f"vectorizer must be {TF!r} or {TFIDF!r}")
        if self.ngram_range not in NGRAM_RANGES:
            raise ValidationError(
                f"ngram_range must be one of {NGRAM_RANGES}, got {self.ngram_range}"
            )
        if self.min_df < 1:
            raise ValidationError("min_df must be at least 1")
        if not 0.0 < self.max_df <= 1.0:
            raise ValidationError("max_df must be in (0, 1]")

    @property
    def digest(self) -> str:
        return digest_json(
            {
                "kind": "features",
                "vectorizer": self.vectorizer,
                "ngram_range": list(self.ngram_range),
                "append_rules": self.append_rules,
                "min_df": self.min_df,
                "max_df": self.max_df,
                "l2_normalize": self.l2_normalize,
            }
        )


def enumerate_combos() -> tuple[FeatureConfig, ...]:
    """The 24 standard configurations: tf combos 1-12, tf-idf combos 13-24;
    within each vectorizer, plain n-grams first, then rule-extended."""
    combos = []
    for vectorizer in (TF, TFIDF):
        for append_rules in (False, True):
            for ngram_range in NGRAM_RANGES:
                combos.append(
                    FeatureConfig(
                        vectorizer=vectorizer,
                        ngram_range=ngram_range,
                        append_rules=append_rules,
                    )
                )
    return tuple(combos)


def combo(index: int) -> FeatureConfig:
    """1-based lookup into the 24 standard configurations."""
    if not 1 <= index <= 24:
        raise ValidationError(f"combo index must be in 1..24, got {index}")
    return enumerate_combos()[index - 1]


# --- n-grams and vocabulary -------------------------------------------------


def extract_ngrams(tokens, n: int) -> list[str]:
    """Space-joined contiguous windows of length n, in reading order."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    tokens = list(tokens)
    return [" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def iter_range_ngrams(tokens, lo: int, hi: int):
    for n in range(lo, hi + 1):
        yield from extract_ngrams(tokens, n)


@dataclass(frozen=True)
class Vocabulary:
    """Term-to-column mapping in first-appearance order, with the document
    frequencies observed in the corpus it was built from."""

    terms: tuple[str, ...]
    ngram_range: tuple[int, int]
    doc_freqs: tuple[int, ...] | None = None
    n_docs: int | None = None
    index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    @property
    def digest(self) -> str:
        return digest_json(
            {
                "kind": "vocabulary",
                "terms": list(self.terms),
                "range": list(self.ngram_range),
                "doc_freqs": list(self.doc_freqs) if self.doc_freqs else None,
                "n_docs": self.n_docs,
            }
        )


def build_vocabulary(docs, ngram_range, min_df: int = 1, max_df: float = 1.0) -> Vocabulary:
    """Scan token lists, assign columns in first-appearance order, and drop
    terms whose document frequency falls outside [min_df, max_df * N]."""
    lo, hi = ngram_range
    if not 1 <= lo <= hi <= 3:
        raise ValidationError(f"ngram range must satisfy 1 <= lo <= hi <= 3, got {ngram_range}")
    docs = list(docs)
    order: dict[str, int] = {}
    dfs: dict[str, int] = {}
    for tokens in docs:
        seen = set()
        for term in iter_range_ngrams(tokens, lo, hi):
            if term not in order:
                order[term] = len(order)
            if term not in seen:
                seen.add(term)
                dfs[term] = dfs.get(term, 0) + 1
    n_docs = len(docs)
    df_cap = max_df * n_docs
    terms = [t for t in order if min_df <= dfs[t] <= df_cap]
    if not terms:
        raise ValidationError("vocabulary is empty after document-frequency filtering")
    return Vocabulary(
        terms=tuple(terms),
        ngram_range=(lo, hi),
        doc_freqs=tuple(dfs[t] for t in terms),
        n_docs=n_docs,
    )


def vectorize_tf(docs, vocab: Vocabulary) -> SparseMatrix:
    """Raw term counts; terms outside the vocabulary are ignored."""
    docs = list(docs)
    lo, hi = vocab.ngram_range
    triplets = []
    for r, tokens in enumerate(docs):
        counts: dict[int, int] = {}
        for term in iter_range_ngrams(tokens, lo, hi):
            col = vocab.index.get(term)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        triplets.extend((r, col, float(n)) for col, n in counts.items())
    return SparseMatrix.from_triplets(len(docs), len(vocab), triplets)


def idf_vector(vocab: Vocabulary) -> np.ndarray:
    if vocab.doc_freqs is None or vocab.n_docs is None:
        raise ValidationError("vocabulary carries no document frequencies")
    dfs = np.asarray(vocab.doc_freqs, dtype=np.float64)
    return np.log((1.0 + vocab.n_docs) / (1.0 + dfs)) + 1.0


def vectorize_tfidf(docs, vocab: Vocabulary) -> SparseMatrix:
    """tf * idf with the smoothed idf; idf comes from the vocabulary's own
    document frequencies."""
    return vectorize_tf(docs, vocab).scale_columns(idf_vector(vocab))


def l2_normalize_rows(matrix: SparseMatrix) -> SparseMatrix:
    """Scale every nonempty row to unit Euclidean norm; empty rows pass
    through."""
    norms = matrix.row_norms()
    factors = np.where(norms > 0.0, 1.0 / np.where(norms > 0.0, norms, 1.0), 1.0)
    return matrix.scale_rows(factors)


def cosine_similarity(a: SparseRow, b: SparseRow) -> float:
    """dot(a, b) / (|a| |b|); zero when either row is empty."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    norm_a, norm_b = a.norm(), b.norm()
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    values_b = dict(zip(b.cols.tolist(), b.values.tolist()))
    dot = sum(v * values_b.get(c, 0.0) for c, v in zip(a.cols.tolist(), a.values.tolist()))
    return dot / (norm_a * norm_b)


# --- feature matrices -------------------------------------------------------


@dataclass(frozen=True)
class FeatureMatrix:
    matrix: SparseMatrix
    vocab: Vocabulary
    config: FeatureConfig
    row_ids: tuple[str, ...]

    def __post_init__(self):
        expected = len(self.vocab) + (N_PATTERNS if self.config.append_rules else 0)
        if self.matrix.cols != expected:
            raise ValidationError(
                f"matrix has {self.matrix.cols} columns, config implies {expected}"
            )
        if self.matrix.rows != len(self.row_ids):
            raise ValidationError(
                f"matrix has {self.matrix.rows} rows but {len(self.row_ids)} row ids"
            )


def append_rule_features(fm: FeatureMatrix, rule_block: np.ndarray) -> FeatureMatrix:
    """Widen an n-gram matrix with the 18 binary rule columns. The block is
    appended unscaled after any normalization already applied."""
    rule_block = np.asarray(rule_block, dtype=np.float64)
    if rule_block.ndim != 2 or rule_block.shape[1] != N_PATTERNS:
        raise ValidationError(f"rule block must be (rows, {N_PATTERNS})")
    if rule_block.shape[0] != fm.matrix.rows:
        raise ValidationError(
            f"rule block has {rule_block.shape[0]} rows, matrix has {fm.matrix.rows}"
        )
    if fm.config.append_rules:
        raise ValidationError("rule features were already appended")
    new_config = FeatureConfig(
        vectorizer=fm.config.vectorizer,
        ngram_range=fm.config.ngram_range,
        append_rules=True,
        min_df=fm.config.min_df,
        max_df=fm.config.max_df,
        l2_normalize=fm.config.l2_normalize,
    )
    return FeatureMatrix(
        matrix=fm.matrix.append_dense_columns(rule_block),
        vocab=fm.vocab,
        config=new_config,
        row_ids=fm.row_ids,
    )


def featurize_tokens(
    docs,
    ids,
    config: FeatureConfig,
    vocab: Vocabulary | None = None,
    rule_block: np.ndarray | None = None,
    counts_only: bool = False,
) -> FeatureMatrix:
    """Low-level featurization of token lists.

    When `vocab` is None it is built from `docs` (the fit path); passing a
    vocabulary vectorizes new documents against an existing column space.
    `counts_only` skips idf weighting and normalization for classifiers
    defined on raw counts; the rule block is appended either way.
    """
    docs = list(docs)
    ids = tuple(ids)
    if len(docs) != len(ids):
        raise ValidationError("one id per document required")
    if vocab is None:
        vocab = build_vocabulary(docs, config.ngram_range, config.min_df, config.max_df)
    elif vocab.ngram_range != config.ngram_range:
        raise ValidationError(
            f"vocabulary range {vocab.ngram_range} differs from config {config.ngram_range}"
        )
    if counts_only:
        matrix = vectorize_tf(docs, vocab)
    else:
        if config.vectorizer == TFIDF:
            matrix = vectorize_tfidf(docs, vocab)
        else:
            matrix = vectorize_tf(docs, vocab)
        if config.l2_normalize:
            matrix = l2_normalize_rows(matrix)
    base_config = FeatureConfig(
        vectorizer=config.vectorizer,
        ngram_range=config.ngram_range,
        append_rules=False,
        min_df=config.min_df,
        max_df=config.max_df,
        l2_normalize=config.l2_normalize,
    )
    fm = FeatureMatrix(matrix=matrix, vocab=vocab, config=base_config, row_ids=ids)
    if config.append_rules:
        if rule_block is None:
            raise ValidationError("config appends rule features but no rule block was given")
        fm = append_rule_features(fm, rule_block)
    return fm


class NgramVectorizer(BaseEstimator):
    """Estimator wrapper over the functional vectorization path.

    fit() learns the vocabulary (and document frequencies) from token lists;
    transform() maps token lists into that column space, applying idf and
    normalization per the constructor flags.
    """

    def __init__(self, ngram_range=(1, 1), use_idf=False, min_df=1, max_df=1.0, l2_normalize=True):
        self.ngram_range = tuple(ngram_range)
        self.use_idf = use_idf
        self.min_df = min_df
        self.max_df = max_df
        self.l2_normalize = l2_normalize

    def fit(self, docs, y=None) -> "NgramVectorizer":
        self.vocabulary_ = build_vocabulary(docs, self.ngram_range, self.min_df, self.max_df)
        return self

    def transform(self, docs) -> SparseMatrix:
        check_is_fitted(self, "vocabulary_")
        if self.use_idf:
            matrix = vectorize_tfidf(docs, self.vocabulary_)
        else:
            matrix = vectorize_tf(docs, self.vocabulary_)
        if self.l2_normalize:
            matrix = l2_normalize_rows(matrix)
        return matrix

    def transform_counts(self, docs) -> SparseMatrix:
        """Raw counts against the fitted vocabulary, ignoring idf and
        normalization flags."""
        check_is_fitted(self, "vocabulary_")
        return vectorize_tf(docs, self.vocabulary_)

    def fit_transform(self, docs, y=None) -> SparseMatrix:
        return self.fit(docs).transform(docs)


# --- persistence ------------------------------------------------------------

_SPMAT_MAGIC = "SPMAT v1"


def save_matrix(fm: FeatureMatrix, path, digest: str | None = None) -> None:
    """Write the matrix file plus .vocab and .rowids companions.

    The header digest defaults to the feature-config digest; callers that
    key artifacts on more than the configuration (e.g. input content) pass
    the wider digest explicitly.
    """
    path = Path(path)
    m = fm.matrix
    lines = [f"{_SPMAT_MAGIC} {m.rows} {m.cols} {m.nnz} {digest or fm.config.digest}"]
    for r, c, v in fm.matrix.iter_triplets():
        lines.append(f"{r} {c} {v!r}")
    atomic_write_text(path, "".join(line + "\n" for line in lines))
    vocab_lines = [f"{i}\t{term}" for i, term in enumerate(fm.vocab.terms)]
    atomic_write_text(path.with_name(path.name + ".vocab"), "".join(l + "\n" for l in vocab_lines))
    atomic_write_text(path.with_name(path.name + ".rowids"), "".join(i + "\n" for i in fm.row_ids))


def load_matrix(path, config: FeatureConfig, digest: str | None = None) -> FeatureMatrix:
    """Load a persisted feature matrix; the header digest must match the
    expected one (the feature-config digest unless overridden) or the
    artifact is considered stale."""
    path = Path(path)
    expected = digest or config.digest
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        fields = header.split(" ")
        if len(fields) != 6 or " ".join(fields[:2]) != _SPMAT_MAGIC:
            raise FormatError(f"{path.name}: bad matrix header")
        try:
            rows, cols, nnz = int(fields[2]), int(fields[3]), int(fields[4])
        except ValueError:
            raise FormatError(f"{path.name}: non-numeric matrix header fields") from None
        found = fields[5]
        if found != expected:
            raise StaleCacheError(
                f"{path.name}: matrix was built under digest {found}, "
                f"expected {expected}"
            )
        triplets = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path.name}: line {lineno}: expected 'row col value'")
            try:
                triplets.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError:
                raise FormatError(f"{path.name}: line {lineno}: bad triplet") from None
    if len(triplets) != nnz:
        raise FormatError(f"{path.name}: header promises {nnz} entries, found {len(triplets)}")
    matrix = SparseMatrix.from_triplets(rows, cols, triplets)

    vocab_path = path.with_name(path.name + ".vocab")
    terms = []
    with open(vocab_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            index_text, term = line.split("\t")
            if int(index_text) != len(terms):
                raise FormatError(f"{vocab_path.name}: vocabulary indices out of order")
            terms.append(term)
    n_vocab = cols - (N_PATTERNS if config.append_rules else 0)
    if len(terms) != n_vocab:
        raise FormatError(
            f"{vocab_path.name}: {len(terms)} terms but matrix implies {n_vocab}"
        )
    vocab = Vocabulary(terms=tuple(terms), ngram_range=config.ngram_range)

    rowid_path = path.with_name(path.name + ".rowids")
    with open(rowid_path, encoding="utf-8") as fh:
        row_ids = tuple(line.rstrip("\n") for line in fh if line.strip())
    if len(row_ids) != rows:
        raise FormatError(f"{rowid_path.name}: {len(row_ids)} ids but matrix has {rows} rows")
    return FeatureMatrix(matrix=matrix, vocab=vocab, config=config, row_ids=row_ids)
