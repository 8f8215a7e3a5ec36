import io
from typing import Tuple, Union, Sequence
from pathlib import Path

import pandas as pd

import numpy as np

from interleave._logging import logger
from interleave._docs._docs import d
from interleave.data._dataset import Split, Dataset

__all__ = ["load_delimited", "split_sizes"]


def split_sizes(n: int, fractions: Sequence[float]) -> Tuple[int, int, int]:
    """Sizes of the train, validation and test splits.

    Validation and test get ``floor(n * f)`` rows, the remainder goes to the training split.
    """
    if len(fractions) != 3:
        raise ValueError(f"Expected `3` split fractions, found `{len(fractions)}`.")
    f_train, f_val, f_test = (float(f) for f in fractions)
    if min(f_train, f_val, f_test) < 0:
        raise ValueError(f"Expected split fractions to be non-negative, found `{tuple(fractions)}`.")
    if not np.isclose(f_train + f_val + f_test, 1.0, rtol=0, atol=1e-9):
        raise ValueError(f"Expected split fractions to sum to `1`, found `{f_train + f_val + f_test}`.")
    n_val, n_test = int(np.floor(n * f_val)), int(np.floor(n * f_test))
    return n - n_val - n_test, n_val, n_test


def _read_table(path: Path) -> pd.DataFrame:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows = [(i, line.strip()) for i, line in enumerate(lines, start=1) if line.strip()]
    if not rows:
        raise ValueError(f"File `{path}` contains no samples.")
    text = "\n".join(r for _, r in rows)
    try:
        df = pd.read_csv(io.StringIO(text), sep=r"\s*,\s*|\s+", header=None, engine="python", dtype=str)
    except pd.errors.ParserError as e:
        raise ValueError(f"Malformed row in `{path}`: {e}") from None
    df.index = [i for i, _ in rows]

    n_cols = df.notna().sum(axis=1)
    bad = n_cols[n_cols != df.shape[1]]
    if len(bad):
        raise ValueError(f"Malformed row in `{path}` at line `{bad.index[0]}`: expected `{df.shape[1]}` columns.")
    if df.shape[1] < 2:
        raise ValueError(f"Expected at least one feature column and a label column in `{path}`.")
    values = df.apply(pd.to_numeric, errors="coerce")
    if values.iloc[0].isna().all():
        logger.debug(f"Skipping header `{list(df.iloc[0])}` in `{path}`.")
        values = values.iloc[1:]
        if values.empty:
            raise ValueError(f"File `{path}` contains no samples.")
    bad_rows = values.index[values.isna().any(axis=1)]
    if len(bad_rows):
        raise ValueError(f"Malformed row in `{path}` at line `{bad_rows[0]}`: non-numeric value.")
    return values


@d.dedent
def load_delimited(
    path: Union[str, Path],
    n_classes: int,
    fractions: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> Tuple[Dataset, Dataset, Dataset]:
    """Load a delimited numeric table and split it.

    Parameters
    ----------
    path
        UTF-8 text file with one sample per line. Fields are separated by commas or whitespace, the last field is
        the integer label. A first line without any numeric field is skipped as a header.
    n_classes
        Number of classes, labels must be in ``[0, n_classes)``.
    fractions
        Train, validation and test fractions, summing to `1`.
    %(seed)s

    Returns
    -------
    The train, validation and test :class:`interleave.data.Dataset`, after a seeded shuffle.

    Raises
    ------
    ValueError
        If a row is malformed, a label is out of range or the fractions are invalid.
    """
    df = _read_table(Path(path))
    features = df.iloc[:, :-1].to_numpy(dtype=np.float64)
    raw = df.iloc[:, -1].to_numpy(dtype=np.float64)
    not_int = np.flatnonzero(raw != np.round(raw))
    if len(not_int):
        raise ValueError(f"Expected integer label at line `{df.index[not_int[0]]}`, found `{raw[not_int[0]]}`.")
    labels = raw.astype(np.int64)
    out_of_range = np.flatnonzero((labels < 0) | (labels >= n_classes))
    if len(out_of_range):
        line, label = df.index[out_of_range[0]], labels[out_of_range[0]]
        raise ValueError(f"Expected label at line `{line}` to be in `[0, {n_classes})`, found `{label}`.")

    n_train, n_val, n_test = split_sizes(len(labels), fractions)
    perm = np.random.default_rng(seed).permutation(len(labels))
    idx = np.split(perm, [n_train, n_train + n_val])
    logger.debug(f"Loaded `{len(labels)}` samples from `{path}` into splits `{(n_train, n_val, n_test)}`.")
    return tuple(  # type: ignore[return-value]
        Dataset(features[i], labels[i], split) for i, split in zip(idx, (Split.TRAIN, Split.VAL, Split.TEST))
    )
