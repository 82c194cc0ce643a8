import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq
from typing_extensions import Self

from semiflex.errors import IOFailure

FLOAT_FORMAT = "%.17g"


def _render(value: Any) -> str:
    if isinstance(value, str):
        return value
    return json.dumps(value)


def _parse(text: str) -> Any:
    try:
        return json.loads(text)
    except ValueError:
        return text


class Table:
    r"""A result table with a metadata header.

    Every artifact semiflex writes (grids, Green's functions, ensembles, rate
    reports, spectra) is a :class:`Table`. CSV files start with one
    ``# key: value`` line per metadata entry and print floats with 17
    significant digits, so a table written twice from the same inputs is
    byte-identical.

    Args:
        df (pandas.DataFrame): The underlying data frame of the table.
        metadata (Dict[str, Any], optional): Resolved parameters echoed in
            the header, e.g. ``regime``, ``kappa``, ``seed``.
            (default: :obj:`None`)
    """

    def __init__(self, df: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None):
        self.df = df
        self.metadata = dict(metadata or {})

    def __repr__(self) -> str:
        return f"Table(df=\n{self.df},\n  metadata={self.metadata}\n)"

    def __len__(self) -> int:
        r"""Returns the number of rows in the table."""
        return len(self.df)

    @property
    def columns(self) -> List[str]:
        return list(self.df.columns)

    def header(self) -> str:
        return "".join(f"# {key}: {_render(val)}\n" for key, val in self.metadata.items())

    def save(self, path: Union[str, os.PathLike]) -> None:
        r"""Saves the table to ``.csv`` or ``.parquet``. Parquet files store the
        metadata in the arrow schema."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if path.suffix == ".csv":
                with open(path, "w", newline="") as f:
                    f.write(self.header())
                    self.df.to_csv(
                        f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
                    )
            elif path.suffix == ".parquet":
                table = pa.Table.from_pandas(self.df, preserve_index=False)
                metadata_bytes = {
                    key.encode("utf-8"): json.dumps(value).encode("utf-8")
                    for key, value in self.metadata.items()
                }
                table = table.replace_schema_metadata(
                    {**(table.schema.metadata or {}), **metadata_bytes}
                )
                pq.write_table(table, path)
            else:
                raise ValueError(
                    f"Unsupported table format '{path.suffix}' (use .csv or .parquet)."
                )
        except OSError as e:
            raise IOFailure(f"Could not write table to '{path}': {e}") from e

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> Self:
        r"""Loads a table written by :meth:`save`."""
        path = Path(path)
        if path.suffix == ".csv":
            metadata = {}
            with open(path) as f:
                num_header = 0
                for line in f:
                    if not line.startswith("#"):
                        break
                    key, _, value = line[1:].strip().partition(": ")
                    metadata[key] = _parse(value)
                    num_header += 1
            df = pd.read_csv(path, skiprows=num_header)
            return cls(df=df, metadata=metadata)

        assert path.suffix == ".parquet"
        table = pq.read_table(path)
        df = table.to_pandas()
        pandas_keys = {b"pandas"}
        metadata = {
            key.decode("utf-8"): json.loads(value.decode("utf-8"))
            for key, value in (table.schema.metadata or {}).items()
            if key not in pandas_keys
        }
        return cls(df=df, metadata=metadata)
