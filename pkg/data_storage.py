"""
Layer 3: Data Storage
Structure files (JSON, validated with pydantic), scheme and formula files,
and atomic output writes
"""

import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

from pydantic import BaseModel, Field, ValidationError

from errors import SignatureError
from logic import FiniteStructure, Formula, Signature
from scheme_format import parse_scheme
from separation import SeparationScheme
from sexpr import parse_formula

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class StructureFile(BaseModel):
    """On-disk structure: {"universe": n, "relations": {...}, "constants": {...}, "functions": {...}}

    Function rows are [arg_1, ..., arg_m, value].
    """

    universe: int = Field(ge=1)
    relations: Dict[str, List[List[int]]] = Field(default_factory=dict)
    constants: Dict[str, int] = Field(default_factory=dict)
    functions: Dict[str, List[List[int]]] = Field(default_factory=dict)

    def to_structure(self) -> FiniteStructure:
        tables = {}
        for name, rows in self.functions.items():
            if any(len(row) < 2 for row in rows):
                raise SignatureError(f"function {name} rows need at least one argument and a value")
            tables[name] = {tuple(row[:-1]): row[-1] for row in rows}
        return FiniteStructure(
            self.universe,
            {name: frozenset(tuple(t) for t in tuples) for name, tuples in self.relations.items()},
            dict(self.constants),
            tables,
        )

    @classmethod
    def from_structure(cls, A: FiniteStructure) -> "StructureFile":
        return cls(
            universe=A.size,
            relations={name: [list(t) for t in sorted(tuples)] for name, tuples in sorted(A.relations.items())},
            constants=dict(sorted(A.constants.items())),
            functions={
                name: [list(args) + [value] for args, value in sorted(table.items())]
                for name, table in sorted(A.functions.items())
            },
        )


def structure_from_json(text: str) -> FiniteStructure:
    try:
        return StructureFile.model_validate_json(text).to_structure()
    except ValidationError as e:
        raise SignatureError(f"invalid structure file: {e.errors()[0]['msg']}") from e


def structure_to_json(A: FiniteStructure) -> str:
    return StructureFile.from_structure(A).model_dump_json(indent=2) + "\n"


class DataStorage:
    """Reads the toolkit's input files and writes its outputs"""

    def __init__(self, base_dir: Optional[PathLike] = None):
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    def _path(self, path: PathLike) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def read_text(self, path: PathLike) -> str:
        return self._path(path).read_text(encoding="utf-8")

    def load_structure(self, path: PathLike) -> FiniteStructure:
        A = structure_from_json(self.read_text(path))
        logger.debug("loaded structure %s with %d element(s)", path, A.size)
        return A

    def save_structure(self, A: FiniteStructure, path: PathLike) -> Path:
        return self.write_text(path, structure_to_json(A))

    def load_scheme(self, path: PathLike) -> SeparationScheme:
        scheme = parse_scheme(self.read_text(path))
        logger.debug("loaded scheme %s with %d rule(s)", path, len(scheme.rules))
        return scheme

    def load_formula(self, path: PathLike, sig: Optional[Signature] = None) -> Formula:
        return parse_formula(self.read_text(path), sig)

    def write_text(self, path: PathLike, text: str) -> Path:
        """Write through a temporary file in the target directory, then rename over the target"""
        target = self._path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.info("✅ wrote %s", target)
        return target
