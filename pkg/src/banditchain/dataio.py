"""File formats and run orchestration.

Formats owned by this module:

* datasets: CoNLL-style TSV, one ``token<TAB>label`` line per token, blank
  line between sequences, UTF-8;
* checkpoints: versioned weight dumps, binary (byte-stable) or text, both
  value-exact on round trip;
* run configs: one JSON object of known keys (unknown keys are rejected);
* reports: one JSON document per run with the convergence estimates, the
  dev-score curve, the selected checkpoint and a summary row.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from .chain import ChainInstance, ChainModel, LabelAlphabet
from .diagnostics import ConvergenceReport, compare_runs, convergence_report
from .feedback import FeedbackOracle, LossKind
from .objectives import ObjectiveKind
from .sparse import SparseVector
from .trainer import TrainerConfig, evaluate, select_best, train

REPORT_SCHEMA_VERSION = 1

_CHECKPOINT_MAGIC = b"BCWT"
_CHECKPOINT_VERSION = 1
_CHECKPOINT_TEXT_HEADER = "banditchain-checkpoint v1"


class DataError(ValueError):
    """A problem with an input file: malformed content, unknown keys, bad paths."""


# -- datasets ----------------------------------------------------------------


def read_dataset(path: "str | Path", alphabet: LabelAlphabet) -> list[ChainInstance]:
    """Parse a TSV dataset; gold labels are validated against the alphabet."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    instances: list[ChainInstance] = []
    tokens: list[str] = []
    labels: list[str] = []

    def flush() -> None:
        if tokens:
            instances.append(ChainInstance(tokens=tuple(tokens), gold=tuple(labels)))
            tokens.clear()
            labels.clear()

    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                flush()
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise DataError(f"{path}:{line_no}: expected 'token<TAB>label', got {line!r}")
            token, label = parts
            if label not in alphabet:
                raise DataError(
                    f"{path}:{line_no}: label {label!r} not in alphabet {alphabet.labels}"
                )
            tokens.append(token)
            labels.append(label)
    flush()
    if not instances:
        raise DataError(f"{path}: no instances found")
    return instances


def write_dataset(path: "str | Path", instances: Sequence[ChainInstance]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for i, x in enumerate(instances):
            if x.gold is None:
                raise DataError("cannot write an instance without gold labels")
            if i:
                fh.write("\n")
            for token, label in zip(x.tokens, x.gold):
                fh.write(f"{token}\t{label}\n")


# -- checkpoints ---------------------------------------------------------------


def write_checkpoint(path: "str | Path", w: SparseVector, fmt: str = "binary") -> None:
    """Persist a weight vector; entries are sorted by feature id.

    The binary form is byte-stable (same vector, same bytes); the text form
    uses repr() floats, which reparse to the exact same values.
    """
    path = Path(path)
    entries = sorted(w.items())
    if fmt == "binary":
        with path.open("wb") as fh:
            fh.write(_CHECKPOINT_MAGIC)
            fh.write(struct.pack("<HQ", _CHECKPOINT_VERSION, len(entries)))
            for fid, value in entries:
                fh.write(struct.pack("<qd", fid, value))
    elif fmt == "text":
        with path.open("w", encoding="utf-8") as fh:
            fh.write(f"{_CHECKPOINT_TEXT_HEADER} {len(entries)}\n")
            for fid, value in entries:
                fh.write(f"{fid}\t{value!r}\n")
    else:
        raise ValueError(f"unknown checkpoint format {fmt!r}")


def read_checkpoint(path: "str | Path") -> SparseVector:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint file not found: {path}")
    blob = path.read_bytes()
    if blob.startswith(_CHECKPOINT_MAGIC):
        header = struct.calcsize("<HQ")
        version, count = struct.unpack_from("<HQ", blob, len(_CHECKPOINT_MAGIC))
        if version != _CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        offset = len(_CHECKPOINT_MAGIC) + header
        pair = struct.calcsize("<qd")
        if len(blob) != offset + count * pair:
            raise DataError(f"{path}: truncated checkpoint ({len(blob)} bytes)")
        data = {}
        for _ in range(count):
            fid, value = struct.unpack_from("<qd", blob, offset)
            data[fid] = value
            offset += pair
        return SparseVector(data)
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise DataError(f"{path}: not a recognized checkpoint file") from None
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_CHECKPOINT_TEXT_HEADER):
        raise DataError(f"{path}: not a recognized checkpoint file")
    data = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            fid_s, value_s = line.split("\t")
            data[int(fid_s)] = float(value_s)
        except ValueError:
            raise DataError(f"{path}:{line_no}: malformed checkpoint line {line!r}") from None
    return SparseVector(data)


# -- run configuration ---------------------------------------------------------


@dataclass
class RunConfig:
    """Everything one training run needs, loadable from a JSON file."""

    labels: tuple[str, ...] = ()
    train_path: str = ""
    dev_path: str = ""
    test_path: Optional[str] = None
    loss: str = "hamming"
    emission_offsets: tuple[int, ...] = (0,)
    use_transitions: bool = True
    objective: str = "el"
    gamma: float = 0.1
    iterations: int = 1000
    seed: int = 0
    clip_k: float = 0.0
    l2_lambda: float = 0.0
    epoch_size: Optional[int] = None
    eval_every: Optional[int] = None
    snapshots: int = 64
    lr_schedule: str = "constant"
    lipschitz_pairs: int = 500
    init_checkpoint: Optional[str] = None
    report_path: str = "report.json"
    checkpoint_path: str = "model.ckpt"
    checkpoint_format: str = "binary"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["labels"] = list(self.labels)
        d["emission_offsets"] = list(self.emission_offsets)
        return d

    def model(self) -> ChainModel:
        return ChainModel(
            LabelAlphabet(self.labels),
            emission_offsets=self.emission_offsets,
            use_transitions=self.use_transitions,
        )

    def trainer_config(self) -> TrainerConfig:
        return TrainerConfig(
            objective=ObjectiveKind.parse(self.objective),
            gamma=self.gamma,
            iterations=self.iterations,
            seed=self.seed,
            clip_k=self.clip_k,
            l2_lambda=self.l2_lambda,
            epoch_size=self.epoch_size,
            eval_every=self.eval_every,
            snapshots=self.snapshots,
            lr_schedule=self.lr_schedule,
        )

    def validate(self) -> None:
        if len(self.labels) < 2:
            raise DataError("config needs at least 2 labels")
        if not self.train_path or not self.dev_path:
            raise DataError("config needs train_path and dev_path")
        LossKind.parse(self.loss)
        if self.checkpoint_format not in ("binary", "text"):
            raise DataError(f"unknown checkpoint format {self.checkpoint_format!r}")
        if self.lipschitz_pairs <= 0:
            raise DataError("lipschitz_pairs must be positive")
        try:
            self.trainer_config().validate()
        except ValueError as exc:
            raise DataError(str(exc)) from None


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
_PATH_FIELDS = ("train_path", "dev_path", "test_path", "init_checkpoint",
                "report_path", "checkpoint_path")


def load_config(
    path: "str | Path", overrides: Optional[dict] = None
) -> RunConfig:
    """Load a run config; CLI overrides beat file values beat defaults.

    Relative paths in the file resolve against the file's directory;
    override paths resolve against the current directory.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: config must be a JSON object")
    unknown = set(raw) - _CONFIG_FIELDS
    if unknown:
        raise DataError(f"{path}: unknown config keys {sorted(unknown)}")
    base = path.parent
    for key in _PATH_FIELDS:
        if raw.get(key):
            raw[key] = str((base / raw[key]).resolve())
    if overrides:
        unknown = set(overrides) - _CONFIG_FIELDS
        if unknown:
            raise DataError(f"unknown override keys {sorted(unknown)}")
        for key, value in overrides.items():
            if value is None:
                continue
            raw[key] = str(Path(value).resolve()) if key in _PATH_FIELDS else value
    if "labels" in raw:
        raw["labels"] = tuple(raw["labels"])
    if "emission_offsets" in raw:
        raw["emission_offsets"] = tuple(raw["emission_offsets"])
    cfg = RunConfig(**raw)
    cfg.validate()
    return cfg


# -- reports -------------------------------------------------------------------


def write_report(path: "str | Path", report: dict) -> None:
    Path(path).write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_report(path: "str | Path") -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"report file not found: {path}")
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    version = report.get("schema_version")
    if version != REPORT_SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported report schema version {version!r}")
    return report


def report_convergence(report: dict) -> ConvergenceReport:
    """Extract the convergence estimates from a parsed report file."""
    try:
        return ConvergenceReport.from_dict(report["convergence"])
    except KeyError as exc:
        raise DataError(f"report is missing convergence field {exc}") from None


def compare_report_files(paths: Sequence["str | Path"]) -> dict:
    """Run the cross-run comparison over saved report files."""
    reports = [report_convergence(read_report(p)) for p in paths]
    return compare_runs(reports).to_dict()


# -- orchestration ---------------------------------------------------------------


def run_train(config: RunConfig) -> dict:
    """Train per config, select on dev, evaluate on test, write artifacts.

    Returns the report dict that was also written to config.report_path; the
    selected checkpoint goes to config.checkpoint_path.
    """
    config.validate()
    model = config.model()
    alphabet = model.alphabet
    train_data = read_dataset(config.train_path, alphabet)
    dev_data = read_dataset(config.dev_path, alphabet)
    test_data = read_dataset(config.test_path, alphabet) if config.test_path else None
    oracle = FeedbackOracle(config.loss)
    w0 = read_checkpoint(config.init_checkpoint) if config.init_checkpoint else None

    trajectory = train(config.trainer_config(), model, train_data, dev_data, oracle, w0=w0)
    best_t, best_w = select_best(trajectory)
    best_dev = min(trajectory.dev_losses)
    test_loss = (
        evaluate(model, best_w, test_data, oracle.loss) if test_data else None
    )
    convergence = convergence_report(
        trajectory, n_pairs=config.lipschitz_pairs, seed=config.seed
    )

    write_checkpoint(config.checkpoint_path, best_w, fmt=config.checkpoint_format)
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": config.to_dict(),
        "convergence": convergence.to_dict(),
        "dev_curve": [[t, loss] for t, loss in trajectory.dev_curve()],
        "selected": {
            "t": best_t,
            "dev_loss": best_dev,
            "checkpoint": str(config.checkpoint_path),
        },
        "summary": {
            "objective": config.objective,
            "iterations_to_best": best_t,
            "best_dev_loss": best_dev,
            "test_loss": test_loss,
            "gamma": config.gamma,
            "l2_lambda": config.l2_lambda,
            "clip_k": config.clip_k,
            "seed": config.seed,
        },
        "feature_norm_bound": trajectory.feature_norm_bound,
    }
    write_report(config.report_path, report)
    return report
