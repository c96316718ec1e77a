"""Training loop for the hybrid models: update, then project back onto the unitaries."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .compiler import CompiledCircuit, qsd_compile
from .errors import ConvergenceError, NotUnitaryError, NumericError, SingularMatrixError
from .hybrid import (
    AdamState,
    FdConfig,
    HybridModel,
    adam_step,
    backward,
    cross_entropy,
    forward,
    init_model,
    predict,
)
from .moons import Dataset, SplitSpec, batches, make_moons, split
from .unitarize import MuConfig, MuMethod

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "A"
    seed: int = 0
    lr: float = 0.01
    delta_theta: float = math.pi / 10
    batch_size: int = 100
    max_epochs: int = 50
    mu_method: str = "schur"
    skip_if_unitary: bool = False
    early_stop_accuracy: float = 1.0
    sizes: SplitSpec = field(default_factory=SplitSpec)
    n_wires: int = 4

    def __post_init__(self):
        if self.variant not in ("A", "B", "C"):
            raise ValueError(f"unknown model variant {self.variant!r}")
        if not self.lr >= 0:
            raise ValueError("lr must be non-negative")
        if not self.delta_theta > 0:
            raise ValueError("delta_theta must be positive")
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")
        MuMethod(self.mu_method)

    @property
    def mu(self) -> MuConfig:
        return MuConfig(MuMethod(self.mu_method), self.skip_if_unitary)

    @property
    def fd(self) -> FdConfig:
        return FdConfig(self.delta_theta)


@dataclass
class BatchRecord:
    epoch: int
    batch: int
    loss: float
    train_acc: float


@dataclass
class TrainReport:
    records: list = field(default_factory=list)
    best_epoch: int = 0
    best_batch: int = 0
    best_train_acc: float = 0.0
    test_acc: float | None = None
    valid_acc: float | None = None
    stop_reason: str = "max_epochs"

    @property
    def losses(self) -> list:
        return [r.loss for r in self.records]

    @property
    def accuracies(self) -> list:
        return [r.train_acc for r in self.records]

    def summary(self) -> dict:
        return {
            "batches": len(self.records),
            "best_epoch": self.best_epoch,
            "best_batch": self.best_batch,
            "best_train_acc": self.best_train_acc,
            "test_acc": self.test_acc,
            "valid_acc": self.valid_acc,
            "stop_reason": self.stop_reason,
        }


def param_count(n_wires: int) -> int:
    """Real parameters in a free 2**n x 2**n complex matrix: 2**(2n + 1)."""
    if n_wires < 1:
        raise ValueError("n_wires must be >= 1")
    return 2 ** (2 * n_wires + 1)


def evaluate(model: HybridModel, data: Dataset, circuits=None) -> float:
    if len(data) == 0:
        return float("nan")
    return float(np.mean(predict(model, data.points, circuits) == data.labels))


def default_data(config: TrainConfig):
    sizes = config.sizes
    pool = make_moons(sizes.total, sizes.noise_std, config.seed)
    return split(pool, sizes, config.seed)


def train(config: TrainConfig, data=None, callback=None):
    """Run the update-then-project loop. Returns (best model, report).

    ``data`` is (train, test, validation); by default it is generated from the
    config seed. The returned model is the parameter set that scored the best
    training-batch accuracy (earliest on ties), evaluated on that batch before
    its update. ``callback(record)`` is called after every batch.
    """
    train_set, test_set, valid_set = data if data is not None else default_data(config)
    mu, fd = config.mu, config.fd
    model = init_model(config.variant, np.random.default_rng([config.seed, 1]), config.n_wires, mu)
    opt = AdamState(lr=config.lr)
    report = TrainReport()
    best = model
    report.best_train_acc = -1.0

    try:
        for epoch in range(config.max_epochs):
            epoch_batches = batches(train_set, config.batch_size, [config.seed, 2, epoch])
            for bi, batch in enumerate(epoch_batches):
                logits, cache = forward(model, batch.points)
                loss = float(np.mean(cross_entropy(logits, batch.labels)))
                if not math.isfinite(loss):
                    raise NumericError(f"non-finite loss at epoch {epoch} batch {bi}")
                acc = float(np.mean(np.argmax(logits, axis=1) == batch.labels))
                rec = BatchRecord(epoch, bi, loss, acc)
                report.records.append(rec)
                if callback is not None:
                    callback(rec)
                if acc > report.best_train_acc:
                    best = model
                    report.best_train_acc, report.best_epoch, report.best_batch = acc, epoch, bi
                if acc >= config.early_stop_accuracy:
                    report.stop_reason = "early_stop"
                    break
                grads = backward(model, cache, batch.labels, fd)
                params, opt = adam_step(model.params(), grads, opt)
                model = model.with_params(params)
                model = replace(model, quantum=model.quantum.projected(mu))
            else:
                log.info("epoch %d: last loss %.4f, best batch acc %.4f", epoch, loss, report.best_train_acc)
                continue
            break
    except (NumericError, ConvergenceError, SingularMatrixError, FloatingPointError) as exc:
        log.warning("training aborted: %s", exc)
        report.stop_reason = f"numeric_error: {exc}"

    report.test_acc = evaluate(best, test_set)
    report.valid_acc = evaluate(best, valid_set)
    return best, report


def compile_model(model: HybridModel) -> list:
    """QSD-compile every stored quantum matrix (one for A/C, one per wire for B)."""
    circuits = []
    for m in model.quantum.matrices():
        res = float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))
        if res > 1e-8:
            raise NotUnitaryError(f"stored quantum matrix is not unitary (residual {res:.3e})", residual=res)
        circuits.append(qsd_compile(m))
    return circuits


def write_metrics(path, report: TrainReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "batch", "loss", "train_acc"])
        for r in report.records:
            w.writerow([r.epoch, r.batch, format(r.loss, ".17g"), format(r.train_acc, ".17g")])


def config_dict(config: TrainConfig) -> dict:
    d = asdict(config)
    d["sizes"] = asdict(config.sizes)
    return d
