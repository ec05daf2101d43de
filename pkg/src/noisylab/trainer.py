"""End-to-end training: warmup, per-batch partition/relabel/loss/update,
scheduling, variant handling, and run artifacts.

All variants share the same warmup (plain cross entropy on raw inputs), so
runs with equal seeds produce identical warmup rows no matter the variant.
After warmup the full method partitions every batch into Clean / ID-High /
ID-Rest / OOD, trains Clean against smoothed labels, ID-High against
sharpened two-view pseudo-labels, and applies the consistency term; the
ablation variants disable individual stages.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import losses, margins, relabel, selection
from .augment import Augmenter, AugmentPolicy, PredictionPair
from .backend import kernels as K
from .config import RunConfig, build_manifest
from .data import LabeledDataset, SampleStatus
from .errors import NumericalError
from .ioutils import write_jsonl, write_json, write_metrics_csv
from .losses import LossWeights
from .margins import MarginConfig, Partition
from .model import (
    ModelParams,
    accuracy,
    backprop,
    forward_batch,
    init_params,
    save_checkpoint,
)
from .optim import apply_gradients, make_optimizer
from .relabel import RelabelConfig
from .selection import SelectionThresholds

LAST_K = 10
SET_CODES = {"clean": 0, "id-high": 1, "id-rest": 2, "ood": 3}


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    n_clean: int
    n_high: int
    n_rest: int
    n_ood: int
    l_c: float
    l_n: float
    l_cons: float
    l_total: float
    train_acc: float
    test_acc: float
    clean_precision: float | None
    clean_recall: float | None
    ood_precision: float | None
    ood_recall: float | None

    def to_csv_row(self) -> dict:
        return {
            "epoch": self.epoch,
            "lr": self.lr,
            "|Clean|": self.n_clean,
            "|ID-High|": self.n_high,
            "|ID-Rest|": self.n_rest,
            "|OOD|": self.n_ood,
            "L_c": self.l_c,
            "L_n": self.l_n,
            "L_cons": self.l_cons,
            "L_total": self.l_total,
            "train_acc": self.train_acc,
            "test_acc": self.test_acc,
            "clean_precision": self.clean_precision,
            "clean_recall": self.clean_recall,
            "ood_precision": self.ood_precision,
            "ood_recall": self.ood_recall,
        }


@dataclass
class TrainResult:
    history: list[EpochRecord]
    params: ModelParams
    optimizer: object
    score: float  # mean test accuracy over the last LAST_K epochs
    wall_clock: float
    stats_records: list[dict] = field(default_factory=list)


def learning_rate(cfg: RunConfig, epoch: int) -> float:
    """Scheduled rate for a 0-based epoch index."""
    if cfg.lr_schedule == "constant":
        return cfg.eta
    if cfg.lr_schedule == "cosine":
        return cfg.eta * 0.5 * (1.0 + math.cos(math.pi * epoch / cfg.t_max))
    start = cfg.effective_decay_start
    if epoch < start or cfg.t_max - 1 <= start:
        return cfg.eta if epoch < start else cfg.lr_floor
    frac = (epoch - start) / (cfg.t_max - 1 - start)
    return cfg.eta + min(frac, 1.0) * (cfg.lr_floor - cfg.eta)


def partition_batch(
    pair: PredictionPair,
    labels: np.ndarray,
    thresholds: SelectionThresholds,
    margin_cfg: MarginConfig,
    variant: str,
    stat_view: str = "weak",
    epoch: int = 0,
) -> Partition:
    """Variant-aware four-way split of one batch (positions, not ids)."""
    empty = np.empty(0, dtype=np.int64)
    n = pair.probs_weak.shape[0]
    if variant == "standard":
        return Partition(
            clean=np.arange(n), id_high=empty, id_rest=empty, ood=empty, epoch=epoch
        )
    stats = selection.compute_selection_stats(
        pair.probs_weak, pair.probs_strong, labels, stat_view
    )
    rule = "small-loss" if variant in ("no-rss", "no-both") else "union"
    clean, noisy = selection.partition_clean(stats, thresholds, rule)
    if variant in ("no-mgm", "no-both"):
        return Partition(
            clean=clean, id_high=empty, id_rest=noisy, ood=empty, epoch=epoch
        )
    m_v, m_p = margins.compute_margin_stats(pair, margin_cfg, labels)
    if variant == "no-mv":
        ood, id_ids = empty, noisy
    else:
        is_ood = m_v[noisy].astype(bool)
        ood, id_ids = noisy[is_ood], noisy[~is_ood]
    if variant == "no-mp":
        high, rest = id_ids, empty
    else:
        high_mask = m_p[id_ids] > margin_cfg.tau_p
        high, rest = id_ids[high_mask], id_ids[~high_mask]
    return Partition(clean=clean, id_high=high, id_rest=rest, ood=ood, epoch=epoch)


def selection_quality(partition: Partition, status: np.ndarray) -> dict:
    """Precision/recall/F1 of each partition set against hidden ground truth.

    Undefined ratios (empty denominators) come back as None, never 0.
    """
    status = np.asarray(status)
    truth = {
        "clean": status == int(SampleStatus.CLEAN),
        "id_high": status == int(SampleStatus.CLOSED),
        "id_rest": status == int(SampleStatus.CLOSED),
        "ood": status == int(SampleStatus.OPEN),
    }
    out = {}
    for name in ("clean", "id_high", "id_rest", "ood"):
        selected = getattr(partition, name)
        mask = truth[name]
        hits = int(np.sum(mask[selected])) if len(selected) else 0
        n_sel = len(selected)
        n_true = int(np.sum(mask))
        precision = hits / n_sel if n_sel else None
        recall = hits / n_true if n_true else None
        if precision is None or recall is None or (precision + recall) == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        out[name] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def _epoch_accuracy(
    params: ModelParams, train: LabeledDataset, test: LabeledDataset
) -> tuple[float, float]:
    # un-augmented inputs; train accuracy scored against hidden true classes
    # of in-distribution samples only (OOD has no right answer)
    in_dist = train.true_class < train.num_classes
    train_acc = accuracy(
        params, train.features[in_dist], train.true_class[in_dist]
    )
    test_acc = accuracy(params, test.features, test.labels)
    return train_acc, test_acc


class _EpochTally:
    """Accumulates per-batch results into one epoch record."""

    def __init__(self, n_samples: int):
        self.assignment = np.full(n_samples, -1, dtype=np.int64)
        self.l_c: list[float] = []
        self.l_n: list[float] = []
        self.l_cons: list[float] = []

    def add_batch(self, ids: np.ndarray, part: Partition, bd: losses.LossBreakdown):
        for name, code in SET_CODES.items():
            attr = name.replace("-", "_")
            self.assignment[ids[getattr(part, attr)]] = code
        self.l_c.append(bd.l_c)
        self.l_n.append(bd.l_n)
        self.l_cons.append(bd.l_cons)

    def epoch_partition(self, epoch: int) -> Partition:
        ids = np.arange(self.assignment.shape[0])
        return Partition(
            clean=ids[self.assignment == 0],
            id_high=ids[self.assignment == 1],
            id_rest=ids[self.assignment == 2],
            ood=ids[self.assignment == 3],
            epoch=epoch,
        )

    def totals(self, weights: LossWeights) -> tuple[float, float, float, float]:
        l_c = math.fsum(self.l_c)
        l_n = math.fsum(self.l_n)
        l_cons = math.fsum(self.l_cons)
        total = l_c + weights.lambda1 * l_n + weights.lambda2 * l_cons
        return l_c, l_n, l_cons, total


def _warmup_batch(params, optimizer, x, labels, num_classes, lr, context):
    cache = forward_batch(params, x)
    targets = selection.one_hot(labels, num_classes)
    rows = K.ce_rows(targets, cache.probs)
    loss = math.fsum(rows)
    if not math.isfinite(loss):
        raise NumericalError(f"non-finite warmup loss at {context}")
    grads = backprop(params, cache, cache.probs - targets)
    apply_gradients(optimizer, params, grads, lr, context)
    return loss


def _method_batch(
    params,
    optimizer,
    augmenter: Augmenter,
    train: LabeledDataset,
    ids: np.ndarray,
    epoch: int,
    lr: float,
    cfg: RunConfig,
    thresholds: SelectionThresholds,
    margin_cfg: MarginConfig,
    relabel_cfg: RelabelConfig,
    weights: LossWeights,
) -> tuple[Partition, losses.LossBreakdown, dict | None]:
    x = train.features[ids]
    labels = train.labels[ids]
    xw, xs = augmenter.two_views(x, ids, epoch)
    cache_w = forward_batch(params, xw)
    cache_s = forward_batch(params, xs)
    pair = PredictionPair(
        scores_weak=cache_w.logits,
        scores_strong=cache_s.logits,
        probs_weak=cache_w.probs,
        probs_strong=cache_s.probs,
    )
    part = partition_batch(
        pair, labels, thresholds, margin_cfg, cfg.variant, cfg.stat_view, epoch
    )

    n, c = pair.probs_weak.shape
    gw = np.zeros((n, c))
    gs = np.zeros((n, c))

    l_c = 0.0
    if len(part.clean):
        t_clean = relabel.smooth_labels(labels[part.clean], c, relabel_cfg.epsilon)
        pw_clean = pair.probs_weak[part.clean]
        l_c = losses.loss_clean(t_clean, pw_clean, weights.clean_mode)
        gw[part.clean] += losses.loss_clean_grad(t_clean, pw_clean, weights.clean_mode)

    l_n = 0.0
    pseudo = None
    use_ln = cfg.variant != "no-ssl"
    if len(part.id_high) and use_ln:
        pseudo = relabel.pseudo_label(
            pair.probs_weak[part.id_high], pair.probs_strong[part.id_high], relabel_cfg
        ).probs
        l_n = losses.loss_noisy(
            pseudo,
            pair.probs_weak[part.id_high],
            pair.probs_strong[part.id_high],
            weights.entropy_weight,
        )
        g1, g2 = losses.loss_noisy_grad(
            pseudo,
            pair.probs_weak[part.id_high],
            pair.probs_strong[part.id_high],
            weights.entropy_weight,
        )
        gw[part.id_high] += weights.lambda1 * g1
        gs[part.id_high] += weights.lambda1 * g2

    if cfg.cons_scope == "retained":
        scope = np.concatenate([part.clean, part.id_high])
    else:
        scope = np.arange(n)
    l_cons = 0.0
    if len(scope):
        l_cons = losses.loss_consistency(
            pair.probs_weak[scope], pair.probs_strong[scope]
        )
        g1, g2 = losses.loss_consistency_grad(
            pair.probs_weak[scope], pair.probs_strong[scope]
        )
        gw[scope] += weights.lambda2 * g1
        gs[scope] += weights.lambda2 * g2

    bd = losses.loss_total(
        l_c, l_n, l_cons, weights,
        n_clean=len(part.clean), n_high=len(part.id_high), n_cons=len(scope),
    )

    grads_w = backprop(params, cache_w, gw)
    grads_s = backprop(params, cache_s, gs)
    grads = [
        (dw1 + dw2, db1 + db2)
        for (dw1, db1), (dw2, db2) in zip(grads_w, grads_s)
    ]
    apply_gradients(optimizer, params, grads, lr, f"epoch {epoch}")

    dump = None
    if cfg.dump_stats:
        stats = selection.compute_selection_stats(
            pair.probs_weak, pair.probs_strong, labels, cfg.stat_view
        )
        names = {v: k for k, v in SET_CODES.items()}
        assign = np.full(n, -1, dtype=np.int64)
        for name, code in SET_CODES.items():
            assign[getattr(part, name.replace("-", "_"))] = code
        dump = {
            "ids": ids,
            "d": stats.d,
            "p": stats.p_clean,
            "s": stats.s,
            "set": [names[int(a)] for a in assign],
            "pseudo": pseudo,
            "high": part.id_high,
        }
    return part, bd, dump


def run_training(
    train: LabeledDataset,
    test: LabeledDataset,
    cfg: RunConfig,
) -> TrainResult:
    """Full training loop; returns history, final params, and the score."""
    t_start = time.perf_counter()
    n = len(train)
    c = train.num_classes
    layer_sizes = (train.dim, *cfg.hidden, c)
    params = init_params(layer_sizes, cfg.seed)
    optimizer = make_optimizer(cfg.optimizer, params, cfg.momentum)
    policy = AugmentPolicy(
        weak_sigma=cfg.weak_sigma,
        strong_sigma=cfg.strong_sigma,
        dropout_fraction=cfg.dropout_fraction,
        seed=cfg.seed,
    )
    augmenter = Augmenter(policy, n, train.dim)
    thresholds = SelectionThresholds(tau_s=cfg.tau_s, tau_h=cfg.tau_h)
    margin_cfg = MarginConfig(
        tau_p=cfg.tau_p, margin_scale=cfg.margin_scale, reference=cfg.margin_reference
    )
    relabel_cfg = RelabelConfig(
        epsilon=cfg.epsilon, tau=cfg.sharpen_tau,
        sharpen_after_mean=cfg.sharpen_after_mean,
    )
    weights = LossWeights(
        lambda1=cfg.lambda1, lambda2=cfg.lambda2,
        entropy_weight=cfg.entropy_weight, clean_mode=cfg.clean_mode,
    )
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(7,)))

    history: list[EpochRecord] = []
    stats_records: list[dict] = []
    for epoch in range(cfg.t_max):
        lr = learning_rate(cfg, epoch)
        perm = shuffle_rng.permutation(n)
        plain = cfg.variant == "standard" or epoch < cfg.warmup_epochs
        tally = _EpochTally(n)
        if plain:
            batch_losses = []
            for lo in range(0, n, cfg.batch_size):
                ids = perm[lo : lo + cfg.batch_size]
                loss = _warmup_batch(
                    params, optimizer, train.features[ids], train.labels[ids],
                    c, lr, f"epoch {epoch}",
                )
                batch_losses.append(loss)
            l_c = math.fsum(batch_losses)
            part = Partition(
                clean=np.arange(n),
                id_high=np.empty(0, dtype=np.int64),
                id_rest=np.empty(0, dtype=np.int64),
                ood=np.empty(0, dtype=np.int64),
                epoch=epoch,
            )
            l_n = l_cons = 0.0
            l_total = l_c + weights.lambda1 * l_n + weights.lambda2 * l_cons
        else:
            for lo in range(0, n, cfg.batch_size):
                ids = perm[lo : lo + cfg.batch_size]
                bpart, bd, dump = _method_batch(
                    params, optimizer, augmenter, train, ids, epoch, lr,
                    cfg, thresholds, margin_cfg, relabel_cfg, weights,
                )
                tally.add_batch(ids, bpart, bd)
                if dump is not None:
                    stats_records.extend(_dump_records(epoch, dump))
            part = tally.epoch_partition(epoch)
            l_c, l_n, l_cons, l_total = tally.totals(weights)

        quality = selection_quality(part, train.status)
        train_acc, test_acc = _epoch_accuracy(params, train, test)
        history.append(
            EpochRecord(
                epoch=epoch + 1,
                lr=lr,
                n_clean=len(part.clean),
                n_high=len(part.id_high),
                n_rest=len(part.id_rest),
                n_ood=len(part.ood),
                l_c=l_c,
                l_n=l_n,
                l_cons=l_cons,
                l_total=l_total,
                train_acc=train_acc,
                test_acc=test_acc,
                clean_precision=quality["clean"]["precision"],
                clean_recall=quality["clean"]["recall"],
                ood_precision=quality["ood"]["precision"],
                ood_recall=quality["ood"]["recall"],
            )
        )

    last = history[-min(LAST_K, len(history)):]
    score = float(np.mean([rec.test_acc for rec in last]))
    return TrainResult(
        history=history,
        params=params,
        optimizer=optimizer,
        score=score,
        wall_clock=time.perf_counter() - t_start,
        stats_records=stats_records,
    )


def _dump_records(epoch: int, dump: dict) -> list[dict]:
    high_set = set(int(i) for i in dump["high"])
    pseudo = dump["pseudo"]
    rows = []
    for pos, sid in enumerate(dump["ids"]):
        rec = {
            "epoch": epoch + 1,
            "id": int(sid),
            "d": round(float(dump["d"][pos]), 6),
            "P": round(float(dump["p"][pos]), 6),
            "s": round(float(dump["s"][pos]), 6),
            "set": dump["set"][pos],
        }
        if pos in high_set and pseudo is not None:
            row = np.flatnonzero(dump["high"] == pos)
            if len(row):
                rec["pseudo"] = [round(float(v), 6) for v in pseudo[row[0]]]
        rows.append(rec)
    return rows


def execute_run(
    cfg: RunConfig,
    train: LabeledDataset,
    test: LabeledDataset,
    out_dir: str,
    config_path: str | None = None,
) -> TrainResult:
    """Train and write the full artifact set to out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    result = run_training(train, test, cfg)
    write_metrics_csv(
        os.path.join(out_dir, "metrics.csv"),
        [rec.to_csv_row() for rec in result.history],
    )
    write_json(os.path.join(out_dir, "manifest.json"), build_manifest(cfg, out_dir, config_path))
    write_json(
        os.path.join(out_dir, "summary.json"),
        {
            "config": cfg.to_dict(),
            "score": result.score,
            "last_k": min(LAST_K, len(result.history)),
            "final_test_acc": result.history[-1].test_acc,
            "wall_clock_sec": result.wall_clock,
        },
    )
    save_checkpoint(
        os.path.join(out_dir, "checkpoint.npz"),
        result.params,
        result.optimizer,
        meta={"seed": cfg.seed, "variant": cfg.variant, "epochs": cfg.t_max},
    )
    if cfg.dump_stats:
        write_jsonl(os.path.join(out_dir, "stats.jsonl"), result.stats_records)
    return result
