"""Federated rounds over the toy task, with cost accounting and reports.

Every round runs: sensitivity bids, (re)negotiation when due, local
training, swap and selective encryption, uplink, aggregation, SVD slicing
and cipher truncation, downlink, reparameterisation.  Messages cross the
client/server boundary in their wire form.  Clients are processed in
ascending id order, so runs are bit-reproducible for a fixed config.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import linalg
from ..client import (
    AdapterPair,
    apply_swap,
    build_bid,
    encrypt_update,
    init_adapter,
    local_train,
    make_swap_plan,
    reparameterize,
    toy_loss,
    undo_swap,
)
from ..crypto.he import DEFAULT_BACKEND, chunk_width
from ..crypto.ope import OpeKey
from ..errors import SheLoraError
from ..messages import Downlink, PlainSlice, decode_downlink, decode_update, encode_downlink, encode_update
from ..metrics import kde_mutual_info
from ..sensitivity import budget_count, channel_importance
from ..server import (
    NegotiationResult,
    aggregate_cipher,
    aggregate_plain,
    coverage_risk,
    lift_cipher,
    negotiate,
    objective_score,
    svd_and_slice,
    truncate_cipher,
)
from .config import ExperimentConfig
from .data import make_toy_task, partition_noniid

logger = logging.getLogger(__name__)

REPORT_FILE = "reports.jsonl"
SUMMARY_FILE = "summary.csv"
TIMINGS_FILE = "timings.jsonl"
SUMMARY_FIELDS = (
    "round",
    "strategy",
    "status",
    "loss",
    "cipher_bytes_total",
    "downlink_cipher_bytes_total",
    "coverage",
    "risk",
    "negotiation_score",
    "mi",
)


@dataclass
class RoundReport:
    round: int
    strategy: str
    status: str = "ok"
    loss: float | None = None
    cipher_bytes: list = field(default_factory=list)
    cipher_bytes_total: int = 0
    downlink_cipher_bytes_total: int = 0
    blocks: list = field(default_factory=list)
    k: list = field(default_factory=list)
    coverage: float | None = None
    risk: float | None = None
    negotiation_score: float | None = None
    renegotiated: bool = False
    mi: float | None = None
    error: str | None = None
    # kept out of the report file so same-seed reports stay byte-identical
    wall_ms: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d.pop("wall_ms")
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


class _Timer:
    def __init__(self):
        self.ms = {}

    @contextmanager
    def __call__(self, phase):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.ms[phase] = self.ms.get(phase, 0.0) + 1e3 * (time.perf_counter() - t0)


def _seeds(seed, count):
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(count)]


def _column_mean(mats, align):
    """Column-aware mean of matrices of differing widths, ``left`` or ``right`` aligned."""
    if align == "right":
        flipped = aggregate_plain([m[:, ::-1] for m in mats])
        return flipped.matrix[:, ::-1]
    return aggregate_plain(mats).matrix


class Experiment:
    """State of one federated run; :meth:`run` drives all rounds."""

    def __init__(self, config, backend=None):
        if not isinstance(config, ExperimentConfig):
            raise TypeError("config must be an ExperimentConfig")
        self.config = config
        self.backend = backend or DEFAULT_BACKEND
        cfg = config
        s_data, s_part, s_init, s_he, s_ope, self._s_neg = _seeds(cfg.seed, 6)
        self.profiles = cfg.client_profiles()
        total = cfg.samples_per_client * cfg.n_clients
        self.task = make_toy_task(cfg.m, cfg.n, total, cfg.test_samples, cfg.n_clusters, cfg.teacher_rank, s_data)
        self.parts = partition_noniid(total, cfg.n_clients, cfg.dirichlet_rho, s_part, clusters=self.task.clusters)
        rng = np.random.default_rng(s_init)
        self.adapters = [init_adapter(cfg.m, cfg.n, p.rank, rng) for p in self.profiles]
        self.params = cfg.he_params
        self.pk, self.sk = self.backend.keygen(self.params, seed=s_he)
        self.ope_key = OpeKey(s_ope)
        r_max = max(p.rank for p in self.profiles)
        self.chunk = cfg.chunk if cfg.chunk is not None else chunk_width(self.params.slots, r_max)
        self.negotiation = None
        self.plan = None
        self.bids = None
        self.reports = []

    # -- helpers ---------------------------------------------------------

    def client_data(self, cid):
        idx = self.parts[cid]
        return self.task.x[idx], self.task.y[idx]

    def budgets(self):
        if self.config.strategy == "full_encrypt_oracle":
            return [self.config.n] * self.config.n_clients
        cap = len(self.plan.encrypted_columns)
        return [min(budget_count(self.config.n, p.gamma), cap) for p in self.profiles]

    def global_loss(self):
        t = self.task
        return float(np.mean([toy_loss(t.w0, ad, t.x_test, t.y_test) for ad in self.adapters]))

    def make_bids(self):
        cfg = self.config
        bids = []
        for cid, (ad, prof) in enumerate(zip(self.adapters, self.profiles)):
            x, _ = self.client_data(cid)
            scores = channel_importance(ad.a, x[: cfg.calibration_size])
            bids.append(build_bid(scores, prof, self.ope_key, cid))
        return bids

    def renegotiate(self, rnd):
        cfg = self.config
        self.bids = self.make_bids()
        if cfg.strategy == "full_encrypt_oracle":
            res = tuple(range(cfg.n))
            self.negotiation = NegotiationResult(res=res, coefficients=None, score=objective_score(res, self.bids))
        else:
            self.negotiation = negotiate(self.bids, n_opt=cfg.n_opt, seed=self._s_neg + rnd)
        self.plan = make_swap_plan(cfg.n, self.negotiation.res)

    # -- round -----------------------------------------------------------

    def run_round(self, rnd):
        cfg = self.config
        timer = _Timer()
        report = RoundReport(round=rnd, strategy=cfg.strategy)
        due = self.negotiation is None or rnd % cfg.negotiation_period == 0
        with timer("negotiation"):
            if due:
                self.renegotiate(rnd)
                report.renegotiated = True
        ks = self.budgets()
        report.k = ks

        with timer("local_training"):
            trained = []
            for cid, ad in enumerate(self.adapters):
                x, y = self.client_data(cid)
                trained.append(local_train(ad, self.task.w0, x, y, cfg.local_steps, cfg.lr))
        swapped = [apply_swap(ad, self.plan) for ad in trained]

        if cfg.strategy == "plain_fedavg_oracle":
            with timer("aggregation"):
                self.adapters = self._oracle_round(swapped, ks)
            report.cipher_bytes = [0] * cfg.n_clients
            report.blocks = [0] * cfg.n_clients
        else:
            self.adapters = self._secure_round(rnd, swapped, ks, timer, report)

        cov, risk = coverage_risk(self.plan.encrypted_columns, self.bids)
        report.coverage, report.risk = cov, risk
        report.negotiation_score = cov - risk
        report.loss = self.global_loss()
        if cfg.mi_every and rnd % cfg.mi_every == 0:
            with timer("mi"):
                a = swapped[0].a
                exposed = a.copy()
                exposed[:, a.shape[1] - ks[0] :] = 0.0
                report.mi = kde_mutual_info(a, exposed, seed=cfg.seed).value
        report.wall_ms = {k: round(v, 3) for k, v in timer.ms.items()}
        return report

    def _secure_round(self, rnd, swapped, ks, timer, report):
        params, backend = self.params, self.backend
        with timer("encryption"):
            wires = []
            for cid, (ad, k) in enumerate(zip(swapped, ks)):
                upd = encrypt_update(ad, k, self.pk, self.chunk, cid, rnd, backend)
                wires.append(encode_update(upd, params))
        with timer("aggregation"):
            updates = [decode_update(w)[0] for w in wires]
            report.cipher_bytes = [u.cipher_bytes for u in updates]
            report.cipher_bytes_total = int(sum(report.cipher_bytes))
            report.blocks = [len(u.cipher_blocks) for u in updates]
            plain = aggregate_plain([u.b_plain @ u.a_plain for u in updates])
            lifted = [lift_cipher(u.b_plain, u.cipher_blocks, backend) for u in updates]
            cagg = aggregate_cipher(lifted, self.chunk, backend)
            ranks = [u.rank for u in updates]
            if plain.width > 0:
                slices = svd_and_slice(plain, ranks)
            else:
                m = self.config.m
                slices = [PlainSlice(np.zeros((m, 0)), np.zeros(0), np.zeros((0, 0)))] * len(ranks)
            down = []
            for cid, (sl, k) in enumerate(zip(slices, ks)):
                blocks = truncate_cipher(cagg, k, backend)
                down.append(encode_downlink(Downlink(sl, blocks, k, cid, rnd), params))
        with timer("reparameterization"):
            out = []
            total = 0
            for cid, wire in enumerate(down):
                msg = decode_downlink(wire)[0]
                total += msg.cipher_blocks.byte_size
                out.append(reparameterize(msg.plain, msg.cipher_blocks, self.sk, self.plan, ranks[cid], backend))
            report.downlink_cipher_bytes_total = int(total)
        return out

    def _oracle_round(self, swapped, ks):
        """Column-aware averages computed in the clear, then rank-truncated."""
        n = self.config.n
        deltas = [ad.delta for ad in swapped]
        plain = _column_mean([d[:, : n - k] for d, k in zip(deltas, ks)], "left")
        cipher = _column_mean([d[:, n - k :] for d, k in zip(deltas, ks)], "right")
        out = []
        for ad, k in zip(swapped, ks):
            target = linalg.zero_pad(plain, plain.shape[0], n, "left")
            if k > 0:
                target = target + linalg.zero_pad(cipher[:, cipher.shape[1] - k :], cipher.shape[0], n, "right")
            b, a = linalg.low_rank_factor(target, ad.rank)
            out.append(undo_swap(AdapterPair(b, a), self.plan))
        return out

    def run(self, rounds=None):
        rounds = self.config.rounds if rounds is None else rounds
        start = len(self.reports)
        for rnd in range(start, start + rounds):
            try:
                report = self.run_round(rnd)
            except SheLoraError as exc:
                logger.error("round %d aborted: %s", rnd, exc)
                report = RoundReport(round=rnd, strategy=self.config.strategy, status="error", error=f"{type(exc).__name__}: {exc}")
                self.reports.append(report)
                break
            logger.info("round %d loss=%.6g cipher_bytes=%d", rnd, report.loss, report.cipher_bytes_total)
            self.reports.append(report)
        return self.reports


def run_experiment(config, out_dir=None, backend=None):
    """Run every round of ``config``; optionally write the report files to ``out_dir``."""
    exp = Experiment(config, backend)
    reports = exp.run()
    if out_dir is not None:
        write_reports(reports, out_dir, config)
    return reports


def write_reports(reports, out_dir, config=None):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, REPORT_FILE), "w", encoding="utf-8", newline="\n") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")
    with open(os.path.join(out_dir, SUMMARY_FILE), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in reports:
            d = r.to_dict()
            w.writerow(["" if d[f] is None else repr(d[f]) if isinstance(d[f], float) else d[f] for f in SUMMARY_FIELDS])
    with open(os.path.join(out_dir, TIMINGS_FILE), "w", encoding="utf-8", newline="\n") as fh:
        for r in reports:
            fh.write(json.dumps({"round": r.round, "wall_ms": r.wall_ms}, sort_keys=True) + "\n")
    if config is not None:
        with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(config.to_json())
