"""Run-directory persistence.

A run directory holds everything one experiment produces:

    config.json          market/experiment configuration + manifest
    dataset.csv          the cleaned panel in the ingestion schema
    ground_truth.json    planted structure (simulated runs only)
    clusters.json        most recent cluster assignment (spec record schema)
    clusters/<method>.json   one record per computed method
    models/<advertiser>/<config-tag>.h<horizon>.json
    reports/backtest.csv, summary.csv, robustness.csv

The manifest pins a config hash and a dataset fingerprint so a reopened
run can detect drift between its artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from datetime import datetime, timezone

import numpy as np

from .cluster import ClusterAssignment
from .models import TrainedModel
from .panel import PanelDataset, clean_panel, ingest_csv, write_csv
from .simgen import GroundTruth


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RunStore:
    def __init__(self, root: str):
        self.root = root
        self._panel: PanelDataset | None = None

    # -- paths ------------------------------------------------------------
    def path(self, *parts: str) -> str:
        return os.path.join(self.root, *parts)

    @property
    def config_path(self) -> str:
        return self.path("config.json")

    @property
    def dataset_path(self) -> str:
        return self.path("dataset.csv")

    # -- lifecycle ----------------------------------------------------------
    @classmethod
    def create(cls, root: str, config: dict, panel: PanelDataset,
               truth: GroundTruth | None = None) -> "RunStore":
        os.makedirs(root, exist_ok=True)
        store = cls(root)
        write_csv(panel, store.dataset_path)
        if truth is not None:
            with open(store.path("ground_truth.json"), "w", encoding="utf-8") as fh:
                fh.write(truth.to_json())
        body = dict(config)
        manifest = {
            "run_id": os.path.basename(os.path.abspath(root)),
            "created_at": datetime.now(timezone.utc).isoformat(),
            "config_hash": _sha256_text(json.dumps(body, sort_keys=True)),
            "dataset_fingerprint": _sha256_file(store.dataset_path),
        }
        with open(store.config_path, "w", encoding="utf-8") as fh:
            json.dump({"manifest": manifest, "config": body}, fh, indent=2)
        store._panel = panel
        return store

    @classmethod
    def open(cls, root: str) -> "RunStore":
        store = cls(root)
        if not os.path.exists(store.config_path):
            raise FileNotFoundError(f"{root} is not a run directory (no config.json)")
        payload = store.read_config()
        manifest = payload["manifest"]
        expected = _sha256_text(json.dumps(payload["config"], sort_keys=True))
        if manifest["config_hash"] != expected:
            raise ValueError("run manifest hash does not match stored config")
        return store

    def read_config(self) -> dict:
        with open(self.config_path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def update_config(self, **entries) -> None:
        payload = self.read_config()
        payload["config"].update(entries)
        payload["manifest"]["config_hash"] = _sha256_text(
            json.dumps(payload["config"], sort_keys=True))
        with open(self.config_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)

    # -- panel and truth ----------------------------------------------------
    def panel(self) -> PanelDataset:
        if self._panel is None:
            raw = ingest_csv(self.dataset_path)
            self._panel = clean_panel(raw, max_missing_frac=1.0)
        return self._panel

    def ground_truth(self) -> GroundTruth | None:
        path = self.path("ground_truth.json")
        if not os.path.exists(path):
            return None
        with open(path, "r", encoding="utf-8") as fh:
            return GroundTruth.from_json(fh.read())

    # -- clusters -------------------------------------------------------------
    def save_clusters(self, assignment: ClusterAssignment) -> None:
        record = {"method": assignment.method, "k": assignment.k,
                  "labels": assignment.labels,
                  "wcss_by_k": {str(k): v for k, v in (assignment.wcss_by_k or {}).items()}}
        os.makedirs(self.path("clusters"), exist_ok=True)
        for path in (self.path("clusters.json"),
                     self.path("clusters", f"{assignment.method}.json")):
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(record, fh, indent=2)

    def load_clusters(self) -> dict[str, ClusterAssignment]:
        out = {}
        folder = self.path("clusters")
        if not os.path.isdir(folder):
            return out
        for name in sorted(os.listdir(folder)):
            with open(os.path.join(folder, name), "r", encoding="utf-8") as fh:
                record = json.load(fh)
            out[record["method"]] = ClusterAssignment(
                method=record["method"], k=int(record["k"]),
                labels={a: int(c) for a, c in record["labels"].items()},
                wcss_by_k={int(k): float(v) for k, v in record.get("wcss_by_k", {}).items()}
                or None)
        return out

    # -- models -----------------------------------------------------------
    def model_path(self, advertiser_id: str, tag: str, horizon: int) -> str:
        return self.path("models", advertiser_id, f"{tag}.h{horizon}.json")

    def save_model(self, advertiser_id: str, tag: str, horizon: int,
                   model: TrainedModel) -> None:
        model.save(self.model_path(advertiser_id, tag, horizon))

    def load_model(self, advertiser_id: str, tag: str, horizon: int) -> TrainedModel:
        path = self.model_path(advertiser_id, tag, horizon)
        if not os.path.exists(path):
            raise FileNotFoundError(f"no trained model at {path}")
        return TrainedModel.load(path)

    def trained_models(self) -> dict[tuple[str, str, int], str]:
        """(advertiser, tag, horizon) -> checkpoint path for everything saved."""
        out = {}
        folder = self.path("models")
        if not os.path.isdir(folder):
            return out
        for advertiser in sorted(os.listdir(folder)):
            for name in sorted(os.listdir(os.path.join(folder, advertiser))):
                if not name.endswith(".json"):
                    continue
                stem = name[:-len(".json")]
                tag, _, h = stem.rpartition(".h")
                out[(advertiser, tag, int(h))] = os.path.join(folder, advertiser, name)
        return out

    # -- reports ------------------------------------------------------------
    def save_report_csv(self, name: str, rows: list[dict], columns: list[str]) -> None:
        os.makedirs(self.path("reports"), exist_ok=True)
        with open(self.path("reports", name), "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format_cell(row[c]) for c in columns])

    def read_report_csv(self, name: str) -> list[dict]:
        path = self.path("reports", name)
        if not os.path.exists(path):
            raise FileNotFoundError(f"report {name} not computed yet")
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)
