"""Seeded Monte-Carlo runs: RMSE against SNR and per-device scatter data.

Config files are flat ``key = value`` text, UTF-8, with ``#`` comments.
Angles are given in degrees. Keys and defaults are the fields of
:class:`ExperimentConfig`; list values are comma separated.

Seeds: trial ``t`` places its devices from ``SeedSequence([seed, t])`` and
draws powers and symbols from ``[seed, t, 1]``, so every SNR sees the same
devices and waveforms; the noise comes from ``[seed, snr_index, t]``.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coarray import CoarrayModel, PowerModel, measurement_tensor
from .design import NestedDesign, solve_rf_allocation
from .estimator import EstimationError, estimate_doas, matrix_baseline
from .geometry import ArrayConfig, SourceSet, random_sources
from .metrics import match, matched_errors
from .phase_space import PhaseSpaceConfig, choose_P
from .smoothing import spatial_smooth

ESTIMATORS = {"tensor": estimate_doas, "matrix": matrix_baseline}


@dataclass(frozen=True)
class ExperimentConfig:
    M_v: int = 25
    M_h: int = 30
    r: float = 2.0
    h: float = 0.5
    wavelength: float = 299_792_458.0 / 28e9
    P: int | None = None
    design: tuple[int, int, int, int] | None = None  # (N_vd, N_hd, N_vs, N_hs); None solves
    enforce_c4: bool = False
    fit_ports: bool = True
    coarray: str = "auto"  # auto | one_sided | two_sided
    K: int = 5
    sources: tuple[tuple[float, float], ...] | None = None  # explicit (theta, phi) in degrees
    min_separation_deg: float = 5.0
    theta_min_deg: float = 30.0
    theta_max_deg: float = 150.0
    power_mode: str = "equal"
    power_base: float = 1.0
    power_decades: float = 1.0
    snr_db: tuple[float, ...] = (-10.0, 0.0, 10.0, 20.0)
    M_t: int = 20
    N_snap: int = 1024
    N_is: int | None = None
    trials: int = 100
    seed: int = 0
    estimator: str = "tensor"  # tensor | matrix | both
    grid_step_deg: float = 0.1
    noise_mode: str = "port"
    steering: str = "auto"
    workers: int = 1

    def __post_init__(self):
        if self.estimator not in ("tensor", "matrix", "both"):
            raise ValueError(f"estimator must be tensor, matrix or both, got {self.estimator!r}")
        if self.coarray not in ("auto", "one_sided", "two_sided"):
            raise ValueError(f"coarray must be auto, one_sided or two_sided, got {self.coarray!r}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.sources is not None and len(self.sources) != self.K:
            raise ValueError(f"{len(self.sources)} explicit sources but K={self.K}")
        if not 0 < self.theta_min_deg < self.theta_max_deg < 180:
            raise ValueError("need 0 < theta_min_deg < theta_max_deg < 180")
        if self.trials < 1 or self.M_t < 1 or self.N_snap < 1:
            raise ValueError("trials, M_t and N_snap must be positive")
        if not self.snr_db or any(math.isnan(s) for s in self.snr_db):
            raise ValueError("snr_db needs at least one finite value")
        if self.grid_step_deg <= 0:
            raise ValueError("grid_step_deg must be positive")
        if self.noise_mode not in ("port", "antenna"):
            raise ValueError(f"noise_mode must be port or antenna, got {self.noise_mode!r}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        PowerModel(self.power_mode, self.power_base, self.power_decades)

    @property
    def estimators(self) -> tuple[str, ...]:
        return ("tensor", "matrix") if self.estimator == "both" else (self.estimator,)

    def array(self) -> ArrayConfig:
        return ArrayConfig(self.M_v, self.M_h, self.r, self.h, self.wavelength)

    def power(self) -> PowerModel:
        return PowerModel(self.power_mode, self.power_base, self.power_decades)

    def model(self) -> CoarrayModel:
        cfg = self.array()
        P = self.P if self.P is not None else choose_P(cfg)
        ps = PhaseSpaceConfig(P=P, M_v=cfg.M_v, M_h=cfg.M_h, r=cfg.r)
        if self.design is None:
            design = solve_rf_allocation(ps.M_vr, ps.M_hr, smoothing=True,
                                         enforce_c4=self.enforce_c4, fit_ports=self.fit_ports)
        else:
            design = NestedDesign(*self.design, M_vr=ps.M_vr, M_hr=ps.M_hr, smoothing=True)
            if self.enforce_c4 and design.N_vd % design.N_hd:
                raise ValueError("enforce_c4: N_vd must be a multiple of N_hd")
        one_sided = {"auto": None, "one_sided": True, "two_sided": False}[self.coarray]
        model = CoarrayModel(cfg, ps, design, one_sided)
        N = model.cmap.shape[0]
        if self.K > N - 1:
            raise ValueError(f"K={self.K} needs more than {N} vertical coarray lags")
        return model

    def smoothing_windows(self, n_rows: int) -> int:
        """Default ``N_is``: an even split, shrunk so each window keeps ``K + 1`` rows."""
        if self.N_is is not None:
            return self.N_is
        return max(1, min((n_rows + 1) // 2, n_rows - self.K))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(name: str, text: str, ftype):
    text = text.strip()
    if text.lower() in ("none", "auto", "") and name in ("P", "design", "sources", "N_is"):
        return None
    if name == "design":
        vals = tuple(int(v) for v in text.split(","))
        if len(vals) != 4:
            raise ValueError("design needs four integers N_vd, N_hd, N_vs, N_hs")
        return vals
    if name == "sources":
        out = []
        for item in text.split(","):
            t, p = item.split(":")
            out.append((float(t), float(p)))
        return tuple(out)
    if name == "snr_db":
        return tuple(float(v) for v in text.split(","))
    base = ftype if isinstance(ftype, type) else str(ftype)
    if base in (bool, "bool"):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {text!r}")
    if base in (int, "int", "int | None"):
        return int(text)
    if base in (float, "float"):
        return float(text)
    return text


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Build a config from ``key = value`` text plus keyword overrides."""
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       interpolation=None, delimiters=("=",))
    parser.optionxform = str
    parser.read_string("[experiment]\n" + text)
    fields = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        try:
            values[key] = _parse_value(key, raw, fields[key])
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: {exc}") from None
    for key, raw in overrides.items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, raw, fields[key]) if isinstance(raw, str) else raw
    return ExperimentConfig(**values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), **overrides)


def trial_sources(cfg: ExperimentConfig, trial: int) -> SourceSet:
    if cfg.sources is not None:
        t, p = zip(*cfg.sources)
        return SourceSet.from_degrees(t, p)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, trial]))
    return random_sources(cfg.K, rng, np.radians(cfg.min_separation_deg),
                          (np.radians(cfg.theta_min_deg), np.radians(cfg.theta_max_deg)))


@dataclass
class TrialResult:
    snr_db: float
    trial: int
    estimator: str
    theta_true: np.ndarray
    phi_true: np.ndarray
    theta_est: np.ndarray | None = None
    phi_est: np.ndarray | None = None
    err_az: np.ndarray | None = None
    err_el: np.ndarray | None = None
    failure: str | None = None
    seconds: float = 0.0


def run_trial(cfg: ExperimentConfig, snr_index: int, trial: int,
              model: CoarrayModel | None = None) -> list[TrialResult]:
    """One placement and one simulation, scored by every selected estimator."""
    model = model or cfg.model()
    snr = cfg.snr_db[snr_index]
    src = trial_sources(cfg, trial)
    Y = measurement_tensor(src, model, snr, cfg.M_t, cfg.N_snap, seed=[cfg.seed, trial, 1],
                           noise_mode=cfg.noise_mode, power=cfg.power(), steering=cfg.steering,
                           noise_seed=[cfg.seed, snr_index, trial])
    S = spatial_smooth(Y.Y_df, cfg.smoothing_windows(Y.Y_df.shape[0]))
    out = []
    for name in cfg.estimators:
        res = TrialResult(snr, trial, name, src.theta, src.phi)
        start = time.perf_counter()
        try:
            est = ESTIMATORS[name](S, cfg.K, model, np.radians(cfg.grid_step_deg))
            idx = match(src.theta, src.phi, est.theta, est.phi)
            res.theta_est, res.phi_est = est.theta[idx], est.phi[idx]
            res.err_az, res.err_el = matched_errors(src.theta, src.phi, est.theta, est.phi)
        except (EstimationError, np.linalg.LinAlgError, ValueError) as exc:
            res.failure = f"{type(exc).__name__}: {exc}"
        res.seconds = time.perf_counter() - start
        out.append(res)
    return out


def _run_job(args):
    cfg, snr_index, trial = args
    return run_trial(cfg, snr_index, trial)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult] = field(default_factory=list)

    def rmse_rows(self) -> list[dict]:
        rows = []
        for snr in self.config.snr_db:
            for name in self.config.estimators:
                sel = [t for t in self.trials if t.snr_db == snr and t.estimator == name]
                ok = [t for t in sel if t.failure is None]
                if ok:
                    az = np.concatenate([t.err_az for t in ok])
                    el = np.concatenate([t.err_el for t in ok])
                    r_az = float(np.degrees(np.sqrt(np.mean(az**2))))
                    r_el = float(np.degrees(np.sqrt(np.mean(el**2))))
                else:
                    r_az = r_el = float("nan")
                rows.append({"snr_db": snr, "estimator": name, "rmse_az_deg": r_az,
                             "rmse_el_deg": r_el, "n_fail": len(sel) - len(ok)})
        return rows

    def rmse(self, estimator: str = "tensor") -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rmse_rows() if r["estimator"] == estimator]
        return (np.array([r["rmse_az_deg"] for r in rows]), np.array([r["rmse_el_deg"] for r in rows]))

    def write_csv(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rmse_path, scatter_path = out / "rmse.csv", out / "scatter.csv"
        cols = ["snr_db", "estimator", "rmse_az_deg", "rmse_el_deg", "n_fail"]
        with rmse_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rmse_rows():
                w.writerow([repr(float(r["snr_db"])), r["estimator"], repr(r["rmse_az_deg"]),
                            repr(r["rmse_el_deg"]), r["n_fail"]])
        with scatter_path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["snr_db", "trial", "estimator", "device", "theta_true_deg", "phi_true_deg",
                        "theta_est_deg", "phi_est_deg"])
            for t in self.trials:
                if t.failure is not None:
                    continue
                for k in range(t.theta_true.size):
                    w.writerow([repr(float(t.snr_db)), t.trial, t.estimator, k,
                                *(repr(float(np.degrees(v))) for v in
                                  (t.theta_true[k], t.phi_true[k], t.theta_est[k], t.phi_est[k]))])
        return rmse_path, scatter_path


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """All SNR x trial combinations; CSVs are written to ``out_dir`` when given."""
    model = cfg.model()
    jobs = [(cfg, i, t) for i in range(len(cfg.snr_db)) for t in range(cfg.trials)]
    result = ExperimentResult(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            for res in pool.map(_run_job, jobs, chunksize=4):
                result.trials.extend(res)
    else:
        for _, i, t in jobs:
            result.trials.extend(run_trial(cfg, i, t, model))
    if out_dir is not None:
        result.write_csv(out_dir)
    return result
