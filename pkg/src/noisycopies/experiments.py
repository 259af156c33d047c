"""Named figure presets, config-driven runs and the verification suite.

Every run directory gets a ``manifest.json`` before any training starts.  Its
``config`` entry is itself a valid run config, so ``run --config
DIR/manifest.json --out OTHER`` regenerates byte-identical CSVs.
"""

import copy
import csv
import itertools
import json
import os
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__, mlp, oracle, trainers
from .data import (
    STANDARDIZE_CONVENTION,
    AugmentationSpec,
    Dataset,
    SyntheticSpec,
    gen_synthetic,
    load_csv,
    partition,
    standardize,
)
from .errors import ConfigError
from .numkit import RNG_IDENTITY, GaussSource, gauss_array

OUT_ENV = "NOISYCOPIES_OUT"
CURVE_HEADER = ["epoch", "regime", "criterion", "K", "tau", "eta", "lambda", "seed", "mse_original"]
DEFAULT_SEEDS = [0, 1, 2, 3, 4]

_N, _Q = 20, 4
_LINEAR = dict(kind="linear", n=_N, m=15, sigma_x=0.5, sigma=0.2, data_seed=0,
               tau=1.0, epochs=1000, rho=_N // _Q)

PRESETS = {
    "fig2a": dict(_LINEAR, criterion="SSE", eta=0.001, K=4),
    "fig2b": dict(_LINEAR, criterion="MSE", eta=0.001 * _N, K=4),
    "fig2c": dict(_LINEAR, criterion="MB", eta=0.001 * _Q, K=4),
    "fig2d": dict(_LINEAR, criterion="MB", eta=0.001 * _Q, K=1),
    "fig3a": dict(_LINEAR, m=100, tau=2.0, criterion="MB", eta=0.0001 * _Q, K=2, epochs=3000),
    "fig3b": dict(_LINEAR, m=100, tau=2.0, criterion="MB", eta=0.0001 * _Q, K=5, epochs=3000),
    # learning rates are chosen for the synthetic data, not the UCI values
    "fig4-synthetic": dict(kind="mlp", n=80, m=8, sigma_x=0.5, sigma=0.2, data_seed=0,
                           widths=[8, 32, 32, 1], K=2, tau=0.2, batch_size=20,
                           eta_mb=0.02, eta_fb=0.05, epochs=2000),
}


def default_out_root():
    return os.environ.get(OUT_ENV, "runs")


def _fmt(x):
    if x is None or x == "":
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_curve(path, curve, regime, criterion, K, tau, eta, lam, seed):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(CURVE_HEADER)
        fixed = [regime, criterion, _fmt(K), _fmt(tau), _fmt(eta), _fmt(lam), _fmt(seed)]
        for t, v in enumerate(curve):
            wr.writerow([t] + fixed + [_fmt(v)])


def read_curve(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["mse_original"]) for r in rows])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(config, outputs):
    return {
        "artifact": "noisycopies",
        "version": __version__,
        "rng": RNG_IDENTITY,
        "noise_sd": "tau / sqrt(n) per element",
        "standardize": STANDARDIZE_CONVENTION,
        "mlp_init": mlp.INIT_DESCRIPTION,
        "config": config,
        "outputs": outputs,
    }


# ---------------------------------------------------------------- presets


@dataclass
class PresetResult:
    name: str
    params: dict
    seeds: list
    out_dir: str
    curves: dict = field(default_factory=dict)  # (regime, criterion, seed) -> curve
    summary: list = field(default_factory=list)
    paths: list = field(default_factory=list)

    def curve(self, regime, seed=None, criterion=None):
        criterion = criterion or self.params.get("criterion")
        return self.curves[regime, criterion, seed]


def resolve_preset(name, overrides=None):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}", "preset")
    params = copy.deepcopy(PRESETS[name])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ConfigError(f"preset {name} has no field {key!r}", f"overrides.{key}")
        params[key] = value
    return params


def _preset_dataset(p):
    return gen_synthetic(SyntheticSpec(p["n"], p["m"], p["sigma_x"], p["sigma"], p["data_seed"]))


def _linear_plan(p, seeds):
    """(file stem, TrainerConfig, seed) for every run of a linear figure."""
    part = partition(p["n"], p["rho"]) if p["criterion"] == "MB" else None
    base = dict(criterion=p["criterion"], eta=p["eta"], epochs=p["epochs"], partition=part)
    aug0 = AugmentationSpec(p["K"], p["tau"], "online", seeds[0])
    da = trainers.TrainerConfig("da-online", aug=aug0, **base)
    plan = [("naive", trainers.TrainerConfig("naive", **base), None),
            ("ridge", trainers.ridge_equivalent(da, p["n"]), None)]
    for s in seeds:
        aug = AugmentationSpec(p["K"], p["tau"], "online", s)
        for regime in ("da-offline", "da-online"):
            plan.append((f"{regime}_seed{s}", trainers.TrainerConfig(regime, aug=aug, **base), s))
    return plan


def _mlp_plan(p, seeds):
    plan = []
    n_aug = p["n"] * (p["K"] + 1)
    for label, crit, eta in (("mb", "MB", p["eta_mb"]), ("fb", "MSE", p["eta_fb"])):
        for s in seeds:
            for regime, K in (("naive", 0), ("da-offline", p["K"])):
                bs = p["batch_size"] if crit == "MB" else (n_aug if K else p["n"])
                plan.append((f"{label}_{regime}_seed{s}", dict(regime=regime, criterion=crit, K=K,
                                                                eta=eta, batch_size=bs), s))
    return plan


def _summarize_linear(res, seeds):
    p = res.params
    crit = p["criterion"]
    ridge = res.curves["ridge" if crit != "MB" else "ridge-mb-equiv", crit, None]
    rows = []
    for regime in ("da-online", "da-offline"):
        for s in seeds:
            cd = oracle.compare_curves(res.curves[regime, crit, s], ridge)
            rows.append([f"{regime} vs ridge", s, cd.max_abs, cd.rms, cd.tail_gap])
        med = np.median([res.curves[regime, crit, s] for s in seeds], axis=0)
        cd = oracle.compare_curves(med, ridge)
        rows.append([f"{regime}-median vs ridge", "", cd.max_abs, cd.rms, cd.tail_gap])
    if len(seeds) > 1:
        pair = [oracle.compare_curves(res.curves["da-online", crit, a],
                                      res.curves["da-online", crit, b]).tail_gap
                for a, b in itertools.combinations(seeds, 2)]
        rows.append(["da-online pairwise p95 envelope", "", "", "", float(np.percentile(pair, 95))])
    return rows


def run_preset(name, out_dir=None, seeds=None, overrides=None):
    """Run every regime of a figure preset and write curves plus a summary."""
    params = resolve_preset(name, overrides)
    seeds = list(DEFAULT_SEEDS if seeds is None else seeds)
    if not seeds:
        raise ConfigError("seeds must be non-empty", "seeds")
    out_dir = out_dir or os.path.join(default_out_root(), name)
    os.makedirs(out_dir, exist_ok=True)
    res = PresetResult(name, params, seeds, out_dir)
    d = _preset_dataset(params)

    if params["kind"] == "linear":
        plan = _linear_plan(params, seeds)
    else:
        plan = _mlp_plan(params, seeds)
    outputs = [os.path.join(out_dir, f"{stem}.csv") for stem, _, _ in plan]
    outputs += [os.path.join(out_dir, "summary.csv")]
    _write_json(os.path.join(out_dir, "manifest.json"),
                _manifest({"preset": name, "overrides": overrides or {}, "seeds": seeds}, outputs))

    if params["kind"] == "linear":
        for (stem, cfg, s), path in zip(plan, outputs):
            traj = trainers.train(d, cfg)
            res.curves[cfg.regime, cfg.criterion, s] = traj.curve
            K = cfg.aug.K if cfg.aug is not None else 0
            tau = cfg.aug.tau if cfg.aug is not None else 0.0
            write_curve(path, traj.curve, cfg.regime, cfg.criterion, K, tau, cfg.eta, cfg.lam, s)
        res.summary = _summarize_linear(res, seeds)
    else:
        for (stem, run, s), path in zip(plan, outputs):
            spec = mlp.MlpSpec(tuple(params["widths"]), seed=s)
            aug = AugmentationSpec(run["K"], params["tau"], "offline", s)
            out = mlp.sgd_train(d, spec, aug, run["batch_size"], run["eta"], params["epochs"])
            res.curves[run["regime"], run["criterion"], s] = out.curve
            write_curve(path, out.curve, run["regime"], run["criterion"], run["K"],
                        params["tau"], run["eta"], 0.0, s)
        rows = []
        for crit in ("MB", "MSE"):
            for s in seeds:
                a = res.curves["naive", crit, s]
                b = res.curves["da-offline", crit, s]
                rows.append([f"{crit} first-epoch drop (da - naive)", s, "", "",
                             (b[0] - b[1]) - (a[0] - a[1])])
                rows.append([f"{crit} final (da - naive)", s, "", "", b[-1] - a[-1]])
        res.summary = rows
    with open(outputs[-1], "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["comparison", "seed", "max_abs", "rms", "tail_gap"])
        for row in res.summary:
            wr.writerow([row[0], _fmt(row[1])] + [_fmt(v) for v in row[2:]])
    res.paths = outputs
    return res


# ---------------------------------------------------------------- custom configs

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "preset": {"type": "string"},
        "overrides": {"type": "object"},
        "seeds": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "out": {"type": "string"},
        "dataset": {
            "type": "object",
            "properties": {
                "synthetic": {
                    "type": "object",
                    "properties": {
                        "n": {"type": "integer", "minimum": 1},
                        "m": {"type": "integer", "minimum": 2},
                        "sigma_x": {"type": "number", "exclusiveMinimum": 0},
                        "sigma": {"type": "number", "minimum": 0},
                        "seed": {"type": "integer"},
                    },
                    "required": ["n", "m"],
                    "additionalProperties": False,
                },
                "csv": {
                    "type": "object",
                    "properties": {
                        "path": {"type": "string"},
                        "target": {"type": "string"},
                        "standardize": {"type": "boolean"},
                    },
                    "required": ["path", "target"],
                    "additionalProperties": False,
                },
            },
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
        },
        "runs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "regime": {"enum": list(trainers.REGIMES)},
                    "criterion": {"enum": list(trainers.CRITERIA)},
                    "eta": {"type": "number", "exclusiveMinimum": 0},
                    "lambda": {"type": "number", "minimum": 0},
                    "epochs": {"type": "integer", "minimum": 0},
                    "rho": {"type": "integer", "minimum": 1},
                    "K": {"type": "integer", "minimum": 0},
                    "tau": {"type": "number", "minimum": 0},
                    "w0": {"type": "array", "items": {"type": "number"}},
                },
                "required": ["regime", "criterion", "eta", "epochs"],
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def _field_path(err):
    path = ""
    for part in err.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(cfg, dict) and "config" in cfg and "outputs" in cfg:
        cfg = cfg["config"]  # a run manifest
    return cfg


def validate_config(cfg):
    """Structural and semantic checks; errors name the offending field."""
    errors = sorted(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, _field_path(e))
    if "preset" in cfg:
        if "dataset" in cfg or "runs" in cfg:
            raise ConfigError("give either a preset or dataset+runs, not both", "preset")
        resolve_preset(cfg["preset"], cfg.get("overrides"))
        return
    for key in ("dataset", "runs"):
        if key not in cfg:
            raise ConfigError("required field missing", key)
    for i, run in enumerate(cfg["runs"]):
        where = f"runs[{i}]"
        if run["criterion"] == "MB" and "rho" not in run:
            raise ConfigError("mini-batch run needs a batch size", f"{where}.rho")
        if run["regime"].startswith("da-") or run["regime"] == "ridge-mb-equiv":
            for key in ("K", "tau"):
                if key not in run:
                    raise ConfigError(f"regime {run['regime']} needs {key}", f"{where}.{key}")
        if run["regime"] == "ridge-mb-equiv" and run["criterion"] != "MB":
            raise ConfigError("ridge-mb-equiv requires criterion MB", f"{where}.criterion")


def _config_dataset(spec):
    if "synthetic" in spec:
        s = spec["synthetic"]
        return gen_synthetic(SyntheticSpec(s["n"], s["m"], s.get("sigma_x", 0.5),
                                           s.get("sigma", 0.2), s.get("seed", 0)))
    c = spec["csv"]
    d = load_csv(c["path"], c["target"])
    return standardize(d) if c.get("standardize", True) else d


def _trainer_config(run, d, seed):
    part = partition(d.n, run["rho"]) if run["criterion"] == "MB" else None
    aug = None
    if "K" in run:
        aug = AugmentationSpec(run["K"], run.get("tau", 0.0), "online", seed)
    w0 = np.asarray(run["w0"], dtype=np.float64) if "w0" in run else None
    try:
        cfg = trainers.TrainerConfig(run["regime"], run["criterion"], run["eta"], run["epochs"],
                                     lam=run.get("lambda", 0.0), partition=part, aug=aug, w0=w0)
        if cfg.regime == "ridge-mb-equiv":
            from dataclasses import replace
            cfg = replace(cfg, lam=trainers.mb_ridge_lambda(aug.K, aug.tau, d.n))
        cfg.validate(d)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def run_custom(cfg, out_dir=None):
    """Execute a parsed config (preset or dataset+runs grid).

    Duplicate seeds are allowed; their output files get a ``_2``, ``_3`` ...
    suffix.
    """
    validate_config(cfg)
    if "preset" in cfg:
        return run_preset(cfg["preset"], out_dir or cfg.get("out"), cfg.get("seeds"),
                          cfg.get("overrides"))
    out_dir = out_dir or cfg.get("out") or os.path.join(default_out_root(), "custom")
    os.makedirs(out_dir, exist_ok=True)
    d = _config_dataset(cfg["dataset"])
    seeds = cfg.get("seeds", [0])
    jobs, seen = [], {}
    for i, run in enumerate(cfg["runs"]):
        for s in seeds:
            stem = f"run{i:02d}_{run['regime']}_{run['criterion']}_seed{s}"
            seen[stem] = seen.get(stem, 0) + 1
            if seen[stem] > 1:
                stem = f"{stem}_{seen[stem]}"
            try:
                tcfg = _trainer_config(run, d, s)
            except ConfigError as exc:
                raise ConfigError(str(exc), f"runs[{i}]") from None
            jobs.append((os.path.join(out_dir, stem + ".csv"), tcfg, s))
    resolved = dict(cfg)
    resolved.pop("out", None)
    _write_json(os.path.join(out_dir, "manifest.json"),
                _manifest(resolved, [j[0] for j in jobs]))
    results = {}
    for path, tcfg, s in jobs:
        traj = trainers.train(d, tcfg)
        K = tcfg.aug.K if tcfg.aug is not None else 0
        tau = tcfg.aug.tau if tcfg.aug is not None else 0.0
        write_curve(path, traj.curve, tcfg.regime, tcfg.criterion, K, tau, tcfg.eta, tcfg.lam, s)
        results[path] = traj
    return results


# ---------------------------------------------------------------- verification

VERIFY_DRAWS = {"quick": 1000, "full": 10000}


def random_instance(seed, n, m):
    """Random ``(Dataset, w)`` pair for oracle checks."""
    src = GaussSource(seed).child("instance", n, m)
    X = gauss_array(src.child("X"), (n, m))
    y = gauss_array(src.child("y"), (n,))
    w = gauss_array(src.child("w"), (m,))
    return Dataset(X, y), w


def run_verify(level="quick"):
    """Certificates for the expected-update claims; returns the list."""
    if level not in VERIFY_DRAWS:
        raise ConfigError(f"level must be one of {sorted(VERIFY_DRAWS)}", "level")
    n_draws = VERIFY_DRAWS[level]
    certs = []
    cases = [(0, 8, 4, 4, 1.0), (1, 10, 5, 2, 0.5), (2, 6, 3, 8, 2.0)]
    for seed, n, m, K, tau in cases:
        d, w = random_instance(seed, n, m)
        aug = AugmentationSpec(K, tau, "online", seed)
        for rule in ("sse", "mse"):
            certs.append(oracle.certify_expected_update(
                d, w, aug, rule, n_draws, claim_id=f"{rule}[n={n},m={m},K={K},tau={tau}]"))
    d, w = random_instance(3, 8, 3)
    part = partition(8, 2)
    aug = AugmentationSpec(2, 1.0, "online", 3)
    for k, q in ((0, 0), (1, 2), (2, 3)):
        certs.append(oracle.certify_expected_update(d, w, aug, ("mb", k, q), n_draws, part=part))
    aug0 = AugmentationSpec(4, 0.0, "online", 0)
    for rule in ("sse", "mse"):
        certs.append(oracle.certify_expected_update(d, w, aug0, rule, n_draws,
                                                    claim_id=f"{rule}[tau=0]"))
    return certs
